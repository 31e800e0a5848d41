fn main() {
    // RUST_LOG overrides; warnings (skipped resamples, non-converged folds) show by default
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(shapreg::cli::run(std::env::args_os()));
}

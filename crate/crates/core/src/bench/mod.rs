//! Benchmark harness: datasets, generators, metrics, nested CV and protocols.

pub mod cv;
pub mod dataset;
pub mod metrics;
pub mod protocols;
pub mod synth;

pub use cv::{
    default_c_grid, nested_cv, stratified_folds, CvConfig, CvReport, FoldReport, Summary,
};
pub use dataset::{load_csv, undersample, CsvOptions, Dataset, MissingPolicy};
pub use metrics::{metrics, metrics_from_scores, MetricSet, SelectionMetric};
pub use protocols::{
    bootstrap_stability, k_sweep_benchmark, noise_robustness, resource_profile, BootstrapReport,
    NoiseResult, ResourceProfile, SweepOptions, SweepReport,
};
pub use synth::{gen_pure_pairwise, gen_random_noise, PairwiseProvenance, PlantedPair};

//! Every file the CLI writes is checked against the documented schemas.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(schema: &str, doc: &Path) {
    let schema = load_json(&schema_dir().join(schema));
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let instance = load_json(doc);
    let msgs: Vec<String> = match compiled.validate(&instance) {
        Ok(()) => return,
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    panic!(
        "{} violates its schema:\n{}",
        doc.display(),
        msgs.join("\n")
    );
}

fn check_csv(columns: &Value, file: &Path, features: &[&str]) {
    let name = file.file_name().unwrap().to_str().unwrap();
    let spec: Vec<&str> = columns["files"][name]
        .as_array()
        .unwrap_or_else(|| panic!("no column spec for {name}"))
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let expected: Vec<&str> = spec
        .iter()
        .flat_map(|c| {
            if *c == "*" {
                features.to_vec()
            } else {
                vec![*c]
            }
        })
        .collect();
    let mut reader = csv::Reader::from_path(file).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, expected, "{name}");
    let rows = reader.records().map(|r| r.unwrap()).collect::<Vec<_>>();
    assert!(!rows.is_empty(), "{name} has no rows");
    assert!(
        rows.iter().all(|r| r.len() == expected.len()),
        "{name} is ragged"
    );
}

fn shapreg(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_shapreg"))
        .current_dir(dir)
        .args(["--out-dir", "."])
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "shapreg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn cli_outputs_match_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let columns = load_json(&schema_dir().join("csv_columns.json"));

    shapreg(
        d,
        &[
            "synth",
            "--generator",
            "pure-pairwise",
            "--features",
            "5",
            "--samples",
            "60",
        ],
    );
    shapreg(
        d,
        &[
            "synth",
            "--generator",
            "random-noise",
            "--features",
            "3",
            "--samples",
            "30",
        ],
    );
    check(
        "provenance.schema.json",
        &d.join("pure_pairwise.provenance.json"),
    );
    check(
        "provenance.schema.json",
        &d.join("random_noise.provenance.json"),
    );

    shapreg(
        d,
        &[
            "fit",
            "--dataset",
            "pure_pairwise.csv",
            "--label-column",
            "label",
            "--k",
            "2",
        ],
    );
    check("model.schema.json", &d.join("model.json"));
    check("fit_report.schema.json", &d.join("fit_report.json"));

    shapreg(
        d,
        &[
            "predict",
            "--model",
            "model.json",
            "--dataset",
            "pure_pairwise.csv",
            "--label-column",
            "label",
        ],
    );
    check_csv(&columns, &d.join("predictions.csv"), &[]);

    shapreg(
        d,
        &[
            "bench",
            "--dataset",
            "pure_pairwise.csv",
            "--label-column",
            "label",
            "--k",
            "2",
            "--lambda-grid",
            "1,10",
            "--save-models",
            "--resources",
        ],
    );
    check("cv_report.schema.json", &d.join("cv_report.json"));
    check_csv(&columns, &d.join("resources.csv"), &[]);
    let models: Vec<String> = fs::read_dir(d.join("models"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .inspect(|p| check("model.schema.json", p))
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    assert_eq!(models.len(), 5);

    let mut args = vec!["interactions", "--top-k", "3", "--models"];
    args.extend(models.iter().map(String::as_str));
    shapreg(d, &args);
    check_csv(&columns, &d.join("main_effects.csv"), &[]);
    check_csv(&columns, &d.join("interactions_ranked.csv"), &[]);
    let kept: Vec<String> = csv::Reader::from_path(d.join("interaction_mean.csv"))
        .unwrap()
        .headers()
        .unwrap()
        .iter()
        .skip(1)
        .map(String::from)
        .collect();
    assert_eq!(kept.len(), 3);
    let kept: Vec<&str> = kept.iter().map(String::as_str).collect();
    check_csv(&columns, &d.join("interaction_mean.csv"), &kept);
    check_csv(&columns, &d.join("interaction_support.csv"), &kept);

    shapreg(
        d,
        &[
            "bench",
            "--dataset",
            "pure_pairwise.csv",
            "--label-column",
            "label",
            "--sweep-k",
            "--k-values",
            "1,2",
            "--penalties",
            "none,l2",
            "--lambda-grid",
            "1",
            "--noise-repeats",
            "2",
            "--bootstrap-resamples",
            "3",
        ],
    );
    check("sweep_report.schema.json", &d.join("sweep_report.json"));
    check_csv(&columns, &d.join("summary.csv"), &[]);

    shapreg(
        d,
        &[
            "bounds",
            "--experiment",
            "all",
            "--c-values",
            "0.1,1",
            "--repeats",
            "2",
            "--gap-features",
            "3",
            "--gap-samples",
            "40",
            "--k-values",
            "1,2",
            "--iterations",
            "1",
        ],
    );
    check("bounds_report.schema.json", &d.join("bounds_report.json"));
    for f in ["stability.csv", "gap.csv", "bound_curves.csv"] {
        check_csv(&columns, &d.join(f), &[]);
    }
}

#[test]
fn schemas_reject_malformed_models() {
    let schema = load_json(&schema_dir().join("model.schema.json"));
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let good = serde_json::json!({
        "n": 2, "k": 1, "bias": 0.0, "normalization": [[0.0, 1.0], [0.0, 1.0]],
        "feature_names": ["a", "b"], "indices": [0.5, -0.5]
    });
    assert!(compiled.is_valid(&good));
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("bias");
    assert!(!compiled.is_valid(&missing));
    let mut extra = good;
    extra["weights"] = serde_json::json!([]);
    assert!(!compiled.is_valid(&extra));
}

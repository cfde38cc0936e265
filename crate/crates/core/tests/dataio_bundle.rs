use std::fs;
use std::path::Path;

use metaweight::dataio::{format_float, load_bundle, to_canonical_json, write_bundle, EvalReport, TraceBundle};
use metaweight::metrics::{confusion, report};
use metaweight::synth::{build_bundle, SplitSizes, SynthModelSpec, SynthWorldSpec};
use proptest::prelude::*;

fn synthetic(keep_epoch_preds: bool) -> TraceBundle {
    let world = SynthWorldSpec {
        num_classes: 3,
        class_names: Some(vec!["early_blight".into(), "healthy".into(), "late_blight".into()]),
        samples: SplitSizes { train: 40, val: 30, test: 25 },
        class_priors: None,
        correlation: 0.2,
        epochs: 4,
        seed: 9,
    };
    let model = |name: &str, params: u64, fin: f64| SynthModelSpec {
        name: name.into(),
        param_count: params,
        initial_accuracy: 0.5,
        final_accuracy: fin,
        time_constant: 2.0,
        peak_mass: 0.6,
        jitter: 0.3,
        confusion_bias: None,
        latency_ms: Some(3.5),
    };
    build_bundle(
        &world,
        &[model("MobileNetV2", 417_284, 0.9), model("NASNetMobile", 174_420, 0.85), model("InceptionV3", 402_308, 0.88)],
        keep_epoch_preds,
    )
    .unwrap()
}

fn written(bundle: &TraceBundle) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(bundle, dir.path()).unwrap();
    dir
}

#[test]
fn round_trip_is_exact() {
    let bundle = synthetic(true);
    let dir = written(&bundle);
    let loaded = load_bundle(dir.path()).unwrap();
    assert_eq!(loaded, bundle);

    // writing the loaded bundle reproduces the files byte for byte
    let again = written(&loaded);
    for rel in ["manifest.json", "labels_test.csv", "models/NASNetMobile/preds_test.csv", "models/NASNetMobile/accuracy_trace.csv", "models/InceptionV3/epoch_2/preds_val.csv"] {
        assert_eq!(fs::read(dir.path().join(rel)).unwrap(), fs::read(again.path().join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn backbone_parameter_counts_survive() {
    let bundle = synthetic(false);
    let loaded = load_bundle(written(&bundle).path()).unwrap();
    let counts: Vec<u64> = loaded.profiles().iter().map(|p| p.param_count).collect();
    assert_eq!(counts, [417_284, 174_420, 402_308]);
    assert_eq!(counts.iter().sum::<u64>(), 994_012);
}

#[test]
fn file_layout() {
    let dir = written(&synthetic(false));
    let root = dir.path();
    let text = |rel: &str| fs::read_to_string(root.join(rel)).unwrap();
    assert!(text("labels_val.csv").starts_with("label\n"));
    assert!(text("models/MobileNetV2/preds_test.csv").starts_with("c0,c1,c2\n"));
    let trace = text("models/MobileNetV2/accuracy_trace.csv");
    assert!(trace.starts_with("epoch,train_acc,val_acc\n1,"));
    assert_eq!(trace.lines().count(), 5);
    let manifest: serde_json::Value = serde_json::from_str(&text("manifest.json")).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["splits"], serde_json::json!(["train", "val", "test"]));
    assert_eq!(manifest["models"][1]["param_count"], 174_420);
}

fn replace_line(path: &Path, line: usize, with: &str) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[line - 1] = with.to_string();
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn rejects_row_not_summing_to_one() {
    let dir = written(&synthetic(false));
    let file = dir.path().join("models/NASNetMobile/preds_test.csv");
    replace_line(&file, 4, "0.5,0.3,0.1");
    let err = load_bundle(dir.path()).unwrap_err();
    assert_eq!(err.name(), "BadProbabilityRow");
    let msg = err.to_string();
    assert!(msg.contains("NASNetMobile/preds_test.csv") && msg.contains(":4:"), "{msg}");
}

#[test]
fn rejects_missing_or_inconsistent_files() {
    let dir = written(&synthetic(false));
    fs::remove_file(dir.path().join("labels_test.csv")).unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "MissingFile");

    let dir = written(&synthetic(false));
    let file = dir.path().join("models/InceptionV3/preds_test.csv");
    let text = fs::read_to_string(&file).unwrap();
    fs::write(&file, text.lines().take(10).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "RowCountMismatch");

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(load_bundle(empty.path()).unwrap_err().name(), "MissingManifest");

    let dir = written(&synthetic(false));
    let path = dir.path().join("manifest.json");
    let text = fs::read_to_string(&path).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 2");
    fs::write(&path, text).unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "SchemaVersionUnsupported");
}

#[test]
fn traces_derive_from_epoch_predictions() {
    let bundle = synthetic(true);
    let dir = written(&bundle);
    for m in bundle.model_names() {
        fs::remove_file(dir.path().join(format!("models/{m}/accuracy_trace.csv"))).unwrap();
    }
    let loaded = load_bundle(dir.path()).unwrap();
    for (a, b) in loaded.models().iter().zip(bundle.models()) {
        assert_eq!(a.trace.val(), b.trace.val());
        assert!(a.trace.train().is_none());
    }

    let dir = written(&synthetic(false));
    fs::remove_file(dir.path().join("models/MobileNetV2/accuracy_trace.csv")).unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "MissingFile");
}

#[test]
fn relaxed_tolerance_is_declared_per_bundle() {
    let dir = written(&synthetic(false));
    let file = dir.path().join("models/MobileNetV2/preds_test.csv");
    replace_line(&file, 2, "0.33335,0.33335,0.33335");
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "BadProbabilityRow");
    let path = dir.path().join("manifest.json");
    let text = fs::read_to_string(&path).unwrap().replacen('{', "{\n  \"row_sum_tolerance\": 0.0001,", 1);
    fs::write(&path, text).unwrap();
    assert!(load_bundle(dir.path()).is_ok());
}

#[test]
fn report_reserializes_identically() {
    let bundle = synthetic(false);
    let labels = bundle.test_labels();
    let pred = metaweight::inference::predict_single(&bundle.models()[0].test_preds);
    let cm = confusion(labels, &pred, 3).unwrap();
    let report = EvalReport {
        config: serde_json::json!({"delta": 0.1, "mode": "dynamic", "lambda_init": 0.5}),
        mode: "dynamic".into(),
        models: bundle.model_names(),
        trajectory: vec![],
        final_weights: vec![0.1 + 0.2, 1.0 / 3.0, 0.5],
        classification: report(&cm).unwrap(),
        confusion: cm,
        standalone: vec![],
        latency: None,
        ablation: None,
        pareto: None,
    };
    let text = to_canonical_json(&report).unwrap();
    let parsed: EvalReport = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, report);
    assert_eq!(to_canonical_json(&parsed).unwrap(), text);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(to_canonical_json(&value).unwrap(), text);
    // keys are sorted
    let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_model_names_are_rejected() {
    let bundle = synthetic(false);
    let dir = written(&bundle);
    let path = dir.path().join("manifest.json");
    let text = fs::read_to_string(&path).unwrap().replace("\"NASNetMobile\"", "\"../escape\"");
    fs::write(&path, text).unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap_err().name(), "InvalidConfig");
}

proptest! {
    #[test]
    fn floats_round_trip_with_nine_digits(x in prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL) {
        let s = format_float(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        let digits = s.trim_start_matches('-').trim_start_matches(['0', '.']).chars().filter(char::is_ascii_digit).count();
        prop_assert!(digits >= 9 || x == 0.0);
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::format::{format_float, to_canonical_json, write_text};
use super::{derive_accuracy, Split};
use crate::error::{Error, Result};
use crate::types::{check_row, validate_profiles, AccuracyTrace, LabelVector, ModelProfile, PredictionMatrix, ROW_SUM_TOLERANCE};

pub const SCHEMA_VERSION: u64 = 1;

const TRACE_HEADER: [&str; 3] = ["epoch", "train_acc", "val_acc"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u64,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub epochs: usize,
    pub seed: u64,
    pub models: Vec<ModelProfile>,
    pub splits: Vec<Split>,
    /// Row-sum tolerance for this bundle's prediction files. Exporters
    /// writing float32 softmax outputs declare 1e-4 here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_sum_tolerance: Option<f64>,
}

impl Manifest {
    pub fn tolerance(&self) -> f64 {
        self.row_sum_tolerance.unwrap_or(ROW_SUM_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub profile: ModelProfile,
    pub trace: AccuracyTrace,
    pub test_preds: PredictionMatrix,
    /// Optional per-epoch matrices keyed by (1-based epoch, split).
    pub epoch_preds: BTreeMap<(usize, Split), PredictionMatrix>,
}

/// A validated, immutable multi-model experiment record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBundle {
    manifest: Manifest,
    labels: BTreeMap<Split, LabelVector>,
    models: Vec<ModelRecord>,
}

impl TraceBundle {
    pub fn new(manifest: Manifest, labels: BTreeMap<Split, LabelVector>, models: Vec<ModelRecord>) -> Result<Self> {
        validate_manifest(&manifest)?;
        let declared: Vec<Split> = labels.keys().copied().collect();
        let mut wanted = manifest.splits.clone();
        wanted.sort();
        wanted.dedup();
        if declared != wanted {
            return Err(Error::ShapeMismatch(format!(
                "manifest declares splits {:?} but labels cover {:?}",
                manifest.splits, declared
            )));
        }
        for (split, l) in &labels {
            if l.num_classes() != manifest.num_classes {
                return Err(Error::ShapeMismatch(format!("labels_{split} class count differs from manifest")));
            }
        }
        if models.len() != manifest.models.len() || models.iter().zip(&manifest.models).any(|(m, p)| &m.profile != p) {
            return Err(Error::ShapeMismatch("model records do not match manifest models".into()));
        }
        let n_test = labels[&Split::Test].len();
        for m in &models {
            let name = &m.profile.name;
            if m.trace.epochs() != manifest.epochs {
                return Err(Error::UnequalEpochCounts(manifest.epochs, m.trace.epochs()));
            }
            check_matrix(&m.test_preds, manifest.num_classes, n_test, &format!("{name}/preds_test"))?;
            for ((epoch, split), preds) in &m.epoch_preds {
                let expected = labels
                    .get(split)
                    .ok_or_else(|| Error::ShapeMismatch(format!("{name}: epoch predictions for undeclared split {split}")))?
                    .len();
                if *epoch == 0 || *epoch > manifest.epochs {
                    return Err(Error::ShapeMismatch(format!("{name}: epoch {epoch} outside 1..={}", manifest.epochs)));
                }
                check_matrix(preds, manifest.num_classes, expected, &format!("{name}/epoch_{epoch}/preds_{split}"))?;
            }
        }
        Ok(Self {
            manifest,
            labels,
            models,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.num_classes
    }

    pub fn models(&self) -> &[ModelRecord] {
        &self.models
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.profile.name.clone()).collect()
    }

    pub fn profiles(&self) -> Vec<ModelProfile> {
        self.models.iter().map(|m| m.profile.clone()).collect()
    }

    pub fn traces(&self) -> Vec<AccuracyTrace> {
        self.models.iter().map(|m| m.trace.clone()).collect()
    }

    pub fn test_preds(&self) -> Vec<&PredictionMatrix> {
        self.models.iter().map(|m| &m.test_preds).collect()
    }

    pub fn labels(&self, split: Split) -> Option<&LabelVector> {
        self.labels.get(&split)
    }

    pub fn test_labels(&self) -> &LabelVector {
        &self.labels[&Split::Test]
    }

    /// The same bundle restricted to `names`, in the given order.
    pub fn select_models<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let models = names
            .iter()
            .map(|n| {
                self.models
                    .iter()
                    .find(|m| m.profile.name == n.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::UnknownModel(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            models: models.iter().map(|m| m.profile.clone()).collect(),
            ..self.manifest.clone()
        };
        Self::new(manifest, self.labels.clone(), models)
    }
}

fn check_matrix(m: &PredictionMatrix, num_classes: usize, rows: usize, what: &str) -> Result<()> {
    if m.num_classes() != num_classes {
        return Err(Error::ShapeMismatch(format!("{what}: {} classes, expected {num_classes}", m.num_classes())));
    }
    if m.num_samples() != rows {
        return Err(Error::RowCountMismatch {
            file: PathBuf::from(what),
            rows: m.num_samples(),
            expected: rows,
        });
    }
    Ok(())
}

fn validate_manifest(manifest: &Manifest) -> Result<()> {
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersionUnsupported(manifest.schema_version));
    }
    if manifest.num_classes < 2 {
        return Err(Error::ShapeMismatch("bundles need at least 2 classes".into()));
    }
    if manifest.class_names.len() != manifest.num_classes {
        return Err(Error::ShapeMismatch(format!(
            "{} class names for {} classes",
            manifest.class_names.len(),
            manifest.num_classes
        )));
    }
    if manifest.epochs == 0 {
        return Err(Error::NonPositiveCount {
            what: "manifest epochs".into(),
        });
    }
    if !manifest.splits.contains(&Split::Test) {
        return Err(Error::ShapeMismatch("manifest must declare the test split".into()));
    }
    if let Some(tol) = manifest.row_sum_tolerance {
        if !(tol > 0.0 && tol < 0.1) {
            return Err(Error::InvalidConfig(format!("row_sum_tolerance {tol} outside (0, 0.1)")));
        }
    }
    if let Some(bad) = manifest
        .models
        .iter()
        .find(|m| m.name.is_empty() || m.name == "." || m.name == ".." || m.name.contains(['/', '\\', ',']))
    {
        return Err(Error::InvalidConfig(format!("model name `{}` is not a plain directory name", bad.name)));
    }
    validate_profiles(&manifest.models)
}

fn labels_path(root: &Path, split: Split) -> PathBuf {
    root.join(format!("labels_{split}.csv"))
}

fn model_dir(root: &Path, name: &str) -> PathBuf {
    root.join("models").join(name)
}

fn epoch_preds_path(root: &Path, name: &str, epoch: usize, split: Split) -> PathBuf {
    model_dir(root, name).join(format!("epoch_{epoch}")).join(format!("preds_{split}.csv"))
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| parse_error(path, e))
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        file: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn expect_header(reader: &mut csv::Reader<fs::File>, path: &Path, expected: &[String]) -> Result<()> {
    let header = reader.headers().map_err(|e| parse_error(path, e))?;
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_error(
            path,
            format!("header `{}`, expected `{}`", header.iter().collect::<Vec<_>>().join(","), expected.join(",")),
        ));
    }
    Ok(())
}

fn read_labels(path: &Path, num_classes: usize) -> Result<LabelVector> {
    read_label_file(path, Some(num_classes))
}

/// Reads a one-column CSV with header `label`. Without `num_classes` the
/// class count is the largest label plus one.
pub fn read_label_file(path: &Path, num_classes: Option<usize>) -> Result<LabelVector> {
    let mut reader = open_csv(path)?;
    expect_header(&mut reader, path, &["label".to_string()])?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let label: usize = record[0]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, format!("line {line}: {e}")))?;
        if let Some(k) = num_classes.filter(|&k| label >= k) {
            return Err(parse_error(path, format!("line {line}: label {label} >= {k}")));
        }
        labels.push(label);
    }
    let num_classes = match num_classes {
        Some(k) => k,
        None => labels.iter().max().map_or(0, |&m| m + 1),
    };
    LabelVector::new(num_classes, labels)
}

/// A one-column CSV: `header` followed by one integer per line.
pub fn column_csv(header: &str, values: &[usize]) -> String {
    let mut out = format!("{header}\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

fn read_preds(path: &Path, num_classes: usize, tolerance: f64) -> Result<PredictionMatrix> {
    let mut reader = open_csv(path)?;
    let header: Vec<String> = (0..num_classes).map(|c| format!("c{c}")).collect();
    expect_header(&mut reader, path, &header)?;
    let mut probs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line()) as usize;
        let bad_row = |reason: String| Error::BadProbabilityRow {
            file: path.to_path_buf(),
            line,
            reason,
        };
        let row = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad_row(e.to_string()))?;
        check_row(&row, tolerance).map_err(bad_row)?;
        probs.extend(row);
    }
    PredictionMatrix::with_tolerance(num_classes, probs, tolerance)
}

fn read_trace(path: &Path, epochs: usize) -> Result<AccuracyTrace> {
    let mut reader = open_csv(path)?;
    expect_header(&mut reader, path, &TRACE_HEADER.map(String::from))?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |msg: String| parse_error(path, format!("line {line}: {msg}"));
        let epoch: usize = record[0].parse().map_err(|e| err(format!("{e}")))?;
        if epoch != i + 1 {
            return Err(err(format!("epoch {epoch}, expected {}", i + 1)));
        }
        let cell = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| err(format!("{e}")))
            }
        };
        train.push(cell(&record[1])?);
        val.push(cell(&record[2])?);
    }
    if train.len() != epochs {
        return Err(Error::RowCountMismatch {
            file: path.to_path_buf(),
            rows: train.len(),
            expected: epochs,
        });
    }
    let column = |values: Vec<Option<f64>>, name: &str| -> Result<Option<Vec<f64>>> {
        match values.iter().filter(|v| v.is_some()).count() {
            0 => Ok(None),
            n if n == values.len() => Ok(Some(values.into_iter().flatten().collect())),
            _ => Err(parse_error(path, format!("column {name} is only partly filled"))),
        }
    };
    AccuracyTrace::new(column(train, "train_acc")?, column(val, "val_acc")?)
        .map_err(|e| parse_error(path, e))
}

fn load_model(root: &Path, manifest: &Manifest, profile: &ModelProfile, labels: &BTreeMap<Split, LabelVector>) -> Result<ModelRecord> {
    let dir = model_dir(root, &profile.name);
    let k = manifest.num_classes;
    let tol = manifest.tolerance();

    let test_path = dir.join("preds_test.csv");
    let test_preds = read_preds(&test_path, k, tol)?;
    expect_rows(&test_path, test_preds.num_samples(), labels[&Split::Test].len())?;

    let mut epoch_preds = BTreeMap::new();
    for epoch in 1..=manifest.epochs {
        for (&split, split_labels) in labels {
            let path = epoch_preds_path(root, &profile.name, epoch, split);
            if path.is_file() {
                let preds = read_preds(&path, k, tol)?;
                expect_rows(&path, preds.num_samples(), split_labels.len())?;
                epoch_preds.insert((epoch, split), preds);
            }
        }
    }

    let trace_path = dir.join("accuracy_trace.csv");
    let trace = if trace_path.is_file() {
        read_trace(&trace_path, manifest.epochs)?
    } else {
        let derive = |split: Split| -> Result<Option<Vec<f64>>> {
            let Some(split_labels) = labels.get(&split) else {
                return Ok(None);
            };
            (1..=manifest.epochs)
                .map(|t| epoch_preds.get(&(t, split)).map(|p| derive_accuracy(p, split_labels)))
                .collect::<Option<Result<Vec<f64>>>>()
                .transpose()
        };
        let (train, val) = (derive(Split::Train)?, derive(Split::Val)?);
        if train.is_none() && val.is_none() {
            return Err(Error::MissingFile(trace_path));
        }
        AccuracyTrace::new(train, val)?
    };

    Ok(ModelRecord {
        profile: profile.clone(),
        trace,
        test_preds,
        epoch_preds,
    })
}

fn expect_rows(path: &Path, rows: usize, expected: usize) -> Result<()> {
    if rows != expected {
        return Err(Error::RowCountMismatch {
            file: path.to_path_buf(),
            rows,
            expected,
        });
    }
    Ok(())
}

/// Reads and fully validates a bundle directory.
///
/// Accuracy traces missing on disk are derived from per-epoch prediction
/// files when those cover every epoch.
pub fn load_bundle(root: impl AsRef<Path>) -> Result<TraceBundle> {
    let root = root.as_ref();
    let manifest_path = root.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(root.to_path_buf()));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(&manifest_path, e))?;
    match raw.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(Error::SchemaVersionUnsupported(other)),
        None => return Err(parse_error(&manifest_path, "missing schema_version")),
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| parse_error(&manifest_path, e))?;
    validate_manifest(&manifest)?;

    let mut splits = manifest.splits.clone();
    splits.sort();
    splits.dedup();
    let labels = splits
        .iter()
        .map(|&s| read_labels(&labels_path(root, s), manifest.num_classes).map(|l| (s, l)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    // first error in manifest order, regardless of which thread hit it
    let models: Vec<Result<ModelRecord>> = manifest
        .models
        .par_iter()
        .map(|p| load_model(root, &manifest, p, &labels))
        .collect();
    let models = models.into_iter().collect::<Result<Vec<_>>>()?;
    TraceBundle::new(manifest, labels, models)
}

fn preds_csv(preds: &PredictionMatrix) -> String {
    let header: Vec<String> = (0..preds.num_classes()).map(|c| format!("c{c}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in preds.rows() {
        let cells: Vec<String> = row.iter().map(|&p| format_float(p)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn trace_csv(trace: &AccuracyTrace) -> String {
    let mut out = TRACE_HEADER.join(",");
    out.push('\n');
    let cell = |v: Option<&[f64]>, i: usize| v.map(|v| format_float(v[i])).unwrap_or_default();
    for i in 0..trace.epochs() {
        out.push_str(&format!("{},{},{}\n", i + 1, cell(trace.train(), i), cell(trace.val(), i)));
    }
    out
}

/// Writes `bundle` under `root`, creating directories as needed.
pub fn write_bundle(bundle: &TraceBundle, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    write_text(&root.join("manifest.json"), &to_canonical_json(&bundle.manifest)?)?;
    for (&split, labels) in &bundle.labels {
        write_text(&labels_path(root, split), &column_csv("label", labels.as_slice()))?;
    }
    for m in &bundle.models {
        let dir = model_dir(root, &m.profile.name);
        write_text(&dir.join("accuracy_trace.csv"), &trace_csv(&m.trace))?;
        write_text(&dir.join("preds_test.csv"), &preds_csv(&m.test_preds))?;
        for ((epoch, split), preds) in &m.epoch_preds {
            write_text(&epoch_preds_path(root, &m.profile.name, *epoch, *split), &preds_csv(preds))?;
        }
    }
    Ok(())
}

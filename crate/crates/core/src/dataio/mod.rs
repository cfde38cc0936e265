//! The trace-bundle directory format and report serialization.
//!
//! ```text
//! bundle/
//!   manifest.json
//!   labels_{train,val,test}.csv            header `label`
//!   models/{name}/accuracy_trace.csv       header `epoch,train_acc,val_acc`
//!   models/{name}/preds_test.csv           header `c0,...,c{K-1}`
//!   models/{name}/epoch_{t}/preds_{split}.csv   optional
//! ```
//!
//! Row order in every prediction file matches the corresponding labels file.

mod bundle;
mod format;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bundle::{column_csv, load_bundle, read_label_file, write_bundle, Manifest, ModelRecord, TraceBundle, SCHEMA_VERSION};
pub use format::{format_float, to_canonical_json, write_text, MIN_SIGNIFICANT_DIGITS};
pub use report::{EvalReport, ModelAccuracy, TrainingRecord, TrajectoryPoint};

use crate::error::{Error, Result};
use crate::inference::argmax;
use crate::types::{LabelVector, PredictionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fraction of rows whose argmax equals the label.
pub fn derive_accuracy(preds: &PredictionMatrix, labels: &LabelVector) -> Result<f64> {
    if preds.num_samples() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} prediction rows vs {} labels",
            preds.num_samples(),
            labels.len()
        )));
    }
    if preds.num_classes() != labels.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "{} prediction classes vs {} label classes",
            preds.num_classes(),
            labels.num_classes()
        )));
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let hits = preds.rows().zip(labels.as_slice()).filter(|(row, &y)| argmax(row) == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_from_predictions() {
        let labels = LabelVector::new(3, vec![0, 2, 1, 1]).unwrap();
        let onehot = PredictionMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(derive_accuracy(&onehot, &labels).unwrap(), 1.0);

        let half = PredictionMatrix::from_rows(&[
            vec![0.6, 0.3, 0.1],
            vec![0.5, 0.2, 0.3],
            vec![0.1, 0.8, 0.1],
            vec![0.4, 0.3, 0.3],
        ])
        .unwrap();
        assert_eq!(derive_accuracy(&half, &labels).unwrap(), 0.5);

        let uniform = PredictionMatrix::new(3, vec![1.0 / 3.0; 12]).unwrap();
        let labels = LabelVector::new(3, vec![0, 0, 0, 2]).unwrap();
        assert_eq!(derive_accuracy(&uniform, &labels).unwrap(), 0.75);

        let short = LabelVector::new(3, vec![0]).unwrap();
        assert_eq!(derive_accuracy(&uniform, &short).unwrap_err().name(), "ShapeMismatch");
    }
}

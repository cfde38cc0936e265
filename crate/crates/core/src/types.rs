//! Domain types shared by every stage of the pipeline.
//!
//! All types validate on construction and are immutable afterwards, so a
//! value that exists has already passed its invariants.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on probability row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Identity and size of one base classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    /// Number of trainable parameters.
    pub param_count: u64,
    /// Shapes of the trainable weight tensors, one tuple per layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_shapes: Option<Vec<Vec<u64>>>,
    /// Measured single-input forward time in milliseconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

impl ModelProfile {
    pub fn new(name: impl Into<String>, param_count: u64) -> Self {
        Self {
            name: name.into(),
            param_count,
            layer_shapes: None,
            latency_ms: None,
        }
    }

    /// Builds a profile whose parameter count is derived from layer shapes.
    pub fn from_layers(name: impl Into<String>, layer_shapes: Vec<Vec<u64>>) -> Result<Self> {
        let name = name.into();
        let param_count = count_parameters(&layer_shapes).ok_or_else(|| Error::NonPositiveCount {
            what: format!("parameter count of `{name}` (overflow)"),
        })?;
        let profile = Self {
            name,
            param_count,
            layer_shapes: Some(layer_shapes),
            latency_ms: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.param_count == 0 {
            return Err(Error::NonPositiveCount {
                what: format!("param_count of `{}`", self.name),
            });
        }
        if let Some(shapes) = &self.layer_shapes {
            let from_layers = count_parameters(shapes).ok_or_else(|| Error::NonPositiveCount {
                what: format!("parameter count of `{}` (overflow)", self.name),
            })?;
            if from_layers != self.param_count {
                return Err(Error::MismatchedParamCount {
                    model: self.name.clone(),
                    declared: self.param_count,
                    from_layers,
                });
            }
        }
        if let Some(latency) = self.latency_ms {
            if !(latency.is_finite() && latency > 0.0) {
                return Err(Error::NonPositiveCount {
                    what: format!("latency_ms of `{}`", self.name),
                });
            }
        }
        Ok(())
    }
}

/// Free-function form of [`ModelProfile::validate`].
pub fn validate_profile(profile: &ModelProfile) -> Result<()> {
    profile.validate()
}

/// Total trainable parameters: the sum over layers of the product of each
/// layer's dimensions. `None` on overflow.
pub fn count_parameters(layer_shapes: &[Vec<u64>]) -> Option<u64> {
    layer_shapes.iter().try_fold(0u64, |total, dims| {
        let layer = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d))?;
        total.checked_add(layer)
    })
}

/// Checks a set of profiles for use as one ensemble.
pub fn validate_profiles(profiles: &[ModelProfile]) -> Result<()> {
    let mut seen = HashSet::new();
    for p in profiles {
        p.validate()?;
        if !seen.insert(p.name.as_str()) {
            return Err(Error::DuplicateModelName(p.name.clone()));
        }
    }
    Ok(())
}

/// Row-major matrix of per-class probability distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    num_classes: usize,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    /// Validates rows against [`ROW_SUM_TOLERANCE`].
    pub fn new(num_classes: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(num_classes, probs, ROW_SUM_TOLERANCE)
    }

    /// Rows failing the tolerance are rejected, never renormalized.
    pub fn with_tolerance(num_classes: usize, probs: Vec<f64>, tolerance: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::ShapeMismatch(format!(
                "prediction matrices need at least 2 classes, got {num_classes}"
            )));
        }
        if !probs.len().is_multiple_of(num_classes) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not fill rows of {num_classes}",
                probs.len()
            )));
        }
        for (row, values) in probs.chunks_exact(num_classes).enumerate() {
            check_row(values, tolerance).map_err(|reason| Error::InvalidProbabilityRow { row, reason })?;
        }
        Ok(Self { num_classes, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_classes) {
            return Err(Error::ShapeMismatch("ragged prediction rows".into()));
        }
        Self::new(num_classes, rows.concat())
    }

    pub fn num_samples(&self) -> usize {
        self.probs.len() / self.num_classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.probs.chunks_exact(self.num_classes)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut probs = Vec::with_capacity(indices.len() * self.num_classes);
        for &i in indices {
            probs.extend_from_slice(self.row(i));
        }
        Self {
            num_classes: self.num_classes,
            probs,
        }
    }
}

/// Returns a description of the violation, if any.
pub(crate) fn check_row(values: &[f64], tolerance: f64) -> std::result::Result<(), String> {
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format!("has entry {v} outside [0, 1]"));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(format!("sums to {sum}, not 1 within {tolerance:e}"));
    }
    Ok(())
}

/// Per-epoch accuracies of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTrace {
    train: Option<Vec<f64>>,
    val: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AccuracySource {
    Train,
    #[default]
    Validation,
}

impl AccuracySource {
    pub fn as_str(self) -> &'static str {
        match self {
            AccuracySource::Train => "train",
            AccuracySource::Validation => "validation",
        }
    }
}

impl AccuracyTrace {
    pub fn new(train: Option<Vec<f64>>, val: Option<Vec<f64>>) -> Result<Self> {
        let epochs = match (&train, &val) {
            (None, None) => {
                return Err(Error::ShapeMismatch(
                    "accuracy trace needs train or validation values".into(),
                ))
            }
            (Some(t), Some(v)) if t.len() != v.len() => return Err(Error::LengthMismatch(t.len(), v.len())),
            (Some(t), _) => t.len(),
            (None, Some(v)) => v.len(),
        };
        if epochs == 0 {
            return Err(Error::NonPositiveCount {
                what: "epoch count".into(),
            });
        }
        for v in train.iter().chain(val.iter()).flatten() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::ShapeMismatch(format!("accuracy {v} outside [0, 1]")));
            }
        }
        Ok(Self { train, val })
    }

    pub fn validation(val: Vec<f64>) -> Result<Self> {
        Self::new(None, Some(val))
    }

    pub fn epochs(&self) -> usize {
        self.train.as_ref().or(self.val.as_ref()).map_or(0, Vec::len)
    }

    pub fn train(&self) -> Option<&[f64]> {
        self.train.as_deref()
    }

    pub fn val(&self) -> Option<&[f64]> {
        self.val.as_deref()
    }

    pub fn get(&self, source: AccuracySource) -> Option<&[f64]> {
        match source {
            AccuracySource::Train => self.train(),
            AccuracySource::Validation => self.val(),
        }
    }
}

/// Ground-truth class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    num_classes: usize,
    labels: Vec<usize>,
}

impl LabelVector {
    pub fn new(num_classes: usize, labels: Vec<usize>) -> Result<Self> {
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(Self { num_classes, labels })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            num_classes: self.num_classes,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SizeMode {
    /// Larger models receive a larger share.
    #[default]
    Proportional,
    /// Smaller models receive a larger share.
    Inverse,
}

impl SizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeMode::Proportional => "proportional",
            SizeMode::Inverse => "inverse",
        }
    }
}

/// Hyperparameters of the epoch-wise weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingConfig {
    pub lambda_init: f64,
    /// Step applied to the balancing parameter per epoch.
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub acc_source: AccuracySource,
    pub size_mode: SizeMode,
    pub normalize_weights: bool,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        Self {
            lambda_init: 0.5,
            delta: 0.1,
            lambda_min: 0.3,
            lambda_max: 0.9,
            acc_source: AccuracySource::Validation,
            size_mode: SizeMode::Proportional,
            normalize_weights: false,
        }
    }
}

impl WeightingConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.lambda_min
            && self.lambda_min <= self.lambda_init
            && self.lambda_init <= self.lambda_max
            && self.lambda_max <= 1.0;
        if !ordered {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= lambda_min ({}) <= lambda_init ({}) <= lambda_max ({}) <= 1",
                self.lambda_min, self.lambda_init, self.lambda_max
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

/// Values recorded for one completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub epoch: usize,
    pub acc: Vec<f64>,
    /// `None` at the first epoch, where no previous accuracy exists.
    pub delta_acc: Option<Vec<f64>>,
    /// Whether the balancing parameters were updated this epoch.
    pub applied: bool,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Live weighting state and its per-epoch history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub weights: Vec<f64>,
    pub history: Vec<EpochSnapshot>,
}

impl EnsembleState {
    /// Fresh state for `n` models with every balancing parameter at
    /// `lambda_init`.
    pub fn new(n_models: usize, cfg: &WeightingConfig) -> Result<Self> {
        if n_models < 2 {
            return Err(Error::TooFewModels(n_models));
        }
        Ok(Self {
            lambda: vec![cfg.lambda_init; n_models],
            alpha: Vec::new(),
            beta: Vec::new(),
            weights: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn n_models(&self) -> usize {
        self.lambda.len()
    }

    pub fn epochs_completed(&self) -> usize {
        self.history.len()
    }
}

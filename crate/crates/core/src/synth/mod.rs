//! Seeded synthetic classifiers and datasets.
//!
//! A synthetic model follows an exponential learning curve
//! `a(t) = a_final − (a_final − a_initial)·exp(−(t − 1)/τ)`. For every
//! sample it decides whether it is correct at rate `a(t)`, putting
//! `peak_mass` on the true class when correct and on a wrong class
//! otherwise, with the remaining mass spread evenly. A fraction
//! `correlation` of correctness decisions is drawn from a stream shared by
//! all models, which controls how often the models fail together.
//!
//! All randomness is keyed by (seed, model, epoch, split, sample); see
//! [`keyed_rng`].

mod rng;
mod split;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rng::keyed_rng;
pub(crate) use rng::TAG_BOOTSTRAP;
use rng::{TAG_LABEL, TAG_MODEL, TAG_SHARED};
pub use split::{stratified_split, SplitIndices};

use crate::dataio::{derive_accuracy, Manifest, ModelRecord, Split, TraceBundle, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::types::{AccuracyTrace, LabelVector, ModelProfile, PredictionMatrix};

/// One synthetic base classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthModelSpec {
    pub name: String,
    pub param_count: u64,
    /// Accuracy at epoch 1, in (0, 1).
    pub initial_accuracy: f64,
    /// Asymptotic accuracy, in (initial_accuracy, 1].
    pub final_accuracy: f64,
    /// Learning-curve time constant in epochs.
    pub time_constant: f64,
    /// Probability mass on the predicted class, in (1/K, 1].
    pub peak_mass: f64,
    /// Relative amplitude of the per-entry noise, see [`SynthModelSpec::max_jitter`].
    #[serde(default)]
    pub jitter: f64,
    /// Preferred wrong answer per true class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion_bias: Option<BTreeMap<usize, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

impl SynthModelSpec {
    /// Expected accuracy at epoch `t` (1-based).
    pub fn accuracy_at(&self, epoch: usize) -> f64 {
        let t = epoch.max(1) as f64 - 1.0;
        self.final_accuracy - (self.final_accuracy - self.initial_accuracy) * (-t / self.time_constant).exp()
    }

    /// Jitter must stay below this bound for the peak class to survive the
    /// noise: `(γ − q)/(γ + q)` with `q = (1 − γ)/(K − 1)`.
    pub fn max_jitter(&self, num_classes: usize) -> f64 {
        let off_peak = (1.0 - self.peak_mass) / (num_classes - 1) as f64;
        (self.peak_mass - off_peak) / (self.peak_mass + off_peak)
    }

    pub fn profile(&self) -> ModelProfile {
        ModelProfile {
            name: self.name.clone(),
            param_count: self.param_count,
            layer_shapes: None,
            latency_ms: self.latency_ms,
        }
    }

    fn validate(&self, num_classes: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(format!("model `{}`: {msg}", self.name)));
        if !(self.initial_accuracy > 0.0 && self.initial_accuracy < 1.0) {
            return bad(format!("initial_accuracy {} not in (0, 1)", self.initial_accuracy));
        }
        if !(self.final_accuracy > self.initial_accuracy && self.final_accuracy <= 1.0) {
            return bad(format!("final_accuracy {} not in (initial_accuracy, 1]", self.final_accuracy));
        }
        if !(self.time_constant > 0.0 && self.time_constant.is_finite()) {
            return bad(format!("time_constant {} must be positive", self.time_constant));
        }
        if !(self.peak_mass > 1.0 / num_classes as f64 && self.peak_mass <= 1.0) {
            return bad(format!("peak_mass {} not in (1/{num_classes}, 1]", self.peak_mass));
        }
        if !(self.jitter >= 0.0 && self.jitter < self.max_jitter(num_classes)) {
            return bad(format!(
                "jitter {} not in [0, {})",
                self.jitter,
                self.max_jitter(num_classes)
            ));
        }
        for (&from, &to) in self.confusion_bias.iter().flatten() {
            if from >= num_classes || to >= num_classes || from == to {
                return bad(format!("confusion_bias {from} -> {to} is not a wrong class"));
            }
        }
        self.profile().validate()
    }
}

/// Number of samples drawn for each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

/// The data-generating world shared by all synthetic models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthWorldSpec {
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    pub samples: SplitSizes,
    /// Defaults to uniform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_priors: Option<Vec<f64>>,
    /// Probability that a model's correctness comes from the shared stream.
    pub correlation: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl SynthWorldSpec {
    pub fn priors(&self) -> Vec<f64> {
        self.class_priors
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.num_classes as f64; self.num_classes])
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidSpec("num_classes must be at least 2".into()));
        }
        let priors = self.priors();
        if priors.len() != self.num_classes
            || priors.iter().any(|p| p.is_nan() || *p < 0.0)
            || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidSpec(format!(
                "class_priors must be {} nonnegative values summing to 1",
                self.num_classes
            )));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.num_classes {
                return Err(Error::InvalidSpec("class_names length differs from num_classes".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::InvalidSpec(format!("correlation {} not in [0, 1]", self.correlation)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidSpec("epochs must be at least 1".into()));
        }
        if self.samples.test == 0 || self.samples.val == 0 {
            return Err(Error::InvalidSpec("val and test splits need samples".into()));
        }
        Ok(())
    }
}

/// A full synthetic experiment description, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthExperiment {
    pub world: SynthWorldSpec,
    pub models: Vec<SynthModelSpec>,
}

fn validate_models(world: &SynthWorldSpec, models: &[SynthModelSpec]) -> Result<()> {
    world.validate()?;
    if models.is_empty() {
        return Err(Error::InvalidSpec("no models".into()));
    }
    models.iter().try_for_each(|m| m.validate(world.num_classes))?;
    crate::types::validate_profiles(&models.iter().map(SynthModelSpec::profile).collect::<Vec<_>>())
}

fn split_code(split: Split) -> u64 {
    match split {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

/// Ground-truth labels of one split, drawn from the class priors.
pub fn generate_labels(world: &SynthWorldSpec, split: Split) -> Result<LabelVector> {
    world.validate()?;
    let cumulative: Vec<f64> = world
        .priors()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let labels = (0..world.samples.get(split))
        .map(|i| {
            let u: f64 = keyed_rng(world.seed, &[TAG_LABEL, split_code(split), i as u64]).random();
            let scaled = u * cumulative[cumulative.len() - 1];
            cumulative.iter().position(|&c| scaled < c).unwrap_or(cumulative.len() - 1)
        })
        .collect();
    LabelVector::new(world.num_classes, labels)
}

/// Epoch-`t` predictions of every model on `labels`, plus each model's
/// realized top-1 accuracy.
pub fn generate_epoch_predictions(
    world: &SynthWorldSpec,
    models: &[SynthModelSpec],
    epoch: usize,
    split: Split,
    labels: &LabelVector,
) -> Result<Vec<(PredictionMatrix, f64)>> {
    validate_models(world, models)?;
    if labels.num_classes() != world.num_classes {
        return Err(Error::ShapeMismatch("labels and world disagree on class count".into()));
    }
    models
        .par_iter()
        .enumerate()
        .map(|(index, model)| {
            let preds = model_predictions(world, model, index, epoch, split, labels)?;
            let acc = derive_accuracy(&preds, labels)?;
            Ok((preds, acc))
        })
        .collect()
}

fn model_predictions(
    world: &SynthWorldSpec,
    model: &SynthModelSpec,
    index: usize,
    epoch: usize,
    split: Split,
    labels: &LabelVector,
) -> Result<PredictionMatrix> {
    let k = world.num_classes;
    let rate = model.accuracy_at(epoch);
    let off_peak = (1.0 - model.peak_mass) / (k - 1) as f64;
    let mut probs = Vec::with_capacity(labels.len() * k);
    for (x, &truth) in labels.as_slice().iter().enumerate() {
        let coords = [epoch as u64, split_code(split), x as u64];
        let shared: f64 = keyed_rng(world.seed, &[TAG_SHARED, coords[0], coords[1], coords[2]]).random();
        let mut rng = keyed_rng(world.seed, &[TAG_MODEL, index as u64, coords[0], coords[1], coords[2]]);
        let use_shared: f64 = rng.random();
        let own: f64 = rng.random();
        let wrong_offset = rng.random_range(1..k);
        let draw = if use_shared < world.correlation { shared } else { own };

        let peak = if draw < rate {
            truth
        } else {
            model
                .confusion_bias
                .as_ref()
                .and_then(|bias| bias.get(&truth).copied())
                .unwrap_or((truth + wrong_offset) % k)
        };
        let start = probs.len();
        probs.extend((0..k).map(|c| if c == peak { model.peak_mass } else { off_peak }));
        if model.jitter > 0.0 {
            let row = &mut probs[start..];
            for p in row.iter_mut() {
                let noise: f64 = rng.random_range(-1.0..1.0);
                *p *= 1.0 + model.jitter * noise;
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    PredictionMatrix::with_tolerance(k, probs, 1e-9)
}

/// Generates a complete bundle: labels for every split, per-epoch accuracy
/// traces on train and validation, and final-epoch test predictions.
///
/// With `keep_epoch_preds`, per-epoch validation matrices are retained too.
pub fn build_bundle(world: &SynthWorldSpec, models: &[SynthModelSpec], keep_epoch_preds: bool) -> Result<TraceBundle> {
    validate_models(world, models)?;
    let splits = [Split::Train, Split::Val, Split::Test];
    let labels: BTreeMap<Split, LabelVector> = splits
        .iter()
        .filter(|&&s| world.samples.get(s) > 0)
        .map(|&s| generate_labels(world, s).map(|l| (s, l)))
        .collect::<Result<_>>()?;

    let n = models.len();
    let mut train_acc = vec![Vec::with_capacity(world.epochs); n];
    let mut val_acc = vec![Vec::with_capacity(world.epochs); n];
    let mut epoch_preds: Vec<BTreeMap<(usize, Split), PredictionMatrix>> = vec![BTreeMap::new(); n];
    for epoch in 1..=world.epochs {
        if let Some(train_labels) = labels.get(&Split::Train) {
            for (i, (_, acc)) in generate_epoch_predictions(world, models, epoch, Split::Train, train_labels)?
                .into_iter()
                .enumerate()
            {
                train_acc[i].push(acc);
            }
        }
        for (i, (preds, acc)) in generate_epoch_predictions(world, models, epoch, Split::Val, &labels[&Split::Val])?
            .into_iter()
            .enumerate()
        {
            val_acc[i].push(acc);
            if keep_epoch_preds {
                epoch_preds[i].insert((epoch, Split::Val), preds);
            }
        }
    }
    let test = generate_epoch_predictions(world, models, world.epochs, Split::Test, &labels[&Split::Test])?;

    let records = models
        .iter()
        .zip(test)
        .enumerate()
        .map(|(i, (spec, (test_preds, _)))| {
            let train = labels.contains_key(&Split::Train).then(|| std::mem::take(&mut train_acc[i]));
            Ok(ModelRecord {
                trace: AccuracyTrace::new(train, Some(std::mem::take(&mut val_acc[i])))?,
                test_preds,
                epoch_preds: std::mem::take(&mut epoch_preds[i]),
                profile: spec.profile(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        num_classes: world.num_classes,
        class_names: world
            .class_names
            .clone()
            .unwrap_or_else(|| (0..world.num_classes).map(|c| format!("class_{c}")).collect()),
        epochs: world.epochs,
        seed: world.seed,
        models: models.iter().map(SynthModelSpec::profile).collect(),
        splits: labels.keys().copied().collect(),
        row_sum_tolerance: None,
    };
    TraceBundle::new(manifest, labels, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(n: usize, correlation: f64) -> SynthWorldSpec {
        SynthWorldSpec {
            num_classes: 4,
            class_names: None,
            samples: SplitSizes {
                train: 0,
                val: n,
                test: n,
            },
            class_priors: None,
            correlation,
            epochs: 3,
            seed: 11,
        }
    }

    fn model(name: &str, final_accuracy: f64, peak_mass: f64) -> SynthModelSpec {
        SynthModelSpec {
            name: name.into(),
            param_count: 1000,
            initial_accuracy: final_accuracy - 0.2,
            final_accuracy,
            time_constant: 3.0,
            peak_mass,
            jitter: 0.0,
            confusion_bias: None,
            latency_ms: None,
        }
    }

    #[test]
    fn learning_curve_is_monotone_and_bounded() {
        let m = model("m", 0.9, 0.7);
        assert!((m.accuracy_at(1) - 0.7).abs() < 1e-15);
        let curve: Vec<f64> = (1..50).map(|t| m.accuracy_at(t)).collect();
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert!(curve.iter().all(|&a| a <= 0.9));
    }

    #[test]
    fn perfect_model_is_one_hot() {
        let w = world(200, 0.0);
        let mut m = model("m", 1.0, 1.0);
        m.initial_accuracy = 0.999;
        m.time_constant = 1e-9;
        let labels = generate_labels(&w, Split::Test).unwrap();
        let out = generate_epoch_predictions(&w, &[m], 2, Split::Test, &labels).unwrap();
        let (preds, acc) = &out[0];
        assert_eq!(*acc, 1.0);
        for (row, &y) in preds.rows().zip(labels.as_slice()) {
            assert!(row.iter().enumerate().all(|(c, &p)| p == if c == y { 1.0 } else { 0.0 }));
        }
    }

    #[test]
    fn realized_accuracy_concentrates() {
        let w = world(10_000, 0.0);
        let mut m = model("m", 0.9, 0.7);
        m.time_constant = 1e-9;
        let labels = generate_labels(&w, Split::Test).unwrap();
        let (_, acc) = &generate_epoch_predictions(&w, &[m], 5, Split::Test, &labels).unwrap()[0];
        assert!((acc - 0.9).abs() < 0.01, "realized {acc}");
    }

    #[test]
    fn full_correlation_aligns_errors() {
        let w = world(500, 1.0);
        let models = [model("a", 0.8, 0.7), model("b", 0.8, 0.7)];
        let labels = generate_labels(&w, Split::Val).unwrap();
        let out = generate_epoch_predictions(&w, &models, 1, Split::Val, &labels).unwrap();
        let hits = |p: &PredictionMatrix| -> Vec<bool> {
            p.rows()
                .zip(labels.as_slice())
                .map(|(r, &y)| crate::inference::argmax(r) == y)
                .collect()
        };
        assert_eq!(hits(&out[0].0), hits(&out[1].0));
    }

    #[test]
    fn confusion_bias_picks_the_wrong_class() {
        let w = world(400, 0.0);
        let mut m = model("m", 0.5, 0.7);
        m.initial_accuracy = 0.3;
        m.confusion_bias = Some([(0, 3), (1, 3), (2, 3), (3, 0)].into_iter().collect());
        let labels = generate_labels(&w, Split::Val).unwrap();
        let (preds, _) = &generate_epoch_predictions(&w, &[m], 1, Split::Val, &labels).unwrap()[0];
        for (row, &y) in preds.rows().zip(labels.as_slice()) {
            let p = crate::inference::argmax(row);
            assert!(p == y || p == if y == 3 { 0 } else { 3 });
        }
    }

    #[test]
    fn jitter_keeps_rows_valid_and_peaks() {
        let w = world(300, 0.3);
        let mut m = model("m", 0.8, 0.4);
        m.jitter = 0.9 * m.max_jitter(4);
        let labels = generate_labels(&w, Split::Val).unwrap();
        let mut plain = m.clone();
        plain.jitter = 0.0;
        let noisy = &generate_epoch_predictions(&w, &[m], 2, Split::Val, &labels).unwrap()[0].0;
        let clean = &generate_epoch_predictions(&w, &[plain], 2, Split::Val, &labels).unwrap()[0].0;
        for (a, b) in noisy.rows().zip(clean.rows()) {
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(crate::inference::argmax(a), crate::inference::argmax(b));
        }
    }

    #[test]
    fn invalid_specs() {
        let w = world(10, 0.0);
        let mut m = model("m", 0.9, 0.7);
        m.jitter = 0.99;
        assert_eq!(
            generate_epoch_predictions(&w, &[m], 1, Split::Val, &generate_labels(&w, Split::Val).unwrap())
                .unwrap_err()
                .name(),
            "InvalidSpec"
        );
        let m = model("m", 0.9, 0.2);
        assert!(validate_models(&w, &[m]).is_err());
        let mut bad = w.clone();
        bad.class_priors = Some(vec![0.5, 0.5, 0.5, 0.5]);
        assert!(bad.validate().is_err());
    }
}

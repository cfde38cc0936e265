//! Epoch-wise ensemble weighting.
//!
//! Each model's weight is a per-model mix of two normalized shares,
//! `w = λ·α + (1 − λ)·β`, where `α` is the model's share of the summed
//! accuracies and `β` its share of the summed parameter counts. The balancing
//! parameter `λ` starts at `lambda_init` and, from the second epoch on, moves
//! toward accuracy for the models whose accuracy improved, in proportion to
//! their share of the total positive improvement, clipped to
//! `[lambda_min, lambda_max]`.

use crate::error::{Error, Result};
use crate::types::{
    validate_profiles, AccuracyTrace, EnsembleState, EpochSnapshot, ModelProfile, SizeMode, WeightingConfig,
};

/// Total positive improvement below which no update is applied.
pub const MIN_IMPROVEMENT: f64 = 1e-12;

/// Each model's share of the summed accuracies.
pub fn accuracy_proportion(acc: &[f64]) -> Result<Vec<f64>> {
    if acc.len() < 2 {
        return Err(Error::TooFewModels(acc.len()));
    }
    if let Some(a) = acc.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::InvalidConfig(format!("accuracy {a} is not a nonnegative number")));
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroAccuracies);
    }
    Ok(acc.iter().map(|a| a / total).collect())
}

/// Each model's share of the ensemble's parameters, or of the reciprocal
/// parameter counts in [`SizeMode::Inverse`].
pub fn size_proportion(profiles: &[ModelProfile], mode: SizeMode) -> Result<Vec<f64>> {
    if profiles.len() < 2 {
        return Err(Error::TooFewModels(profiles.len()));
    }
    validate_profiles(profiles)?;
    let sizes: Vec<f64> = profiles
        .iter()
        .map(|p| match mode {
            SizeMode::Proportional => p.param_count as f64,
            SizeMode::Inverse => 1.0 / p.param_count as f64,
        })
        .collect();
    let total: f64 = sizes.iter().sum();
    Ok(sizes.iter().map(|s| s / total).collect())
}

/// Moves the balancing parameters by the positive part of each model's
/// accuracy change. Returns whether an update was applied.
///
/// Models whose accuracy did not improve keep their value. When no model
/// improved (total positive change at most [`MIN_IMPROVEMENT`]) the state is
/// left untouched.
pub fn update_lambdas(lambda: &mut [f64], delta_acc: &[f64], cfg: &WeightingConfig) -> Result<bool> {
    if lambda.len() != delta_acc.len() {
        return Err(Error::LengthMismatch(lambda.len(), delta_acc.len()));
    }
    let total_gain: f64 = delta_acc.iter().map(|d| d.max(0.0)).sum();
    if total_gain.is_nan() || total_gain <= MIN_IMPROVEMENT {
        return Ok(false);
    }
    for (l, d) in lambda.iter_mut().zip(delta_acc) {
        if *d > 0.0 {
            *l = (*l + cfg.delta * d / total_gain).clamp(cfg.lambda_min, cfg.lambda_max);
        }
    }
    Ok(true)
}

/// `wᵢ = λᵢαᵢ + (1 − λᵢ)βᵢ`, optionally rescaled to sum to one.
pub fn final_weights(lambda: &[f64], alpha: &[f64], beta: &[f64], normalize: bool) -> Result<Vec<f64>> {
    if lambda.len() != alpha.len() {
        return Err(Error::LengthMismatch(lambda.len(), alpha.len()));
    }
    if lambda.len() != beta.len() {
        return Err(Error::LengthMismatch(lambda.len(), beta.len()));
    }
    let mut weights: Vec<f64> = lambda
        .iter()
        .zip(alpha.iter().zip(beta))
        .map(|(l, (a, b))| l * a + (1.0 - l) * b)
        .collect();
    if normalize {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::AllZeroWeights);
        }
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(weights)
}

/// Runs the weighting over all recorded epochs.
///
/// Epoch 1 records the initial balancing parameters. Every later epoch
/// updates them from the accuracy change, then recomputes the accuracy
/// shares from that epoch's accuracies and the resulting weights.
pub fn run_training(
    traces: &[AccuracyTrace],
    profiles: &[ModelProfile],
    cfg: &WeightingConfig,
) -> Result<EnsembleState> {
    cfg.validate()?;
    if traces.len() != profiles.len() {
        return Err(Error::LengthMismatch(traces.len(), profiles.len()));
    }
    let mut state = EnsembleState::new(profiles.len(), cfg)?;
    let series = traces
        .iter()
        .zip(profiles)
        .map(|(t, p)| {
            t.get(cfg.acc_source).ok_or_else(|| Error::MissingAccuracySource {
                model: p.name.clone(),
                source_name: cfg.acc_source.as_str().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let epochs = series[0].len();
    if let Some(other) = series.iter().map(|s| s.len()).find(|&len| len != epochs) {
        return Err(Error::UnequalEpochCounts(epochs, other));
    }
    if epochs == 0 {
        return Err(Error::NonPositiveCount {
            what: "epoch count".into(),
        });
    }

    state.beta = size_proportion(profiles, cfg.size_mode)?;
    let mut prev: Option<Vec<f64>> = None;
    for epoch in 0..epochs {
        let acc: Vec<f64> = series.iter().map(|s| s[epoch]).collect();
        let (delta_acc, applied) = match &prev {
            None => (None, false),
            Some(prev) => {
                let delta: Vec<f64> = acc.iter().zip(prev).map(|(a, p)| a - p).collect();
                let applied = update_lambdas(&mut state.lambda, &delta, cfg)?;
                (Some(delta), applied)
            }
        };
        state.alpha = accuracy_proportion(&acc)?;
        state.weights = final_weights(&state.lambda, &state.alpha, &state.beta, cfg.normalize_weights)?;
        state.history.push(EpochSnapshot {
            epoch: epoch + 1,
            acc: acc.clone(),
            delta_acc,
            applied,
            lambda: state.lambda.clone(),
            alpha: state.alpha.clone(),
            beta: state.beta.clone(),
            weights: state.weights.clone(),
        });
        prev = Some(acc);
    }
    Ok(state)
}

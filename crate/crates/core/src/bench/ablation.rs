//! Ablation grid: the full dynamic ensemble against every pair of models,
//! each model alone, and the static uniform-weight ensemble.
//!
//! Per-seed accuracies of each variant are compared with the full dynamic
//! ensemble's by a paired Wilcoxon signed-rank test. For synthetic
//! experiments a seed regenerates the whole world; for a recorded bundle,
//! which holds a single run, a seed draws a bootstrap resample of the test
//! set.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::TraceBundle;
use crate::error::{Error, Result};
use crate::inference::{ensemble_predict, predict_single, uniform_weights};
use crate::metrics::{accuracy, wilcoxon_signed_rank};
use crate::synth::{build_bundle, keyed_rng, SynthExperiment, TAG_BOOTSTRAP};
use crate::types::{LabelVector, WeightingConfig};
use crate::weighting::run_training;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    FullDynamic,
    /// Dynamic weighting over a pair of models.
    Pair,
    StaticUniform,
    Single,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub name: String,
    pub kind: VariantKind,
    pub models: Vec<String>,
}

/// The grid for `names`: full-dynamic, pairs (only when there are more than
/// two models), static-uniform, then each model alone.
pub fn variants(names: &[String]) -> Vec<Variant> {
    let mut out = vec![Variant {
        name: "full-dynamic".into(),
        kind: VariantKind::FullDynamic,
        models: names.to_vec(),
    }];
    if names.len() > 2 {
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                out.push(Variant {
                    name: format!("{}+{}", names[i], names[j]),
                    kind: VariantKind::Pair,
                    models: vec![names[i].clone(), names[j].clone()],
                });
            }
        }
    }
    out.push(Variant {
        name: "static-uniform".into(),
        kind: VariantKind::StaticUniform,
        models: names.to_vec(),
    });
    out.extend(names.iter().map(|n| Variant {
        name: n.clone(),
        kind: VariantKind::Single,
        models: vec![n.clone()],
    }));
    out
}

/// Test-set labels predicted by every variant.
pub fn evaluate_variants(bundle: &TraceBundle, cfg: &WeightingConfig) -> Result<Vec<(Variant, LabelVector)>> {
    let names = bundle.model_names();
    if names.len() < 2 {
        return Err(Error::TooFewModels(names.len()));
    }
    variants(&names)
        .into_par_iter()
        .map(|v| {
            let sub = bundle.select_models(&v.models)?;
            let labels = match v.kind {
                VariantKind::Single => predict_single(&sub.models()[0].test_preds),
                VariantKind::StaticUniform => ensemble_predict(&sub.test_preds(), &uniform_weights(v.models.len()))?.labels,
                VariantKind::FullDynamic | VariantKind::Pair => {
                    let state = run_training(&sub.traces(), &sub.profiles(), cfg)?;
                    ensemble_predict(&sub.test_preds(), &state.weights)?.labels
                }
            };
            Ok((v, labels))
        })
        .collect()
}

/// `n` test indices drawn with replacement for `seed`.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = keyed_rng(seed, &[TAG_BOOTSTRAP, n as u64]);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub name: String,
    pub kind: VariantKind,
    pub models: Vec<String>,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Two-sided Wilcoxon p against full-dynamic; `None` on the reference
    /// row and 1 when every paired accuracy is equal.
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilcoxon_statistic: Option<f64>,
}

fn assemble(grid: Vec<Variant>, seeds: &[u64], per_seed: Vec<Vec<f64>>) -> Result<Vec<AblationResult>> {
    // per_seed[s][v] -> accuracies[v][s]
    let accuracies: Vec<Vec<f64>> = (0..grid.len()).map(|v| per_seed.iter().map(|row| row[v]).collect()).collect();
    let reference = accuracies[0].clone();
    grid.into_iter()
        .zip(accuracies)
        .map(|(v, acc)| {
            let (p_value, wilcoxon_statistic) = if v.kind == VariantKind::FullDynamic {
                (None, None)
            } else {
                match wilcoxon_signed_rank(&acc, &reference) {
                    Ok(r) => (Some(r.p_value), Some(r.statistic)),
                    Err(Error::AllPairsEqual) => (Some(1.0), None),
                    Err(e) => return Err(e),
                }
            };
            Ok(AblationResult {
                name: v.name,
                kind: v.kind,
                models: v.models,
                seeds: seeds.to_vec(),
                mean_accuracy: acc.iter().sum::<f64>() / acc.len() as f64,
                accuracies: acc,
                p_value,
                wilcoxon_statistic,
            })
        })
        .collect()
}

/// Ablation over a recorded bundle, one bootstrap resample of the test set
/// per seed.
pub fn run_ablation(bundle: &TraceBundle, cfg: &WeightingConfig, seeds: &[u64]) -> Result<Vec<AblationResult>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one seed".into()));
    }
    let evaluated = evaluate_variants(bundle, cfg)?;
    let truth = bundle.test_labels();
    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let idx = bootstrap_indices(truth.len(), seed);
            let sample_truth = truth.select(&idx);
            evaluated
                .iter()
                .map(|(_, pred)| accuracy(&sample_truth, &pred.select(&idx)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(evaluated.into_iter().map(|(v, _)| v).collect(), seeds, per_seed)
}

/// Ablation over a synthetic experiment, regenerating the world with each
/// seed.
pub fn run_synthetic_ablation(
    experiment: &SynthExperiment,
    cfg: &WeightingConfig,
    seeds: &[u64],
) -> Result<Vec<AblationResult>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one seed".into()));
    }
    if experiment.models.len() < 2 {
        return Err(Error::TooFewModels(experiment.models.len()));
    }
    let runs: Vec<Result<(Vec<Variant>, Vec<f64>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut world = experiment.world.clone();
            world.seed = seed;
            let bundle = build_bundle(&world, &experiment.models, false)?;
            let evaluated = evaluate_variants(&bundle, cfg)?;
            let accs = evaluated
                .iter()
                .map(|(_, pred)| accuracy(bundle.test_labels(), pred))
                .collect::<Result<Vec<_>>>()?;
            Ok((evaluated.into_iter().map(|(v, _)| v).collect(), accs))
        })
        .collect();
    let mut grid = None;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for run in runs {
        let (g, accs) = run?;
        grid.get_or_insert(g);
        per_seed.push(accs);
    }
    assemble(grid.expect("at least one seed"), seeds, per_seed)
}

use serde::{Deserialize, Serialize};

use crate::bench::{AblationResult, LatencyStats, ParetoPoint};
use crate::metrics::{ClassificationReport, ConfusionMatrix};
use crate::types::{EnsembleState, WeightingConfig};

/// One epoch of the weight trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epoch: usize,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub weights: Vec<f64>,
    pub applied: bool,
}

impl TrajectoryPoint {
    pub fn from_state(state: &EnsembleState) -> Vec<Self> {
        state
            .history
            .iter()
            .map(|s| Self {
                epoch: s.epoch,
                lambda: s.lambda.clone(),
                alpha: s.alpha.clone(),
                beta: s.beta.clone(),
                weights: s.weights.clone(),
                applied: s.applied,
            })
            .collect()
    }
}

/// Output of a weighting run: the trajectory and the frozen weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub config: WeightingConfig,
    pub models: Vec<String>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_weights: Vec<f64>,
}

impl TrainingRecord {
    pub fn new(config: WeightingConfig, models: Vec<String>, state: &EnsembleState) -> Self {
        Self {
            config,
            models,
            trajectory: TrajectoryPoint::from_state(state),
            final_weights: state.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAccuracy {
    pub name: String,
    pub accuracy: f64,
}

/// The harness's single output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Effective configuration that produced the report.
    pub config: serde_json::Value,
    pub mode: String,
    pub models: Vec<String>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_weights: Vec<f64>,
    pub classification: ClassificationReport,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub standalone: Vec<ModelAccuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<AblationResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pareto: Option<Vec<ParetoPoint>>,
}

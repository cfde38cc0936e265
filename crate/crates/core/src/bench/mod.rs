//! Evaluation machinery: latency measurement, accuracy/latency Pareto
//! fronts, and the model-subset ablation grid.

mod ablation;
mod latency;
mod pareto;

pub use ablation::{
    bootstrap_indices, evaluate_variants, run_ablation, run_synthetic_ablation, variants, AblationResult, Variant,
    VariantKind,
};
pub use latency::{measure_latency, measure_with_overhead, LatencyStats, OverheadBreakdown, MIN_REPS};
pub use pareto::{pareto_csv, pareto_points, ParetoPoint};

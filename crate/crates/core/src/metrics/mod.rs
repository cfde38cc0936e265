//! Classification reports, confusion matrices and the paired Wilcoxon
//! signed-rank test.

mod report;
mod wilcoxon;

pub use report::{accuracy, confusion, report, ClassMetrics, ClassificationReport, ConfusionMatrix, MetricAverages};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_normal, WilcoxonMethod, WilcoxonResult, EXACT_CUTOFF,
};

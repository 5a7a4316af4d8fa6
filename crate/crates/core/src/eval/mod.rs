//! Cross-validation, metrics and multi-dataset comparison.

pub mod cv;
pub mod metrics;
pub mod report;
pub mod stats;

pub use cv::{cross_validate, CvConfig, KpcSelection, NormalizationScope, RunRecord};
pub use metrics::{macro_f1, misclassification_rate};
pub use report::{aggregate, Aggregate, ComparisonStats, EvaluationReport, RankTable};

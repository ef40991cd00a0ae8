//! Policy evaluation and score reporting.

mod compare;
mod report;

pub use compare::{comparison_report, geometric_mean_ratio, ComparisonTable, ScoreCell, ScoreColumn};
pub use report::{evaluate, EvalReport};

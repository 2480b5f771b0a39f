//! Error metrics, the train/test split, k-fold grid search and the model
//! comparison table.

mod compare;
mod family;
mod grid;
mod metrics;
mod split;

pub use compare::{compare_models, ComparisonRow, ComparisonTable, MetricTriple, ModelConfig, Winners};
pub use family::{FittedModel, ModelFamily, ModelSpec, ParamSet};
pub use grid::{fold_indices, grid_search, CvRow, CvTable, GridResult, GridSpec, Scoring};
pub use metrics::{mae, mean, mse, ordered_pairwise_sum, r_squared, MetricsReport};
pub use split::{split_indices, test_size, train_test_split, SplitSpec};

/// Three significant digits with an explicit exponent sign, e.g. `4.83e+7`.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.2e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

pub fn format_r2(v: f64) -> String {
    format!("{v:.2}")
}

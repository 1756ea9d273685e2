//! Transfer entropy between binarized neuron activations.

mod estimator;
mod matrix;
mod series;

pub use estimator::{
    estimate_te_general, estimate_te_lag1, te_from_counts, LagOneCounts, TeError, MAX_HISTORY_BITS,
};
pub use matrix::{compute_te_matrix, lag1_te_matrix, LayerSummary, TeConfig, TeMatrix};
pub use series::{binarize, BinarySeries, SeriesStore};

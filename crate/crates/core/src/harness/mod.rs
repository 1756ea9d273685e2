//! Multi-run experiments, grid search and report files.

mod experiment;
mod grid;
mod report;
mod spec;

use std::path::PathBuf;

pub use experiment::{
    aggregate, default_report_dir, layer_sizes, run_experiment, run_on, Aggregate, ConfigEcho, DatasetInfo,
    RunReport, RunRow, Source,
};
pub use grid::{grid_search, grid_search_on, GridCell, GridReport};
pub use report::{
    emit_report, from_json, to_json, write_curves, write_epochs, write_summary, CURVES_FILE, EPOCHS_FILE,
    REPORT_FILE, SUMMARY_FILE,
};
pub use spec::{DatasetRef, ExperimentSpec, Formats, Mode, RunMode, SPEC_KEYS};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{origin}, line {line}: {message}")]
    Spec {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("run {run} ({mode}): {source}")]
    Run {
        run: usize,
        mode: String,
        #[source]
        source: crate::trainer::TrainError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report: {0}")]
    Report(String),
}

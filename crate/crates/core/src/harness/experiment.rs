use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::spec::{DatasetRef, ExperimentSpec, RunMode};
use super::HarnessError;
use crate::data::{self, Dataset, Schema, SplitSpec};
use crate::seed::{self, stream};
use crate::te::LayerSummary;
use crate::trainer::{self, AccuracyKind, RunOutcome, Stage2Init, Task, TrainConfig};

/// A loaded experiment input.
#[derive(Debug, Clone)]
pub enum Source {
    Xor,
    Table { dataset: Dataset, rejected_rows: Vec<u64> },
}

impl Source {
    pub fn load(dataset: &DatasetRef) -> Result<Self, HarnessError> {
        let (data, schema) = match dataset {
            DatasetRef::Xor => return Ok(Self::Xor),
            DatasetRef::Csv { data, schema } => (data, schema),
        };
        let schema = match schema {
            Some(p) => Schema::from_file(p)?,
            None => Schema::parse("", "default schema")?,
        };
        let path = data
            .clone()
            .or_else(|| schema.data_path())
            .ok_or_else(|| HarnessError::Config("schema has no `file` entry and no data path was given".into()))?;
        let mut loaded = data::load_csv(&path, &schema)?;
        if schema.name.is_empty() {
            loaded.dataset.name = path
                .file_stem()
                .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
        }
        if loaded.dataset.is_degenerate() {
            return Err(HarnessError::Config(format!("{}: fewer than two classes", path.display())));
        }
        Ok(Self::Table {
            dataset: loaded.dataset,
            rejected_rows: loaded.rejected_rows,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Xor => "xor",
            Self::Table { dataset, .. } => &dataset.name,
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Self::Xor => 2,
            Self::Table { dataset, .. } => dataset.feature_count(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            Self::Xor => 2,
            Self::Table { dataset, .. } => dataset.class_count(),
        }
    }

    /// The task for run seed `run_seed`: XOR gets its own sampling stream,
    /// tables get a fresh stratified split.
    pub fn task(&self, run_seed: u64, train_fraction: f64) -> Result<(Task, usize), HarnessError> {
        match self {
            Self::Xor => Ok((Task::xor(seed::derive(run_seed, &[stream::DATA])), 0)),
            Self::Table { dataset, .. } => {
                let s = data::split(
                    dataset,
                    &SplitSpec {
                        train_fraction,
                        seed: seed::derive(run_seed, &[stream::SPLIT]),
                        stratified: true,
                    },
                )?;
                let clamped = s.clamped;
                Ok((Task::fixed(s.train, Some(s.test)), clamped))
            }
        }
    }
}

/// Network shape: one output for two classes, one per class otherwise.
pub fn layer_sizes(inputs: usize, hidden: &[usize], classes: usize) -> Vec<usize> {
    let outputs = if classes <= 2 { 1 } else { classes };
    std::iter::once(inputs)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(outputs))
        .collect()
}

/// One trainer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub mode: String,
    /// Stage II epochs; equals the cap when the target was missed.
    pub epochs: usize,
    pub reached: bool,
    pub final_accuracy: f64,
    pub accuracy_trace: Vec<f64>,
    pub stage1_epochs: Option<usize>,
    pub stage1_reached: Option<bool>,
    /// Per weight layer summary of the te matrix Stage II used.
    pub te_summary: Vec<LayerSummary>,
    /// Validation values clamped into range by the train-only normalization.
    pub clamped: usize,
}

impl RunRow {
    fn new(run: usize, seed: u64, mode: RunMode, out: &RunOutcome, te: Vec<LayerSummary>, clamped: usize) -> Self {
        Self {
            run,
            seed,
            mode: mode.label(),
            epochs: out.stage2.epochs_run,
            reached: out.stage2.reached_target,
            final_accuracy: out.stage2.final_accuracy(),
            accuracy_trace: out.stage2.accuracy_trace.clone(),
            stage1_epochs: out.stage1.as_ref().map(|s| s.epochs_run),
            stage1_reached: out.stage1.as_ref().map(|s| s.reached_target),
            te_summary: te,
            clamped,
        }
    }
}

/// Per-mode averages. Missed targets count as the epoch cap and their last
/// recorded accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub reached: usize,
    pub mean_epochs: f64,
    pub median_epochs: f64,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub mean_final_accuracy: f64,
}

fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Aggregates `rows` per mode.
pub fn aggregate(rows: &[RunRow], cap: usize) -> BTreeMap<String, Aggregate> {
    let mut by_mode: BTreeMap<String, Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        by_mode.entry(r.mode.clone()).or_default().push(r);
    }
    by_mode
        .into_iter()
        .map(|(mode, rs)| {
            let mut epochs: Vec<usize> =
                rs.iter().map(|r| if r.reached { r.epochs } else { cap }).collect();
            epochs.sort_unstable();
            let n = rs.len() as f64;
            let agg = Aggregate {
                runs: rs.len(),
                reached: rs.iter().filter(|r| r.reached).count(),
                mean_epochs: epochs.iter().sum::<usize>() as f64 / n,
                median_epochs: median(&epochs),
                min_epochs: epochs[0],
                max_epochs: epochs[epochs.len() - 1],
                mean_final_accuracy: rs.iter().map(|r| r.final_accuracy).sum::<f64>() / n,
            };
            (mode, agg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub source: String,
    pub samples: Option<usize>,
    pub features: usize,
    pub classes: usize,
    pub class_names: Vec<String>,
    pub rejected_rows: Vec<u64>,
}

/// Everything needed to rerun the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub master_seed: u64,
    pub runs: usize,
    pub modes: Vec<String>,
    pub hidden: Vec<usize>,
    pub layer_sizes: Vec<usize>,
    pub split: f64,
    pub accuracy: AccuracyKind,
    pub stage2_init: Stage2Init,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetInfo,
    pub config: ConfigEcho,
    pub runs: Vec<RunRow>,
    pub aggregates: BTreeMap<String, Aggregate>,
}

impl RunReport {
    pub fn from_rows(dataset: DatasetInfo, config: ConfigEcho, runs: Vec<RunRow>) -> Self {
        let aggregates = aggregate(&runs, config.train.max_epochs);
        Self {
            dataset,
            config,
            runs,
            aggregates,
        }
    }

    pub fn recompute_aggregates(&self) -> BTreeMap<String, Aggregate> {
        aggregate(&self.runs, self.config.train.max_epochs)
    }

    /// Rows of one mode in run order.
    pub fn mode_rows<'a>(&'a self, mode: &'a str) -> impl Iterator<Item = &'a RunRow> + 'a {
        self.runs.iter().filter(move |r| r.mode == mode)
    }
}

fn run_one(
    source: &Source,
    spec: &ExperimentSpec,
    sizes: &[usize],
    run: usize,
    mode: RunMode,
) -> Result<RunRow, HarnessError> {
    let run_seed = seed::derive(spec.train.seed, &[stream::RUN, run as u64]);
    let (task, clamped) = source.task(run_seed, spec.split)?;
    let cfg = spec.run_config(run_seed, mode);
    let wrap = |source| HarnessError::Run {
        run,
        mode: mode.label(),
        source,
    };
    let out = match mode {
        RunMode::Ff => trainer::run_ff(sizes, &task, &cfg),
        RunMode::FfFb => trainer::run_fffb(sizes, &task, &cfg),
        RunMode::Ablation(_) => trainer::run_ablation(sizes, &task, &cfg),
    }
    .map_err(wrap)?;
    let te = match mode {
        RunMode::Ff => Vec::new(),
        RunMode::FfFb => out.stage1.as_ref().map(|s| s.te_snapshot.summary()).unwrap_or_default(),
        RunMode::Ablation(a) => applied_te_summary(&out, sizes, a),
    };
    Ok(RunRow::new(run, run_seed, mode, &out, te, clamped))
}

fn applied_te_summary(out: &RunOutcome, sizes: &[usize], a: trainer::Ablation) -> Vec<LayerSummary> {
    use crate::te::TeMatrix;
    use trainer::Ablation;
    let snap = out.stage1.as_ref().map(|s| &s.te_snapshot);
    match (a, snap) {
        (Ablation::FixedTe(v), _) => TeMatrix::filled(sizes, v).summary(),
        (Ablation::ScaleTeUnit, Some(t)) => t.scaled_to_unit().summary(),
        (Ablation::LayerScaled(f), Some(t)) => t.layer_scaled(f).summary(),
        (_, Some(t)) => t.summary(),
        (_, None) => Vec::new(),
    }
}

#[cfg(feature = "parallel")]
fn run_jobs<F>(jobs: &[(usize, RunMode)], workers: usize, f: F) -> Result<Vec<RunRow>, HarnessError>
where
    F: Fn(usize, RunMode) -> Result<RunRow, HarnessError> + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(|&(run, mode)| f(run, mode)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<F>(jobs: &[(usize, RunMode)], _workers: usize, f: F) -> Result<Vec<RunRow>, HarnessError>
where
    F: Fn(usize, RunMode) -> Result<RunRow, HarnessError>,
{
    jobs.iter().map(|&(run, mode)| f(run, mode)).collect()
}

/// Runs every (run, mode) pair of the spec on an already loaded source.
pub fn run_on(source: &Source, spec: &ExperimentSpec) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let sizes = layer_sizes(source.input_size(), &spec.hidden, source.class_count());
    let modes = spec.run_modes();
    let jobs: Vec<(usize, RunMode)> = (0..spec.runs)
        .flat_map(|run| modes.iter().map(move |&m| (run, m)))
        .collect();
    let rows = run_jobs(&jobs, spec.workers, |run, mode| run_one(source, spec, &sizes, run, mode))?;

    let (samples, class_names, rejected_rows) = match source {
        Source::Xor => (None, vec!["0".into(), "1".into()], Vec::new()),
        Source::Table { dataset, rejected_rows } => {
            (Some(dataset.len()), dataset.class_names().to_vec(), rejected_rows.clone())
        }
    };
    let info = DatasetInfo {
        name: source.name().to_string(),
        source: spec.dataset.label(),
        samples,
        features: source.input_size(),
        classes: source.class_count(),
        class_names,
        rejected_rows,
    };
    let config = ConfigEcho {
        master_seed: spec.train.seed,
        runs: spec.runs,
        modes: modes.iter().map(RunMode::label).collect(),
        hidden: spec.hidden.clone(),
        layer_sizes: sizes,
        split: spec.split,
        accuracy: spec.accuracy_kind(),
        stage2_init: spec.train.stage2_init,
        train: spec.train.clone(),
    };
    Ok(RunReport::from_rows(info, config, rows))
}

/// Loads the dataset and runs the experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let source = Source::load(&spec.dataset)?;
    run_on(&source, spec)
}

/// Default report directory for a spec without `out`.
pub fn default_report_dir(spec: &ExperimentSpec) -> PathBuf {
    PathBuf::from("reports").join(match &spec.dataset {
        DatasetRef::Xor => "xor".to_string(),
        DatasetRef::Csv { .. } => "csv".to_string(),
    })
}

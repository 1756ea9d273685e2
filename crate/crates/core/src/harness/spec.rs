use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::trainer::{Ablation, AccuracyKind, Stage2Init, TrainConfig};

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRef {
    /// 200 fresh XOR rows per epoch.
    Xor,
    /// A CSV table. Without `data`, the schema's `file` entry is used; without
    /// `schema`, every column is numeric and the label is the last one.
    Csv {
        data: Option<PathBuf>,
        schema: Option<PathBuf>,
    },
}

impl DatasetRef {
    pub fn label(&self) -> String {
        match self {
            Self::Xor => "xor".into(),
            Self::Csv { data, schema } => data
                .as_ref()
                .or(schema.as_ref())
                .map_or_else(|| "csv".into(), |p| p.display().to_string()),
        }
    }
}

/// Which trainers an experiment runs for every seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ff,
    FfFb,
    Both,
    /// The FF baseline plus one run per configured ablation.
    Ablation,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ff" => Ok(Self::Ff),
            "fffb" | "ff_fb" | "ff+fb" => Ok(Self::FfFb),
            "both" => Ok(Self::Both),
            "ablation" => Ok(Self::Ablation),
            other => Err(format!("unknown mode `{other}` (ff, fffb, both, ablation)")),
        }
    }
}

/// One trainer variant inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Ff,
    FfFb,
    Ablation(Ablation),
}

impl RunMode {
    pub fn label(&self) -> String {
        match self {
            Self::Ff => "ff".into(),
            Self::FfFb => "ff_fb".into(),
            Self::Ablation(a) => format!("ablation:{}", a.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

impl Formats {
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut f = Self { csv: false, json: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format `{other}` (csv, json)")),
            }
        }
        if !f.csv && !f.json {
            return Err("at least one output format is required".into());
        }
        Ok(f)
    }
}

/// A complete, reproducible experiment description.
///
/// `train.seed` is the master seed every run seed is derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetRef,
    pub runs: usize,
    pub mode: Mode,
    pub ablations: Vec<Ablation>,
    pub train: TrainConfig,
    /// `None` picks training accuracy for XOR and validation accuracy for
    /// tables.
    pub accuracy: Option<AccuracyKind>,
    pub hidden: Vec<usize>,
    /// Training fraction of each run's stratified split.
    pub split: f64,
    pub report_dir: Option<PathBuf>,
    pub formats: Formats,
    /// Parallel runs; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset: DatasetRef::Xor,
            runs: 10,
            mode: Mode::Both,
            ablations: Vec::new(),
            train: TrainConfig::default(),
            accuracy: None,
            hidden: vec![2],
            split: 0.7,
            report_dir: None,
            formats: Formats::default(),
            workers: 0,
        }
    }
}

/// Keys accepted by [`ExperimentSpec::apply`]. Dashes and underscores are
/// interchangeable.
pub const SPEC_KEYS: &[&str] = &[
    "dataset",
    "schema",
    "mode",
    "eta",
    "g",
    "epochs",
    "stage1-epochs",
    "target-acc",
    "runs",
    "seed",
    "hidden",
    "te-interval",
    "ablation",
    "split",
    "out",
    "format",
    "workers",
    "stage2-init",
    "accuracy",
    "warm-up",
    "min-series-len",
    "log-base",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
}

fn resolve(base: Option<&Path>, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

impl ExperimentSpec {
    /// Sets one key. Relative paths are joined onto `base` when given.
    pub fn apply(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), String> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "dataset" if v.eq_ignore_ascii_case("xor") => self.dataset = DatasetRef::Xor,
            "dataset" => {
                let schema = match &self.dataset {
                    DatasetRef::Csv { schema, .. } => schema.clone(),
                    DatasetRef::Xor => None,
                };
                self.dataset = DatasetRef::Csv {
                    data: Some(resolve(base, v)),
                    schema,
                };
            }
            "schema" => {
                let data = match &self.dataset {
                    DatasetRef::Csv { data, .. } => data.clone(),
                    DatasetRef::Xor => None,
                };
                self.dataset = DatasetRef::Csv {
                    data,
                    schema: Some(resolve(base, v)),
                };
            }
            "mode" => self.mode = Mode::parse(v)?,
            "eta" => self.train.eta = num(&key, v)?,
            "g" => self.train.g = num(&key, v)?,
            "epochs" => self.train.max_epochs = num(&key, v)?,
            "stage1-epochs" => {
                self.train.stage1_epochs = match v {
                    "" | "same" => None,
                    _ => Some(num(&key, v)?),
                }
            }
            "target-acc" => {
                let mut t: f64 = num(&key, v)?;
                // accept percentages
                if t > 1.0 {
                    t /= 100.0;
                }
                self.train.target_accuracy = t;
            }
            "runs" => self.runs = num(&key, v)?,
            "seed" => self.train.seed = num(&key, v)?,
            "hidden" => {
                self.hidden = if v.is_empty() || v == "none" {
                    Vec::new()
                } else {
                    v.split(',').map(|n| num(&key, n.trim())).collect::<Result<_, _>>()?
                }
            }
            "te-interval" => {
                self.train.te_recompute_interval = match v {
                    "never" | "end" => None,
                    _ => Some(num(&key, v)?),
                }
            }
            "ablation" => {
                self.ablations = v
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(|a| Ablation::parse(a).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
            }
            "split" => self.split = num(&key, v)?,
            "out" => self.report_dir = Some(resolve(base, v)),
            "format" => self.formats = Formats::parse(v)?,
            "workers" => self.workers = num(&key, v)?,
            "stage2-init" => {
                self.train.stage2_init = match v {
                    "fresh" => Stage2Init::Fresh,
                    "continue" => Stage2Init::Continue,
                    _ => return Err(format!("`stage2-init` must be fresh or continue, got `{v}`")),
                }
            }
            "accuracy" => {
                self.accuracy = match v {
                    "training" | "train" => Some(AccuracyKind::Training),
                    "validation" | "test" => Some(AccuracyKind::Validation),
                    "auto" => None,
                    _ => return Err(format!("`accuracy` must be training or validation, got `{v}`")),
                }
            }
            "warm-up" => self.train.warm_up = num(&key, v)?,
            "min-series-len" => self.train.min_series_len = num(&key, v)?,
            "log-base" => self.train.log_base = num(&key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str, base: Option<&Path>) -> Result<(), HarnessError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Spec {
                origin: origin.to_string(),
                line: n + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            self.apply(k, v, base).map_err(err)?;
        }
        Ok(())
    }

    /// Reads a spec file over the defaults. Relative paths inside it are
    /// taken relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec = Self::default();
        spec.apply_text(&text, &path.display().to_string(), path.parent())?;
        Ok(spec)
    }

    pub fn accuracy_kind(&self) -> AccuracyKind {
        self.accuracy.unwrap_or(match self.dataset {
            DatasetRef::Xor => AccuracyKind::Training,
            DatasetRef::Csv { .. } => AccuracyKind::Validation,
        })
    }

    /// Trainer variants in report order.
    pub fn run_modes(&self) -> Vec<RunMode> {
        match self.mode {
            Mode::Ff => vec![RunMode::Ff],
            Mode::FfFb => vec![RunMode::FfFb],
            Mode::Both => vec![RunMode::FfFb, RunMode::Ff],
            Mode::Ablation => std::iter::once(RunMode::Ff)
                .chain(self.ablations.iter().map(|&a| RunMode::Ablation(a)))
                .collect(),
        }
    }

    /// Training config for one run and mode.
    pub fn run_config(&self, run_seed: u64, mode: RunMode) -> TrainConfig {
        TrainConfig {
            seed: run_seed,
            accuracy_kind: self.accuracy_kind(),
            ablation: match mode {
                RunMode::Ablation(a) => a,
                _ => Ablation::None,
            },
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", self.split));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be >= 1".into());
        }
        if self.mode == Mode::Ablation && self.ablations.is_empty() {
            return bad("ablation mode needs at least one `ablation` entry".into());
        }
        if self.ablations.contains(&Ablation::None) {
            return bad("`none` is not an ablation".into());
        }
        if let DatasetRef::Csv { data: None, schema: None } = self.dataset {
            return bad("a CSV dataset needs a data path or a schema".into());
        }
        self.train
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

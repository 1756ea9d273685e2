//! Online training loops: the two-stage TE-feedback trainer (FF+FB), the
//! plain backpropagation baseline (FF) and the control ablations.
//!
//! Stage I trains while recording binarized activations and refreshing the
//! TE matrix every `te_recompute_interval` samples; Stage II trains with the
//! last Stage I matrix frozen. FF is Stage II with a zero matrix.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{self, target_vector, Dataset};
use crate::net::{NetError, Network, INIT_WEIGHT_STD};
use crate::seed::{self, stream};
use crate::te::{lag1_te_matrix, SeriesStore, TeConfig, TeError, TeMatrix};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("epoch {epoch}, sample {sample}: {source}")]
    Numerical {
        epoch: usize,
        sample: usize,
        #[source]
        source: NetError,
    },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Te(#[from] TeError),
}

/// Which set the early-stopping accuracy is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyKind {
    /// The samples of the epoch just trained on.
    Training,
    /// The task's held-out set.
    Validation,
}

/// Control experiments on the TE feedback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Ablation {
    #[default]
    None,
    /// Every te entry replaced by the given value.
    FixedTe(f64),
    /// Stage I matrix min-max rescaled into `[0, 1]`.
    ScaleTeUnit,
    /// Weight layer `k` multiplied by `factor^(k + 1)`.
    LayerScaled(f64),
    /// Stage II starts from every weight set to this value; te is the only
    /// per-connection signal.
    FrozenWeights(f64),
}

impl Ablation {
    /// Parses `none`, `fixed:<v>`, `scale01`, `layer:<f>`, `frozen` or
    /// `frozen:<v>`.
    pub fn parse(s: &str) -> Result<Self, TrainError> {
        let s = s.trim();
        let num = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| TrainError::Config(format!("bad ablation value `{v}` in `{s}`")))
        };
        match s.split_once(':') {
            None => match s {
                "none" => Ok(Self::None),
                "scale01" => Ok(Self::ScaleTeUnit),
                "frozen" => Ok(Self::FrozenWeights(INIT_WEIGHT_STD)),
                _ => Err(TrainError::Config(format!("unknown ablation `{s}`"))),
            },
            Some(("fixed", v)) => Ok(Self::FixedTe(num(v)?)),
            Some(("layer", v)) => Ok(Self::LayerScaled(num(v)?)),
            Some(("frozen", v)) => Ok(Self::FrozenWeights(num(v)?)),
            _ => Err(TrainError::Config(format!("unknown ablation `{s}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::FixedTe(v) => format!("fixed:{v}"),
            Self::ScaleTeUnit => "scale01".into(),
            Self::LayerScaled(f) => format!("layer:{f}"),
            Self::FrozenWeights(v) => format!("frozen:{v}"),
        }
    }
}

/// Network used by Stage II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Init {
    /// Re-initialized from the run's Stage II seed, the same network the FF
    /// baseline of that run starts from.
    #[default]
    Fresh,
    /// Continues from the weights Stage I ended with.
    Continue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    /// Epoch cap `R` for Stage II and FF.
    pub max_epochs: usize,
    /// Stage I epoch cap; `None` shares `max_epochs`.
    pub stage1_epochs: Option<usize>,
    /// Binarization threshold `g`.
    pub g: f64,
    pub target_accuracy: f64,
    pub accuracy_kind: AccuracyKind,
    /// Samples between TE refreshes in Stage I; `None` computes the matrix
    /// once, when Stage I ends.
    pub te_recompute_interval: Option<usize>,
    pub seed: u64,
    pub ablation: Ablation,
    pub stage2_init: Stage2Init,
    pub warm_up: usize,
    pub min_series_len: usize,
    pub log_base: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.025,
            max_epochs: 300,
            stage1_epochs: None,
            g: 0.7,
            target_accuracy: 1.0,
            accuracy_kind: AccuracyKind::Training,
            te_recompute_interval: Some(1),
            seed: 0,
            ablation: Ablation::None,
            stage2_init: Stage2Init::Fresh,
            warm_up: 10,
            min_series_len: 10,
            log_base: 2.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(TrainError::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.max_epochs == 0 || self.stage1_epochs == Some(0) {
            return Err(TrainError::Config("epoch caps must be >= 1".into()));
        }
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(TrainError::Config(format!(
                "target accuracy must lie in (0, 1], got {}",
                self.target_accuracy
            )));
        }
        if self.te_recompute_interval == Some(0) {
            return Err(TrainError::Config("te_recompute_interval must be >= 1".into()));
        }
        match self.ablation {
            Ablation::FixedTe(v) | Ablation::LayerScaled(v) | Ablation::FrozenWeights(v)
                if !v.is_finite() =>
            {
                return Err(TrainError::Config(format!("non-finite ablation parameter {v}")))
            }
            _ => {}
        }
        self.te_config().validate()?;
        Ok(())
    }

    pub fn te_config(&self) -> TeConfig {
        TeConfig {
            k: 1,
            l: 1,
            log_base: self.log_base,
            threshold: self.g,
            warm_up: self.warm_up,
            min_series_len: self.min_series_len,
        }
    }

    pub fn stage1_cap(&self) -> usize {
        self.stage1_epochs.unwrap_or(self.max_epochs)
    }
}

/// Training samples per epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainSet {
    /// The same rows every epoch, reshuffled.
    Fixed(Dataset),
    /// A fresh draw of 200 XOR rows per epoch.
    Xor { seed: u64 },
}

/// What a stage trains on and evaluates against.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub train: TrainSet,
    pub validation: Option<Dataset>,
}

impl Task {
    pub fn xor(seed: u64) -> Self {
        Self {
            train: TrainSet::Xor { seed },
            validation: None,
        }
    }

    pub fn fixed(train: Dataset, validation: Option<Dataset>) -> Self {
        Self {
            train: TrainSet::Fixed(train),
            validation,
        }
    }

    pub fn input_size(&self) -> usize {
        match &self.train {
            TrainSet::Fixed(d) => d.feature_count(),
            TrainSet::Xor { .. } => 2,
        }
    }

    pub fn class_count(&self) -> usize {
        match &self.train {
            TrainSet::Fixed(d) => d.class_count(),
            TrainSet::Xor { .. } => 2,
        }
    }

    fn epoch_data(&self, epoch: usize) -> std::borrow::Cow<'_, Dataset> {
        match &self.train {
            TrainSet::Fixed(d) => std::borrow::Cow::Borrowed(d),
            TrainSet::Xor { seed } => std::borrow::Cow::Owned(data::xor_epoch(*seed, epoch)),
        }
    }
}

/// Result of one training stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub epochs_run: usize,
    pub reached_target: bool,
    pub accuracy_trace: Vec<f64>,
    pub te_snapshot: TeMatrix,
    pub final_network: Network,
    /// Samples processed.
    pub steps: usize,
    /// Recorded binary series (Stage I only).
    pub series: Option<SeriesStore>,
}

impl StageOutcome {
    pub fn final_accuracy(&self) -> f64 {
        self.accuracy_trace.last().copied().unwrap_or(0.0)
    }
}

/// State after every weight update, handed to an observer.
pub struct StepInfo<'a> {
    pub epoch: usize,
    /// 1-based sample count within the stage.
    pub step: usize,
    pub network: &'a Network,
    pub te: &'a TeMatrix,
}

pub type Observer<'o> = &'o mut dyn FnMut(&StepInfo<'_>);

/// Fraction of samples whose predicted class matches the label: argmax over
/// the outputs, or `output > 0.5` for a single output unit.
pub fn evaluate_accuracy(net: &Network, data: &Dataset) -> Result<f64, NetError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        let (x, y) = data.sample(i);
        let rec = net.forward(x)?;
        if predict(rec.output()) == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

pub fn predict(output: &[f64]) -> usize {
    if output.len() == 1 {
        usize::from(output[0] > 0.5)
    } else {
        let mut best = 0;
        for (c, &v) in output.iter().enumerate() {
            if v > output[best] {
                best = c;
            }
        }
        best
    }
}

enum TeSource<'a> {
    /// Record series and refresh the matrix as configured.
    Recording,
    /// Use this matrix for every update.
    Frozen(&'a TeMatrix),
}

fn check_topology(net: &Network, task: &Task) -> Result<(), TrainError> {
    if net.input_size() != task.input_size() {
        return Err(TrainError::Config(format!(
            "network expects {} inputs but the data has {} features",
            net.input_size(),
            task.input_size()
        )));
    }
    let classes = task.class_count();
    let out = net.output_size();
    if !(out == classes || (out == 1 && classes <= 2)) {
        return Err(TrainError::Config(format!(
            "network has {out} outputs for {classes} classes"
        )));
    }
    if let TrainSet::Fixed(d) = &task.train {
        if d.is_empty() {
            return Err(TrainError::Config("training set is empty".into()));
        }
    }
    Ok(())
}

fn run_stage(
    mut net: Network,
    task: &Task,
    cfg: &TrainConfig,
    source: TeSource<'_>,
    max_epochs: usize,
    order_seed: u64,
    mut observer: Option<Observer<'_>>,
) -> Result<StageOutcome, TrainError> {
    cfg.validate()?;
    check_topology(&net, task)?;
    if cfg.accuracy_kind == AccuracyKind::Validation && task.validation.is_none() {
        return Err(TrainError::Config("validation accuracy requested without a validation set".into()));
    }
    let te_cfg = cfg.te_config();
    let mut te = match source {
        TeSource::Frozen(t) => t.clone(),
        TeSource::Recording => TeMatrix::zeros(net.layer_sizes()),
    };
    let recording = matches!(source, TeSource::Recording);
    let mut store = SeriesStore::new(net.layer_sizes(), cfg.warm_up);
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
    let outputs = net.output_size();

    let mut trace = Vec::new();
    let mut reached = false;
    let mut step = 0usize;
    for epoch in 0..max_epochs {
        let data = task.epoch_data(epoch);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        for (pos, &i) in order.iter().enumerate() {
            let (x, label) = data.sample(i);
            let y = target_vector(label, outputs);
            let ctx = |source| TrainError::Numerical {
                epoch,
                sample: pos,
                source,
            };
            let rec = net.forward(x).map_err(ctx)?;
            if recording {
                store.record_step(&rec, cfg.g).map_err(ctx)?;
            }
            let grads = net.backward(&rec, &y).map_err(ctx)?;
            step += 1;
            if recording {
                if let Some(interval) = cfg.te_recompute_interval {
                    if step % interval == 0 {
                        match lag1_te_matrix(&store, &te_cfg) {
                            Ok(fresh) => te = fresh,
                            Err(TeError::TooShort { .. }) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
            net.apply_update(&grads, cfg.eta, &te).map_err(ctx)?;
            if let Some(obs) = observer.as_mut() {
                obs(&StepInfo {
                    epoch,
                    step,
                    network: &net,
                    te: &te,
                });
            }
        }
        let acc = match cfg.accuracy_kind {
            AccuracyKind::Training => evaluate_accuracy(&net, &data)?,
            AccuracyKind::Validation => {
                evaluate_accuracy(&net, task.validation.as_ref().expect("checked above"))?
            }
        };
        trace.push(acc);
        if acc >= cfg.target_accuracy {
            reached = true;
            break;
        }
    }

    if recording && cfg.te_recompute_interval.is_none() {
        match lag1_te_matrix(&store, &te_cfg) {
            Ok(fresh) => te = fresh,
            Err(TeError::TooShort { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(StageOutcome {
        epochs_run: trace.len(),
        reached_target: reached,
        accuracy_trace: trace,
        te_snapshot: te,
        final_network: net,
        steps: step,
        series: recording.then_some(store),
    })
}

/// Stage I: online training that records activations and refreshes the TE
/// matrix during the stage. The returned snapshot is the last matrix used.
pub fn train_stage1(net: Network, task: &Task, cfg: &TrainConfig) -> Result<StageOutcome, TrainError> {
    train_stage1_observed(net, task, cfg, None)
}

pub fn train_stage1_observed(
    net: Network,
    task: &Task,
    cfg: &TrainConfig,
    observer: Option<Observer<'_>>,
) -> Result<StageOutcome, TrainError> {
    run_stage(
        net,
        task,
        cfg,
        TeSource::Recording,
        cfg.stage1_cap(),
        seed::derive(cfg.seed, &[stream::STAGE1_ORDER]),
        observer,
    )
}

/// Stage II: online training with a frozen TE matrix.
pub fn train_stage2(
    net: Network,
    task: &Task,
    cfg: &TrainConfig,
    te: &TeMatrix,
) -> Result<StageOutcome, TrainError> {
    train_stage2_observed(net, task, cfg, te, None)
}

pub fn train_stage2_observed(
    net: Network,
    task: &Task,
    cfg: &TrainConfig,
    te: &TeMatrix,
    observer: Option<Observer<'_>>,
) -> Result<StageOutcome, TrainError> {
    if te.layer_count() != net.weights().len()
        || te.layers().iter().zip(net.weights()).any(|(t, w)| t.shape() != w.shape())
    {
        return Err(TrainError::Config("te matrix shape does not match the network".into()));
    }
    run_stage(
        net,
        task,
        cfg,
        TeSource::Frozen(te),
        cfg.max_epochs,
        seed::derive(cfg.seed, &[stream::STAGE2_ORDER]),
        observer,
    )
}

/// Plain online backpropagation: Stage II with a zero TE matrix.
pub fn train_ff(net: Network, task: &Task, cfg: &TrainConfig) -> Result<StageOutcome, TrainError> {
    train_ff_observed(net, task, cfg, None)
}

pub fn train_ff_observed(
    net: Network,
    task: &Task,
    cfg: &TrainConfig,
    observer: Option<Observer<'_>>,
) -> Result<StageOutcome, TrainError> {
    let zeros = TeMatrix::zeros(net.layer_sizes());
    train_stage2_observed(net, task, cfg, &zeros, observer)
}

/// Stage I network for a run.
pub fn stage1_network(layer_sizes: &[usize], cfg: &TrainConfig) -> Result<Network, NetError> {
    Network::new(layer_sizes, seed::derive(cfg.seed, &[stream::STAGE1_INIT]))
}

/// Stage II network for a run; also the FF baseline's starting point.
pub fn stage2_network(layer_sizes: &[usize], cfg: &TrainConfig) -> Result<Network, NetError> {
    Network::new(layer_sizes, seed::derive(cfg.seed, &[stream::STAGE2_INIT]))
}

/// A full FF+FB or FF run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stage1: Option<StageOutcome>,
    pub stage2: StageOutcome,
}

impl RunOutcome {
    /// Epochs counted against the target (Stage II only).
    pub fn epochs(&self) -> usize {
        self.stage2.epochs_run
    }
}

/// FF baseline from the run's Stage II initialization.
pub fn run_ff(layer_sizes: &[usize], task: &Task, cfg: &TrainConfig) -> Result<RunOutcome, TrainError> {
    let net = stage2_network(layer_sizes, cfg)?;
    Ok(RunOutcome {
        stage1: None,
        stage2: train_ff(net, task, cfg)?,
    })
}

/// Stage I followed by Stage II, honouring `cfg.ablation`.
pub fn run_fffb(layer_sizes: &[usize], task: &Task, cfg: &TrainConfig) -> Result<RunOutcome, TrainError> {
    cfg.validate()?;
    if let Ablation::FixedTe(v) = cfg.ablation {
        // the Stage I matrix would be discarded
        let net = stage2_network(layer_sizes, cfg)?;
        let te = TeMatrix::filled(layer_sizes, v);
        return Ok(RunOutcome {
            stage1: None,
            stage2: train_stage2(net, task, cfg, &te)?,
        });
    }
    let s1 = train_stage1(stage1_network(layer_sizes, cfg)?, task, cfg)?;
    let te = match cfg.ablation {
        Ablation::ScaleTeUnit => s1.te_snapshot.scaled_to_unit(),
        Ablation::LayerScaled(f) => s1.te_snapshot.layer_scaled(f),
        _ => s1.te_snapshot.clone(),
    };
    let net = match (cfg.ablation, cfg.stage2_init) {
        (Ablation::FrozenWeights(v), _) => Network::constant(layer_sizes, v)?,
        (_, Stage2Init::Continue) => s1.final_network.clone(),
        (_, Stage2Init::Fresh) => stage2_network(layer_sizes, cfg)?,
    };
    let s2 = train_stage2(net, task, cfg, &te)?;
    Ok(RunOutcome {
        stage1: Some(s1),
        stage2: s2,
    })
}

/// Runs the configured control experiment.
pub fn run_ablation(layer_sizes: &[usize], task: &Task, cfg: &TrainConfig) -> Result<RunOutcome, TrainError> {
    if cfg.ablation == Ablation::None {
        return Err(TrainError::Config("run_ablation needs an ablation mode".into()));
    }
    run_fffb(layer_sizes, task, cfg)
}

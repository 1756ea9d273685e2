use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tebp::harness::{
    self, default_report_dir, emit_report, layer_sizes, ExperimentSpec, HarnessError, Mode, RunMode, RunReport,
    Source,
};
use tebp::trainer::{self, RunOutcome};

#[derive(Parser)]
#[command(name = "tebp", version, about = "Backpropagation with transfer-entropy feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single run and print its accuracy per epoch.
    Train {
        #[command(flatten)]
        common: Common,
        /// Write the Stage I binary series and te matrix as CSV into this directory.
        #[arg(long, value_name = "DIR")]
        dump_te: Option<PathBuf>,
    },
    /// Seeded multi-run comparison with CSV/JSON reports.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Two-phase search: η by FF, then g by FF+FB.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.025,0.05,0.1")]
        eta_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
        g_grid: Vec<f64>,
    },
    /// FF baseline plus each `--ablation` variant.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
}

/// Every flag mirrors a spec-file key and overrides it.
#[derive(Args)]
struct Common {
    /// Spec file with `key = value` lines.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// CSV path or `xor`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    schema: Option<String>,
    /// ff, fffb or both.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    g: Option<String>,
    /// Epoch cap for Stage II and FF.
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    stage1_epochs: Option<String>,
    /// Fraction or percentage.
    #[arg(long)]
    target_acc: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
    /// Hidden layer sizes, e.g. `5` or `8,4`.
    #[arg(long)]
    hidden: Option<String>,
    /// Samples between Stage I te refreshes, or `never`.
    #[arg(long)]
    te_interval: Option<String>,
    /// fixed:<v>, scale01, layer:<f>, frozen[:<v>]; comma separated.
    #[arg(long)]
    ablation: Option<String>,
    /// Training fraction of each split.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv, json or csv,json.
    #[arg(long)]
    format: Option<String>,
    /// Parallel runs; 0 uses every core.
    #[arg(long)]
    workers: Option<String>,
    /// fresh or continue.
    #[arg(long)]
    stage2_init: Option<String>,
    /// training, validation or auto.
    #[arg(long)]
    accuracy: Option<String>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec, String> {
        let mut spec = match &self.spec {
            Some(p) => ExperimentSpec::from_file(p).map_err(|e| e.to_string())?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("dataset", &self.dataset),
            ("schema", &self.schema),
            ("mode", &self.mode),
            ("eta", &self.eta),
            ("g", &self.g),
            ("epochs", &self.epochs),
            ("stage1-epochs", &self.stage1_epochs),
            ("target-acc", &self.target_acc),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("hidden", &self.hidden),
            ("te-interval", &self.te_interval),
            ("ablation", &self.ablation),
            ("split", &self.split),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
            ("stage2-init", &self.stage2_init),
            ("accuracy", &self.accuracy),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.apply(key, v, None).map_err(|e| format!("--{key}: {e}"))?;
            }
        }
        Ok(spec)
    }
}

fn report_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.report_dir.clone().unwrap_or_else(|| default_report_dir(spec))
}

fn print_summary(report: &RunReport) {
    println!(
        "{} ({} runs, layers {:?}, eta {}, g {}, target {}, cap {})",
        report.dataset.name,
        report.config.runs,
        report.config.layer_sizes,
        report.config.train.eta,
        report.config.train.g,
        report.config.train.target_accuracy,
        report.config.train.max_epochs
    );
    println!("{:<24} {:>8} {:>12} {:>14} {:>10}", "mode", "reached", "mean_epochs", "median_epochs", "mean_acc");
    for m in &report.config.modes {
        let a = &report.aggregates[m];
        println!(
            "{:<24} {:>5}/{:<2} {:>12.1} {:>14.1} {:>10.4}",
            m, a.reached, a.runs, a.mean_epochs, a.median_epochs, a.mean_final_accuracy
        );
    }
}

fn experiment(spec: &ExperimentSpec) -> Result<(), HarnessError> {
    let report = harness::run_experiment(spec)?;
    print_summary(&report);
    for p in emit_report(&report, &report_dir(spec), spec.formats)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn dump(out: &RunOutcome, dir: &Path) -> Result<(), HarnessError> {
    let Some(s1) = &out.stage1 else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut buf = Vec::new();
    s1.te_snapshot.write_csv(&mut buf)?;
    write(&dir.join("te.csv"), &buf)?;
    if let Some(series) = &s1.series {
        let mut buf = Vec::new();
        series.write_csv(&mut buf)?;
        write(&dir.join("series.csv"), &buf)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn train(spec: &ExperimentSpec, dump_dir: Option<&Path>) -> Result<(), HarnessError> {
    spec.validate()?;
    let source = Source::load(&spec.dataset)?;
    let sizes = layer_sizes(source.input_size(), &spec.hidden, source.class_count());
    let run_seed = tebp::seed::derive(spec.train.seed, &[tebp::seed::stream::RUN, 0]);
    let (task, _) = source.task(run_seed, spec.split)?;
    println!("{} layers {:?}", source.name(), sizes);
    for mode in spec.run_modes() {
        let cfg = spec.run_config(run_seed, mode);
        let wrap = |source| HarnessError::Run {
            run: 0,
            mode: mode.label(),
            source,
        };
        let out = match mode {
            RunMode::Ff => trainer::run_ff(&sizes, &task, &cfg),
            RunMode::FfFb => trainer::run_fffb(&sizes, &task, &cfg),
            RunMode::Ablation(_) => trainer::run_ablation(&sizes, &task, &cfg),
        }
        .map_err(wrap)?;
        if let Some(s1) = &out.stage1 {
            println!(
                "{} stage I: {} epochs, te per layer {:?}",
                mode.label(),
                s1.epochs_run,
                s1.te_snapshot
                    .summary()
                    .iter()
                    .map(|s| format!("[{:.4}, {:.4}] mean {:.4}", s.min, s.max, s.mean))
                    .collect::<Vec<_>>()
            );
        }
        for (e, acc) in out.stage2.accuracy_trace.iter().enumerate() {
            println!("{}\t{}\t{:.4}", mode.label(), e + 1, acc);
        }
        println!(
            "{}: {} after {} epochs",
            mode.label(),
            if out.stage2.reached_target { "reached target" } else { "missed target" },
            out.stage2.epochs_run
        );
        if let Some(dir) = dump_dir {
            dump(&out, dir)?;
        }
    }
    Ok(())
}

fn grid(spec: &ExperimentSpec, etas: &[f64], gs: &[f64]) -> Result<(), HarnessError> {
    let report = harness::grid_search(spec, etas, gs)?;
    println!("{:<6} {:>8} {:>6} {:>12} {:>10} {:>8}", "mode", "eta", "g", "mean_epochs", "mean_acc", "reached");
    for c in &report.cells {
        println!(
            "{:<6} {:>8} {:>6} {:>12.1} {:>10.4} {:>5}/{}",
            c.mode,
            c.eta,
            c.g.map(|g| g.to_string()).unwrap_or_else(|| "-".into()),
            c.mean_epochs,
            c.mean_final_accuracy,
            c.reached,
            c.runs
        );
    }
    println!("best eta {} g {}", report.best_eta, report.best_g);
    let dir = report_dir(spec);
    fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    if spec.formats.csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write(&dir.join("grid.csv"), &buf)?;
    }
    if spec.formats.json {
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        write(&dir.join("grid.json"), s.as_bytes())?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Train { common, .. }
        | Command::Experiment { common }
        | Command::Grid { common, .. }
        | Command::Ablate { common } => common,
    };
    let mut spec = match common.spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Train { dump_te, .. } => {
            spec.runs = 1;
            if common.mode.is_none() && common.spec.is_none() {
                spec.mode = Mode::FfFb;
            }
            train(&spec, dump_te.as_deref())
        }
        Command::Experiment { .. } => experiment(&spec),
        Command::Grid { eta_grid, g_grid, .. } => grid(&spec, eta_grid, g_grid),
        Command::Ablate { .. } => {
            spec.mode = Mode::Ablation;
            experiment(&spec)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails when a criterion fails that is not listed in `KNOWN_RED`;
//! known-red criteria still print FAIL together with their reason.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::{
    all_series, asymmetry_pair, central_diff, flatten, grad_error, lagged_pair, oracle_te, random_case, Gen,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tebp::data::{self, target_vector, Schema, SplitSpec};
use tebp::harness::{run_experiment, DatasetRef, ExperimentSpec, Mode, RunReport};
use tebp::seed::{self, stream};
use tebp::te::{estimate_te_general, estimate_te_lag1, BinarySeries};
use tebp::trainer::{
    run_ablation, run_ff, stage2_network, train_ff_observed, train_stage2_observed, Ablation, AccuracyKind,
    StepInfo, Task, TrainConfig,
};
use tebp::{Network, TeMatrix};

const ORACLE_TOL: f64 = 1e-12;
const RANDOM_PAIRS: usize = 10_000;
const GRAD_REL: f64 = 1e-6;
const GRAD_ABS_FLOOR: f64 = 1e-9;
const GRAD_NETS: usize = 100;
const FD_STEP: f64 = 1e-5;
const FF_EQUIV_TOL: f64 = 1e-12;
const FF_EQUIV_EPOCHS: usize = 3;
const NON_NEG_TOL: f64 = -1e-12;

/// Criteria expected to fail here, with the reason printed next to them.
const KNOWN_RED: &[(u32, &str)] = &[
    (
        4,
        "FF+FB side: the Stage I snapshot is near zero because the binarized \
         hidden/output series are almost constant on the XOR plateau",
    ),
    (5, "abalone and divorce data files are not available offline"),
];

struct Verdict {
    pass: bool,
    detail: String,
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn bs(b: &[u8]) -> BinarySeries {
    BinarySeries::from_bits(b).unwrap()
}

fn params(net: &Network) -> Vec<f64> {
    net.weights()
        .iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .chain(net.biases().iter().flatten().copied())
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

fn capped_epochs(report: &RunReport, mode: &str) -> Vec<usize> {
    let cap = report.config.train.max_epochs;
    report.mode_rows(mode).map(|r| if r.reached { r.epochs } else { cap }).collect()
}

fn c1_oracle_equivalence() -> Verdict {
    let mut worst = 0.0f64;
    let mut mismatched_general = 0usize;
    let mut pairs = 0usize;
    let mut check = |s: &[u8], d: &[u8]| {
        let lag1 = estimate_te_lag1(&bs(s), &bs(d), 2.0).unwrap();
        let general = estimate_te_general(&bs(s), &bs(d), 1, 1, 2.0).unwrap();
        worst = worst.max((lag1 - oracle_te(s, d)).abs());
        if lag1.to_bits() != general.to_bits() {
            mismatched_general += 1;
        }
        pairs += 1;
    };
    for n in 2..=8 {
        let all = all_series(n);
        for s in &all {
            for d in &all {
                check(s, d);
            }
        }
    }
    let exhaustive: usize = (2..=8).map(|n| 1usize << (2 * n)).sum();
    let mut g = Gen(1);
    for _ in 0..RANDOM_PAIRS {
        let n = 9 + g.below(56) as usize;
        let (s, d) = (g.bits(n), g.bits(n));
        check(&s, &d);
    }
    Verdict {
        pass: worst <= ORACLE_TOL && mismatched_general == 0,
        detail: format!(
            "{pairs} pairs ({exhaustive} exhaustive + {RANDOM_PAIRS} random), max |lag1 - oracle| = {worst:.1e}, \
             general(1,1) bit mismatches = {mismatched_general}"
        ),
    }
}

fn c2_gradients() -> Verdict {
    let mut g = Gen(2);
    let mut worst = 0.0f64;
    for _ in 0..GRAD_NETS {
        let (net, x, y) = random_case(&mut g);
        let analytic = flatten(&net.backward(&net.forward(&x).unwrap(), &y).unwrap());
        let numeric = central_diff(&net, &x, &y, FD_STEP);
        worst = worst.max(grad_error(&analytic, &numeric, GRAD_REL, GRAD_ABS_FLOOR));
    }
    Verdict {
        pass: worst <= 1.0,
        detail: format!("{GRAD_NETS} nets, worst error / tolerance = {worst:.3}"),
    }
}

fn iris_task(split_seed: u64) -> Task {
    let schema = Schema::from_file(&repo("data/iris/iris.schema")).unwrap();
    let d = data::load_csv(&schema.data_path().unwrap(), &schema).unwrap().dataset;
    let s = data::split(
        &d,
        &SplitSpec {
            train_fraction: 0.7,
            seed: split_seed,
            stratified: true,
        },
    )
    .unwrap();
    Task::fixed(s.train, Some(s.test))
}

/// Plain online SGD written against the public network API, with the same
/// per-epoch shuffle stream the trainers use for Stage II.
fn reference_sgd(mut net: Network, task: &Task, cfg: &TrainConfig, epochs: usize) -> Vec<Vec<f64>> {
    let tebp::trainer::TrainSet::Fixed(d) = &task.train else {
        unreachable!()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[stream::STAGE2_ORDER]));
    let mut steps = Vec::new();
    for _ in 0..epochs {
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.shuffle(&mut rng);
        for i in order {
            let (x, label) = d.sample(i);
            let rec = net.forward(x).unwrap();
            let grads = net.backward(&rec, &target_vector(label, net.output_size())).unwrap();
            for (w, gw) in net.weights_mut().iter_mut().zip(&grads.weights) {
                for (v, g) in w.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                    *v -= cfg.eta * g;
                }
            }
            for (b, gb) in net.biases_mut().iter_mut().zip(&grads.biases) {
                for (v, g) in b.iter_mut().zip(gb) {
                    *v -= cfg.eta * g;
                }
            }
            steps.push(params(&net));
        }
    }
    steps
}

fn record_steps(f: impl FnOnce(&mut dyn FnMut(&StepInfo<'_>))) -> Vec<Vec<f64>> {
    let mut steps = Vec::new();
    f(&mut |s: &StepInfo<'_>| steps.push(params(s.network)));
    steps
}

fn c3_ff_equivalence() -> Verdict {
    let task = iris_task(3);
    let cfg = TrainConfig {
        max_epochs: FF_EQUIV_EPOCHS,
        target_accuracy: 1.0,
        accuracy_kind: AccuracyKind::Training,
        seed: 3,
        ..TrainConfig::default()
    };
    let sizes = [4, 5, 3];
    let net = stage2_network(&sizes, &cfg).unwrap();
    let zeros = TeMatrix::zeros(&sizes);
    let s2 = record_steps(|obs| {
        train_stage2_observed(net.clone(), &task, &cfg, &zeros, Some(obs)).unwrap();
    });
    let ff = record_steps(|obs| {
        train_ff_observed(net.clone(), &task, &cfg, Some(obs)).unwrap();
    });
    let reference = reference_sgd(net, &task, &cfg, FF_EQUIV_EPOCHS);
    let same_len = s2.len() == ff.len() && ff.len() == reference.len();
    let d_ff = s2.iter().zip(&ff).map(|(a, b)| max_diff(a, b)).fold(0.0, f64::max);
    let d_ref = s2.iter().zip(&reference).map(|(a, b)| max_diff(a, b)).fold(0.0, f64::max);
    Verdict {
        pass: same_len && d_ff <= FF_EQUIV_TOL && d_ref <= FF_EQUIV_TOL,
        detail: format!(
            "{} steps over {FF_EQUIV_EPOCHS} epochs, max per-step diff stage2(te=0) vs FF = {d_ff:.1e}, \
             vs reference SGD = {d_ref:.1e}",
            s2.len()
        ),
    }
}

fn xor_spec(mode: Mode, runs: usize, cap: usize) -> ExperimentSpec {
    ExperimentSpec {
        dataset: DatasetRef::Xor,
        runs,
        mode,
        hidden: vec![2],
        train: TrainConfig {
            eta: 0.025,
            g: 0.7,
            max_epochs: cap,
            target_accuracy: 1.0,
            seed: 1,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    }
}

fn c4_xor() -> Verdict {
    let report = run_experiment(&xor_spec(Mode::Both, 10, 300)).unwrap();
    let fb = capped_epochs(&report, "ff_fb");
    let ff = capped_epochs(&report, "ff");
    let fb_conv = report.aggregates["ff_fb"].reached;
    let ff_capped = 10 - report.aggregates["ff"].reached;
    let (fb_med, ff_med) = (median(fb.clone()), median(ff.clone()));
    let checks = [fb_med <= 100.0, ff_med >= 180.0, fb_conv >= 7, ff_capped >= 2];
    Verdict {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "FF+FB median {fb_med} (<= 100: {}), FF median {ff_med} (>= 180: {}), \
             FF+FB converged {fb_conv}/10 (>= 7: {}), FF capped {ff_capped}/10 (>= 2: {}); \
             FF+FB {fb:?}, FF {ff:?}",
            checks[0], checks[1], checks[2], checks[3]
        ),
    }
}

/// Runs a shipped experiment spec with the target, cap and run count pinned.
fn uci(name: &str, target: f64, cap: usize) -> Result<RunReport, String> {
    let mut spec = ExperimentSpec::from_file(&repo(&format!("experiments/{name}.spec"))).map_err(|e| e.to_string())?;
    let schema = Schema::from_file(&repo(&format!("data/{name}/{name}.schema"))).map_err(|e| e.to_string())?;
    let path = schema.data_path().ok_or("schema has no file entry")?;
    if !path.exists() {
        return Err(format!("{} not found", path.display()));
    }
    spec.runs = 10;
    spec.mode = Mode::Both;
    spec.train.target_accuracy = target;
    spec.train.max_epochs = cap;
    run_experiment(&spec).map_err(|e| e.to_string())
}

fn c5_uci() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, target, cap) in [("iris", 0.92, 100), ("divorce", 0.98, 20)] {
        match uci(name, target, cap) {
            Ok(r) => {
                let (fb, ff) = (r.aggregates["ff_fb"].reached, r.aggregates["ff"].reached);
                pass &= fb >= 8 && ff >= 8;
                parts.push(format!("{name}: FF+FB {fb}/10, FF {ff}/10 reached (>= 8 each)"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: not run ({e})"));
            }
        }
    }
    match uci("abalone", 0.52, 50) {
        Ok(r) => {
            let (fb, ff) = (r.aggregates["ff_fb"].mean_epochs, r.aggregates["ff"].mean_epochs);
            pass &= fb < ff;
            parts.push(format!("abalone: mean epochs FF+FB {fb:.1} vs FF {ff:.1} (FF+FB < FF)"));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("abalone: not run ({e})"));
        }
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn c6_ablations() -> Verdict {
    let sizes = [2, 2, 1];
    let cfg = TrainConfig {
        max_epochs: 30,
        seed: 6,
        ..TrainConfig::default()
    };
    let task = Task::xor(seed::derive(6, &[stream::DATA]));

    // fixed_te(0) against FF, step by step and as full outcomes
    let net = stage2_network(&sizes, &cfg).unwrap();
    let a = record_steps(|obs| {
        train_stage2_observed(net.clone(), &task, &cfg, &TeMatrix::filled(&sizes, 0.0), Some(obs)).unwrap();
    });
    let b = record_steps(|obs| {
        train_ff_observed(net.clone(), &task, &cfg, Some(obs)).unwrap();
    });
    let steps_equal = a == b;
    let fixed0 = run_ablation(&sizes, &task, &TrainConfig { ablation: Ablation::FixedTe(0.0), ..cfg.clone() }).unwrap();
    let outcome_equal = fixed0.stage2 == run_ff(&sizes, &task, &cfg).unwrap().stage2;

    // fixed_te(1): every non-bias weight keeps its initial value at every step
    let initial = net.weights().to_vec();
    let mut frozen = true;
    train_stage2_observed(
        net.clone(),
        &task,
        &cfg,
        &TeMatrix::filled(&sizes, 1.0),
        Some(&mut |s: &StepInfo<'_>| frozen &= s.network.weights() == initial.as_slice()),
    )
    .unwrap();

    let mut spec = xor_spec(Mode::Ablation, 5, 100);
    spec.ablations = vec![
        Ablation::ScaleTeUnit,
        Ablation::LayerScaled(0.5),
        Ablation::LayerScaled(2.0),
        Ablation::FrozenWeights(0.1),
    ];
    let (reported, summary) = match run_experiment(&spec) {
        Ok(r) => {
            let s = r
                .config
                .modes
                .iter()
                .map(|m| {
                    let a = &r.aggregates[m];
                    format!("{m} {}/{} mean {:.1}", a.reached, a.runs, a.mean_epochs)
                })
                .collect::<Vec<_>>()
                .join(", ");
            (r.runs.len() == 5 * 5, s)
        }
        Err(e) => (false, e.to_string()),
    };
    Verdict {
        pass: steps_equal && outcome_equal && frozen && reported,
        detail: format!(
            "fixed:0 == FF per step: {steps_equal} ({} steps), outcome equal: {outcome_equal}; \
             fixed:1 weights frozen: {frozen}; reported: {summary}",
            a.len()
        ),
    }
}

fn c7_properties() -> Verdict {
    let mut g = Gen(7);
    let mut const_zero = true;
    let mut min_te = f64::INFINITY;
    for _ in 0..RANDOM_PAIRS {
        let n = 2 + g.below(63) as usize;
        let d = g.bits(n);
        let s = vec![(g.next_u64() & 1) as u8; n];
        let te = estimate_te_lag1(&bs(&s), &bs(&d), 2.0).unwrap();
        const_zero &= te == 0.0 && oracle_te(&s, &d).abs() <= ORACLE_TOL;
        let s2 = g.bits(n);
        min_te = min_te.min(estimate_te_lag1(&bs(&s2), &bs(&d), 2.0).unwrap());
    }
    let (s, d) = asymmetry_pair();
    let fwd = estimate_te_lag1(&bs(&s), &bs(&d), 2.0).unwrap();
    let bwd = estimate_te_lag1(&bs(&d), &bs(&s), 2.0).unwrap();
    let asym = (fwd - oracle_te(&s, &d)).abs() <= ORACLE_TOL
        && (bwd - oracle_te(&d, &s)).abs() <= ORACLE_TOL
        && fwd != bwd;
    let (ls, ld) = lagged_pair(64);
    let lag = estimate_te_lag1(&bs(&ls), &bs(&ld), 2.0).unwrap();
    let lag_expected = oracle_te(&ls, &ld);
    let lag_ok = (lag - lag_expected).abs() <= ORACLE_TOL && lag > 0.0;
    Verdict {
        pass: const_zero && min_te >= NON_NEG_TOL && asym && lag_ok,
        detail: format!(
            "constant source zero: {const_zero}; min te = {min_te:.1e}; asymmetry {fwd:.4} vs {bwd:.4}; \
             lagged pair {lag:.6} (oracle {lag_expected:.6})"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 7] = [
        (1, "TE estimator oracle equivalence", c1_oracle_equivalence),
        (2, "gradient correctness", c2_gradients),
        (3, "FF equivalence", c3_ff_equivalence),
        (4, "XOR reproduction", c4_xor),
        (5, "UCI fast convergers", c5_uci),
        (6, "ablation sanity", c6_ablations),
        (7, "estimator properties", c7_properties),
    ];
    let mut unexpected = 0;
    for (n, name, f) in criteria {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_RED.iter().find(|(k, _)| *k == n);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} ({name}): {status} [{secs:.1}s] {}", v.detail);
        match (v.pass, known) {
            (false, Some((_, why))) => println!("  known red: {why}"),
            (false, None) => unexpected += 1,
            _ => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

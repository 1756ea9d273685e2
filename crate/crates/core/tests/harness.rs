use std::path::{Path, PathBuf};

use proptest::prelude::*;
use tebp::data::{load_csv, Schema};
use tebp::harness::{
    aggregate, emit_report, from_json, run_experiment, to_json, DatasetRef, ExperimentSpec, Formats, Mode, RunRow,
    CURVES_FILE, EPOCHS_FILE, REPORT_FILE,
};
use tebp::trainer::TrainConfig;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn xor_spec(runs: usize, cap: usize) -> ExperimentSpec {
    ExperimentSpec {
        runs,
        mode: Mode::Both,
        train: TrainConfig {
            max_epochs: cap,
            seed: 5,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    }
}

#[test]
fn json_round_trip_is_byte_equal() {
    let report = run_experiment(&xor_spec(2, 6)).unwrap();
    let text = to_json(&report).unwrap();
    let back = from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_json(&back).unwrap(), text);
}

#[test]
fn worker_count_does_not_change_results() {
    let mut a = xor_spec(4, 5);
    a.workers = 1;
    let mut b = a.clone();
    b.workers = 3;
    assert_eq!(run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
}

#[test]
fn emitted_files_respect_bounds() {
    let (runs, cap) = (3, 8);
    let report = run_experiment(&xor_spec(runs, cap)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path(), Formats::default()).unwrap();
    assert_eq!(files.len(), 4);
    let curves = std::fs::read_to_string(dir.path().join(CURVES_FILE)).unwrap();
    assert!(curves.lines().count() - 1 <= runs * cap * 2);
    let epochs = std::fs::read_to_string(dir.path().join(EPOCHS_FILE)).unwrap();
    assert_eq!(epochs.lines().next(), Some("run,ff_fb_epochs,ff_epochs"));
    let json = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(from_json(&json).unwrap(), report);
    assert!(json.contains("\"stage2_init\": \"fresh\""));
    assert!(json.contains("\"split\": 0.7"));
}

#[test]
fn emitter_rejects_empty_traces_and_stale_aggregates() {
    let mut report = run_experiment(&xor_spec(1, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut stale = report.clone();
    stale.runs[0].epochs += 1;
    stale.runs[0].reached = true;
    assert!(emit_report(&stale, dir.path(), Formats::default()).is_err());
    report.runs[0].accuracy_trace.clear();
    assert!(emit_report(&report, dir.path(), Formats::default()).is_err());
}

#[test]
fn iris_experiment_uses_per_run_splits() {
    let spec = ExperimentSpec {
        dataset: DatasetRef::Csv {
            data: None,
            schema: Some(repo("data/iris/iris.schema")),
        },
        runs: 3,
        mode: Mode::FfFb,
        hidden: vec![4],
        train: TrainConfig {
            max_epochs: 2,
            seed: 9,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    };
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.dataset.name, "iris");
    assert_eq!(report.dataset.samples, Some(150));
    assert_eq!(report.config.layer_sizes, vec![4, 4, 3]);
    let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
    assert!(report.runs.iter().all(|r| r.stage1_epochs == Some(2)));
}

#[test]
fn shipped_schemas_parse() {
    let names = [
        "abalone", "car", "chess", "divorce", "glass", "ionosphere", "iris", "liver", "redwine", "seeds",
    ];
    for n in names {
        let schema = Schema::from_file(&repo(&format!("data/{n}/{n}.schema"))).unwrap();
        assert!(schema.file.is_some(), "{n}");
    }
    let iris = Schema::from_file(&repo("data/iris/iris.schema")).unwrap();
    let loaded = load_csv(&iris.data_path().unwrap(), &iris).unwrap();
    let d = loaded.dataset;
    assert_eq!((d.len(), d.feature_count(), d.class_count()), (150, 4, 3));
    for c in 0..3 {
        assert_eq!(d.labels().iter().filter(|&&l| l == c).count(), 50);
    }
    assert!(loaded.rejected_rows.is_empty());
}

#[test]
fn shipped_specs_parse() {
    let dir = repo("experiments");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "spec") {
            let spec = ExperimentSpec::from_file(&path).unwrap();
            spec.validate().unwrap();
            count += 1;
        }
    }
    assert_eq!(count, 11);
    let xor = ExperimentSpec::from_file(&dir.join("xor.spec")).unwrap();
    assert_eq!(xor.dataset, DatasetRef::Xor);
    assert_eq!((xor.train.eta, xor.train.g, xor.train.max_epochs), (0.025, 0.7, 300));
    assert_eq!(xor.hidden, vec![2]);
}

fn arb_row() -> impl Strategy<Value = RunRow> {
    (0usize..4, 1usize..50, any::<bool>(), 0.0f64..1.0, 0usize..5).prop_map(|(m, epochs, reached, acc, run)| RunRow {
        run,
        seed: 0,
        mode: ["ff", "ff_fb", "ablation:scale01", "ablation:fixed:0"][m].into(),
        epochs: if reached { epochs } else { 50 },
        reached,
        final_accuracy: acc,
        accuracy_trace: vec![acc; if reached { epochs } else { 50 }],
        stage1_epochs: None,
        stage1_reached: None,
        te_summary: Vec::new(),
        clamped: 0,
    })
}

proptest! {
    #[test]
    fn aggregates_follow_the_cap_rule(rows in proptest::collection::vec(arb_row(), 1..30)) {
        let agg = aggregate(&rows, 50);
        let total: usize = agg.values().map(|a| a.runs).sum();
        prop_assert_eq!(total, rows.len());
        for (mode, a) in &agg {
            let rs: Vec<&RunRow> = rows.iter().filter(|r| &r.mode == mode).collect();
            let mean = rs.iter().map(|r| if r.reached { r.epochs } else { 50 } as f64).sum::<f64>() / rs.len() as f64;
            prop_assert!((a.mean_epochs - mean).abs() < 1e-9);
            prop_assert!(a.min_epochs as f64 <= a.median_epochs && a.median_epochs <= a.max_epochs as f64);
            prop_assert_eq!(a.reached, rs.iter().filter(|r| r.reached).count());
        }
    }
}

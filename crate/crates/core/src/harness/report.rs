use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::RunReport;
use super::spec::Formats;
use super::HarnessError;

pub const CURVES_FILE: &str = "curves.csv";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.json";

/// Canonical JSON: fixed struct field order, sorted maps, shortest
/// round-trip floats.
pub fn to_json(report: &RunReport) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<RunReport, HarnessError> {
    Ok(serde_json::from_str(text)?)
}

/// `run,epoch,mode,accuracy` with 1-based epochs.
pub fn write_curves<W: std::io::Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "epoch", "mode", "accuracy"])?;
    for r in &report.runs {
        for (e, acc) in r.accuracy_trace.iter().enumerate() {
            w.write_record([r.run.to_string(), (e + 1).to_string(), r.mode.clone(), acc.to_string()])?;
        }
    }
    w.flush().map_err(|e| HarnessError::Report(e.to_string()))?;
    Ok(())
}

/// One row per run and one `<mode>_epochs` column per mode, missed targets
/// reported as the cap.
pub fn write_epochs<W: std::io::Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    let modes = &report.config.modes;
    let cap = report.config.train.max_epochs;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string()];
    header.extend(modes.iter().map(|m| format!("{}_epochs", m.replace(':', "_"))));
    w.write_record(&header)?;
    for run in 0..report.config.runs {
        let mut rec = vec![run.to_string()];
        for m in modes {
            let cell = report
                .runs
                .iter()
                .find(|r| r.run == run && &r.mode == m)
                .map(|r| if r.reached { r.epochs } else { cap }.to_string())
                .unwrap_or_default();
            rec.push(cell);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| HarnessError::Report(e.to_string()))?;
    Ok(())
}

pub fn write_summary<W: std::io::Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "runs",
        "reached",
        "mean_epochs",
        "median_epochs",
        "min_epochs",
        "max_epochs",
        "mean_final_accuracy",
    ])?;
    for m in &report.config.modes {
        if let Some(a) = report.aggregates.get(m) {
            w.write_record([
                m.clone(),
                a.runs.to_string(),
                a.reached.to_string(),
                a.mean_epochs.to_string(),
                a.median_epochs.to_string(),
                a.min_epochs.to_string(),
                a.max_epochs.to_string(),
                a.mean_final_accuracy.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| HarnessError::Report(e.to_string()))?;
    Ok(())
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, HarnessError> {
    fs::write(&path, bytes).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit_report(report: &RunReport, dir: &Path, formats: Formats) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(r) = report.runs.iter().find(|r| r.accuracy_trace.is_empty()) {
        return Err(HarnessError::Report(format!("run {} ({}) has an empty trace", r.run, r.mode)));
    }
    if report.aggregates != report.recompute_aggregates() {
        return Err(HarnessError::Report("aggregates do not match the run rows".into()));
    }
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if formats.csv {
        let mut buf = Vec::new();
        write_curves(report, &mut buf)?;
        written.push(write_file(dir.join(CURVES_FILE), &buf)?);
        let mut buf = Vec::new();
        write_epochs(report, &mut buf)?;
        written.push(write_file(dir.join(EPOCHS_FILE), &buf)?);
        let mut buf = Vec::new();
        write_summary(report, &mut buf)?;
        written.push(write_file(dir.join(SUMMARY_FILE), &buf)?);
    }
    if formats.json {
        written.push(write_file(dir.join(REPORT_FILE), to_json(report)?.as_bytes())?);
    }
    Ok(written)
}

use serde::{Deserialize, Serialize};

use super::experiment::{run_on, Source};
use super::spec::{ExperimentSpec, Mode};
use super::HarnessError;

/// Averages of one grid point. `g` is `None` for FF cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub mode: String,
    pub eta: f64,
    pub g: Option<f64>,
    pub mean_epochs: f64,
    pub mean_final_accuracy: f64,
    pub reached: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub best_eta: f64,
    pub best_g: f64,
    /// FF cells for every η, then FF+FB cells for every (η, g).
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn cell(&self, mode: &str, eta: f64, g: Option<f64>) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.mode == mode && c.eta == eta && c.g == g)
    }

    /// `mode,eta,g,mean_epochs,mean_final_accuracy,reached,runs`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mode", "eta", "g", "mean_epochs", "mean_final_accuracy", "reached", "runs"])?;
        for c in &self.cells {
            w.write_record([
                c.mode.clone(),
                c.eta.to_string(),
                c.g.map(|g| g.to_string()).unwrap_or_default(),
                c.mean_epochs.to_string(),
                c.mean_final_accuracy.to_string(),
                c.reached.to_string(),
                c.runs.to_string(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::Report(e.to_string()))?;
        Ok(())
    }
}

/// Fewest mean epochs, then higher accuracy, then the smaller parameter.
fn better(a: &GridCell, a_param: f64, b: &GridCell, b_param: f64) -> bool {
    use std::cmp::Ordering::*;
    match a.mean_epochs.total_cmp(&b.mean_epochs) {
        Less => true,
        Greater => false,
        Equal => match a.mean_final_accuracy.total_cmp(&b.mean_final_accuracy) {
            Greater => true,
            Less => false,
            Equal => a_param < b_param,
        },
    }
}

fn pick<'a>(cells: impl Iterator<Item = (&'a GridCell, f64)>) -> Option<f64> {
    let mut best: Option<(&GridCell, f64)> = None;
    for (c, p) in cells {
        if best.is_none_or(|(b, bp)| better(c, p, b, bp)) {
            best = Some((c, p));
        }
    }
    best.map(|(_, p)| p)
}

fn cell(source: &Source, spec: &ExperimentSpec, mode: Mode, eta: f64, g: f64) -> Result<GridCell, HarnessError> {
    let mut s = spec.clone();
    s.mode = mode;
    s.train.eta = eta;
    s.train.g = g;
    let report = run_on(source, &s)?;
    let label = s.run_modes()[0].label();
    let a = &report.aggregates[&label];
    Ok(GridCell {
        mode: label,
        eta,
        g: (mode == Mode::FfFb).then_some(g),
        mean_epochs: a.mean_epochs,
        mean_final_accuracy: a.mean_final_accuracy,
        reached: a.reached,
        runs: a.runs,
    })
}

/// Two-phase search: η by FF performance, then g by FF+FB performance at
/// that η. FF+FB is still evaluated on the full grid so the report shows
/// how g behaves for every η.
pub fn grid_search_on(
    source: &Source,
    spec: &ExperimentSpec,
    eta_grid: &[f64],
    g_grid: &[f64],
) -> Result<GridReport, HarnessError> {
    if eta_grid.is_empty() || g_grid.is_empty() {
        return Err(HarnessError::Config("grids must be non-empty".into()));
    }
    spec.validate()?;
    let mut cells = Vec::new();
    for &eta in eta_grid {
        cells.push(cell(source, spec, Mode::Ff, eta, spec.train.g)?);
    }
    for &eta in eta_grid {
        for &g in g_grid {
            cells.push(cell(source, spec, Mode::FfFb, eta, g)?);
        }
    }
    let best_eta = pick(cells.iter().filter(|c| c.g.is_none()).map(|c| (c, c.eta))).expect("non-empty");
    let best_g = pick(
        cells
            .iter()
            .filter(|c| c.eta == best_eta)
            .filter_map(|c| c.g.map(|g| (c, g))),
    )
    .expect("non-empty");
    Ok(GridReport { best_eta, best_g, cells })
}

pub fn grid_search(spec: &ExperimentSpec, eta_grid: &[f64], g_grid: &[f64]) -> Result<GridReport, HarnessError> {
    spec.validate()?;
    let source = Source::load(&spec.dataset)?;
    grid_search_on(&source, spec, eta_grid, g_grid)
}

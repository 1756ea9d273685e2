use std::io::Write;

use serde::{Deserialize, Serialize};

use super::estimator::{estimate_te_general, estimate_te_lag1, TeError};
use super::series::SeriesStore;
use crate::net::Matrix;

/// Estimator settings shared by the series recorder and the TE matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeConfig {
    /// Destination history length.
    pub k: usize,
    /// Source history length.
    pub l: usize,
    pub log_base: f64,
    /// Binarization threshold `g`.
    pub threshold: f64,
    /// Training patterns skipped before recording starts.
    pub warm_up: usize,
    /// Minimum series length before TE values are produced.
    pub min_series_len: usize,
}

impl Default for TeConfig {
    fn default() -> Self {
        Self {
            k: 1,
            l: 1,
            log_base: 2.0,
            threshold: 0.7,
            warm_up: 10,
            min_series_len: 10,
        }
    }
}

impl TeConfig {
    pub fn validate(&self) -> Result<(), TeError> {
        if self.k == 0 || self.l == 0 {
            return Err(TeError::Parameter(format!(
                "history lengths must be >= 1, got k={}, l={}",
                self.k, self.l
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(TeError::Parameter(format!(
                "threshold g must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.log_base.is_finite() && self.log_base > 1.0) {
            return Err(TeError::Parameter(format!("log base must be > 1, got {}", self.log_base)));
        }
        if self.min_series_len < 2 {
            return Err(TeError::Parameter(format!(
                "min_series_len must be >= 2, got {}",
                self.min_series_len
            )));
        }
        Ok(())
    }
}

/// Per-connection TE values, laid out like the weight matrices:
/// `layer(k).get(i, j)` belongs to the weight from neuron `i` of layer `k`
/// to neuron `j` of layer `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeMatrix {
    layers: Vec<Matrix>,
}

/// Min, max and mean of one layer's TE values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl TeMatrix {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        Self::filled(layer_sizes, 0.0)
    }

    pub fn filled(layer_sizes: &[usize], value: f64) -> Self {
        Self {
            layers: layer_sizes
                .windows(2)
                .map(|w| Matrix::filled(w[0], w[1], value))
                .collect(),
        }
    }

    pub fn from_layers(layers: Vec<Matrix>) -> Self {
        Self { layers }
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, k: usize) -> &Matrix {
        &self.layers[k]
    }

    pub fn layer_mut(&mut self, k: usize) -> &mut Matrix {
        &mut self.layers[k]
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    /// `te` for target `j` in layer `k + 1` and source `i` in layer `k`.
    pub fn get(&self, k: usize, target: usize, source: usize) -> f64 {
        self.layers[k].get(source, target)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|m| m.as_slice().iter().copied())
    }

    pub fn is_all_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }

    pub fn summary(&self) -> Vec<LayerSummary> {
        self.layers
            .iter()
            .map(|m| {
                let v = m.as_slice();
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                LayerSummary { min, max, mean }
            })
            .collect()
    }

    /// Min-max rescales all entries into `[0, 1]`. A constant matrix maps
    /// to all zeros.
    pub fn scaled_to_unit(&self) -> Self {
        let min = self.values().fold(f64::INFINITY, f64::min);
        let max = self.values().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let mut out = self.clone();
        for m in &mut out.layers {
            for v in m.as_mut_slice() {
                *v = if span > 0.0 { (*v - min) / span } else { 0.0 };
            }
        }
        out
    }

    /// Multiplies weight layer `k` (destination layer `k + 1`) by
    /// `factor^(k + 1)`.
    pub fn layer_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for (k, m) in out.layers.iter_mut().enumerate() {
            let f = factor.powi(k as i32 + 1);
            for v in m.as_mut_slice() {
                *v *= f;
            }
        }
        out
    }

    /// One CSV row per connected pair: `layer,i,j,te`, where `layer` is the
    /// destination layer index (the input layer is 0), `i` the source neuron
    /// and `j` the destination neuron.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["layer", "i", "j", "te"])?;
        for (k, m) in self.layers.iter().enumerate() {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    w.write_record([
                        (k + 1).to_string(),
                        i.to_string(),
                        j.to_string(),
                        m.get(i, j).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_ready(store: &SeriesStore, config: &TeConfig) -> Result<(), TeError> {
    config.validate()?;
    let required = config.min_series_len.max(config.k.max(config.l) + 1);
    if store.len() < required {
        return Err(TeError::TooShort {
            len: store.len(),
            required,
        });
    }
    Ok(())
}

/// Estimates TE for every connected pair from the full recorded series.
///
/// `TeError::TooShort` means the store is not ready yet; callers treat the
/// matrix as all zeros in that case.
pub fn compute_te_matrix(store: &SeriesStore, config: &TeConfig) -> Result<TeMatrix, TeError> {
    check_ready(store, config)?;
    let sizes = store.layer_sizes();
    let mut te = TeMatrix::zeros(sizes);
    for k in 0..sizes.len() - 1 {
        for i in 0..sizes[k] {
            let src = store.series(k, i);
            for j in 0..sizes[k + 1] {
                let dst = store.series(k + 1, j);
                let v = if config.k == 1 && config.l == 1 {
                    estimate_te_lag1(src, dst, config.log_base)?
                } else {
                    estimate_te_general(src, dst, config.k, config.l, config.log_base)?
                };
                te.layers[k].set(i, j, v);
            }
        }
    }
    Ok(te)
}

/// Same values as [`compute_te_matrix`] for `k = l = 1`, read from the
/// store's running pair counts in `O(pairs)`.
pub fn lag1_te_matrix(store: &SeriesStore, config: &TeConfig) -> Result<TeMatrix, TeError> {
    check_ready(store, config)?;
    if config.k != 1 || config.l != 1 {
        return compute_te_matrix(store, config);
    }
    let sizes = store.layer_sizes();
    let mut te = TeMatrix::zeros(sizes);
    for (k, m) in te.layers.iter_mut().enumerate() {
        for (v, counts) in m.as_mut_slice().iter_mut().zip(store.pair_counts(k)) {
            *v = counts.te(config.log_base);
        }
    }
    Ok(te)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ActivationRecord;

    fn rec(outputs: Vec<Vec<f64>>) -> ActivationRecord {
        ActivationRecord {
            pre_activations: outputs.clone(),
            outputs,
        }
    }

    #[test]
    fn shape_mirrors_weights() {
        let te = TeMatrix::zeros(&[2, 2, 1]);
        assert_eq!(te.layer_count(), 2);
        assert_eq!(te.layer(0).shape(), (2, 2));
        assert_eq!(te.layer(1).shape(), (2, 1));
    }

    #[test]
    fn not_ready_until_min_len() {
        let mut store = SeriesStore::new(&[1, 1], 0);
        let cfg = TeConfig::default();
        for _ in 0..9 {
            store.record_step(&rec(vec![vec![0.9], vec![0.1]]), 0.5).unwrap();
        }
        assert_eq!(
            compute_te_matrix(&store, &cfg),
            Err(TeError::TooShort { len: 9, required: 10 })
        );
        store.record_step(&rec(vec![vec![0.9], vec![0.1]]), 0.5).unwrap();
        assert!(compute_te_matrix(&store, &cfg).is_ok());
    }

    #[test]
    fn constant_series_give_zero_matrix() {
        let mut store = SeriesStore::new(&[2, 2, 1], 0);
        for _ in 0..30 {
            store
                .record_step(&rec(vec![vec![1.0, 0.0], vec![0.9, 0.2], vec![0.95]]), 0.7)
                .unwrap();
        }
        let te = compute_te_matrix(&store, &TeConfig::default()).unwrap();
        assert!(te.is_all_zero());
    }

    #[test]
    fn incremental_matrix_matches_batch() {
        let mut store = SeriesStore::new(&[2, 3, 2], 3);
        let mut x = 0.123_f64;
        for _ in 0..200 {
            let mut next = || {
                x = (x * 997.0 + 0.31).fract();
                x
            };
            let r = rec(vec![
                vec![next(), next()],
                vec![next(), next(), next()],
                vec![next(), next()],
            ]);
            store.record_step(&r, 0.6).unwrap();
        }
        let cfg = TeConfig { threshold: 0.6, ..TeConfig::default() };
        let batch = compute_te_matrix(&store, &cfg).unwrap();
        let inc = lag1_te_matrix(&store, &cfg).unwrap();
        let bits = |t: &TeMatrix| t.values().map(f64::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(&batch), bits(&inc));
        assert!(!batch.is_all_zero());
    }

    #[test]
    fn unit_scaling_and_layer_scaling() {
        let mut te = TeMatrix::zeros(&[1, 2, 1]);
        te.layer_mut(0).set(0, 0, 0.2);
        te.layer_mut(0).set(0, 1, 0.6);
        te.layer_mut(1).set(0, 0, 0.4);
        te.layer_mut(1).set(1, 0, 1.0);
        let s = te.scaled_to_unit();
        let v: Vec<f64> = s.values().collect();
        assert!((v[0] - 0.0).abs() < 1e-15 && (v[3] - 1.0).abs() < 1e-15);
        assert!((v[1] - 0.5).abs() < 1e-15);
        let l = te.layer_scaled(0.5);
        assert!((l.layer(0).get(0, 1) - 0.3).abs() < 1e-15);
        assert!((l.layer(1).get(1, 0) - 0.25).abs() < 1e-15);
        assert!(TeMatrix::filled(&[2, 2], 0.3).scaled_to_unit().is_all_zero());
    }

    #[test]
    fn csv_rows_per_pair() {
        let mut te = TeMatrix::zeros(&[2, 1]);
        te.layer_mut(0).set(1, 0, 0.25);
        let mut buf = Vec::new();
        te.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "layer,i,j,te\n1,0,0,0\n1,1,0,0.25\n");
    }

    #[test]
    fn config_validation() {
        assert!(TeConfig::default().validate().is_ok());
        assert!(TeConfig { threshold: 1.0, ..TeConfig::default() }.validate().is_err());
        assert!(TeConfig { k: 0, ..TeConfig::default() }.validate().is_err());
        assert!(TeConfig { log_base: 1.0, ..TeConfig::default() }.validate().is_err());
    }
}

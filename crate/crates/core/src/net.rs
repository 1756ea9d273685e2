//! Fully connected sigmoid network with a binary cross-entropy cost and
//! online (per-sample) gradients.
//!
//! Layer `0` is the input layer. Weight layer `k` connects layer `k` to
//! layer `k + 1` and is stored as a `fan_in × fan_out` matrix, so
//! `weights[k].get(i, j)` is the weight from neuron `i` of layer `k` to
//! neuron `j` of layer `k + 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::te::TeMatrix;

/// Standard deviation of the initial weight distribution.
pub const INIT_WEIGHT_STD: f64 = 0.1;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {what} expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite {kind} update at weight layer {layer}, source {source_neuron}, target {target_neuron}")]
    NonFinite {
        kind: &'static str,
        layer: usize,
        source_neuron: usize,
        target_neuron: usize,
    },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NetError> {
        if data.len() != rows * cols {
            return Err(NetError::Shape {
                what: "matrix data length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Pre-activations and outputs of every layer for one input.
///
/// Index `0` holds the input vector itself in both fields; layers `1..`
/// hold `z` and `σ(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    pub pre_activations: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl ActivationRecord {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Partial derivatives of the cost with respect to every weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice().iter())
            .chain(self.biases.iter().flatten())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<(), NetError> {
    if layer_sizes.len() < 2 {
        return Err(NetError::Config(format!(
            "need at least an input and an output layer, got {} layer(s)",
            layer_sizes.len()
        )));
    }
    if let Some(pos) = layer_sizes.iter().position(|&n| n == 0) {
        return Err(NetError::Config(format!("layer {pos} has size 0")));
    }
    Ok(())
}

impl Network {
    /// Weights drawn from N(0, 0.1²), biases zero. Deterministic per seed.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self, NetError> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_WEIGHT_STD).expect("valid normal parameters");
        let weights = layer_sizes
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect();
                Matrix {
                    rows: w[0],
                    cols: w[1],
                    data,
                }
            })
            .collect();
        Ok(Self::assemble(layer_sizes, weights))
    }

    /// Every weight set to `value`, biases zero.
    pub fn constant(layer_sizes: &[usize], value: f64) -> Result<Self, NetError> {
        validate_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| Matrix::filled(w[0], w[1], value))
            .collect();
        Ok(Self::assemble(layer_sizes, weights))
    }

    pub fn from_parts(
        layer_sizes: &[usize],
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, NetError> {
        validate_sizes(layer_sizes)?;
        if weights.len() != layer_sizes.len() - 1 || biases.len() != weights.len() {
            return Err(NetError::Shape {
                what: "weight layer count",
                expected: layer_sizes.len() - 1,
                actual: weights.len(),
            });
        }
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.shape() != (layer_sizes[k], layer_sizes[k + 1]) {
                return Err(NetError::Shape {
                    what: "weight matrix elements",
                    expected: layer_sizes[k] * layer_sizes[k + 1],
                    actual: w.rows() * w.cols(),
                });
            }
            if b.len() != layer_sizes[k + 1] {
                return Err(NetError::Shape {
                    what: "bias vector length",
                    expected: layer_sizes[k + 1],
                    actual: b.len(),
                });
            }
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    fn assemble(layer_sizes: &[usize], weights: Vec<Matrix>) -> Self {
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice().iter())
            .chain(self.biases.iter().flatten())
            .all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ActivationRecord, NetError> {
        if x.len() != self.input_size() {
            return Err(NetError::Shape {
                what: "input vector length",
                expected: self.input_size(),
                actual: x.len(),
            });
        }
        let mut pre = Vec::with_capacity(self.layer_sizes.len());
        let mut out = Vec::with_capacity(self.layer_sizes.len());
        pre.push(x.to_vec());
        out.push(x.to_vec());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let prev = out.last().expect("input pushed");
            let mut z = b.clone();
            for (i, &a) in prev.iter().enumerate() {
                for (zj, &wij) in z.iter_mut().zip(w.row(i)) {
                    *zj += a * wij;
                }
            }
            let a: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
            pre.push(z);
            out.push(a);
        }
        Ok(ActivationRecord {
            pre_activations: pre,
            outputs: out,
        })
    }

    /// Gradients of the per-sample cross-entropy for a record produced by
    /// [`Network::forward`] on this network.
    pub fn backward(&self, rec: &ActivationRecord, y: &[f64]) -> Result<GradientSet, NetError> {
        let depth = self.weights.len();
        if rec.outputs.len() != depth + 1 {
            return Err(NetError::Shape {
                what: "activation record layer count",
                expected: depth + 1,
                actual: rec.outputs.len(),
            });
        }
        for (l, (o, &n)) in rec.outputs.iter().zip(&self.layer_sizes).enumerate() {
            if o.len() != n {
                return Err(NetError::Shape {
                    what: if l == 0 { "recorded input length" } else { "recorded layer width" },
                    expected: n,
                    actual: o.len(),
                });
            }
        }
        if y.len() != self.output_size() {
            return Err(NetError::Shape {
                what: "target vector length",
                expected: self.output_size(),
                actual: y.len(),
            });
        }

        let mut grads = GradientSet::zeros_like(self);
        // sigmoid output + cross-entropy: dC/dz = a - y
        let mut delta: Vec<f64> = rec.outputs[depth]
            .iter()
            .zip(y)
            .map(|(a, t)| a - t)
            .collect();
        for k in (0..depth).rev() {
            let prev = &rec.outputs[k];
            let gw = &mut grads.weights[k];
            for (i, &a) in prev.iter().enumerate() {
                for (j, &d) in delta.iter().enumerate() {
                    gw.set(i, j, a * d);
                }
            }
            grads.biases[k].copy_from_slice(&delta);
            if k > 0 {
                let w = &self.weights[k];
                delta = prev
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        let back: f64 = w.row(i).iter().zip(&delta).map(|(wij, d)| wij * d).sum();
                        back * a * (1.0 - a)
                    })
                    .collect();
            }
        }
        Ok(grads)
    }

    /// Per-sample binary cross-entropy summed over output nodes.
    pub fn loss(&self, x: &[f64], y: &[f64]) -> Result<f64, NetError> {
        let rec = self.forward(x)?;
        if y.len() != self.output_size() {
            return Err(NetError::Shape {
                what: "target vector length",
                expected: self.output_size(),
                actual: y.len(),
            });
        }
        let z = rec.pre_activations.last().expect("output layer");
        // -[y ln σ(z) + (1-y) ln(1-σ(z))] = softplus(z) - y z
        Ok(z.iter().zip(y).map(|(&z, &t)| softplus(z) - t * z).sum())
    }

    /// `w ← w − η · ∂C/∂w · (1 − te)`; biases take the plain gradient step.
    pub fn apply_update(
        &mut self,
        grads: &GradientSet,
        eta: f64,
        te: &TeMatrix,
    ) -> Result<(), NetError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(NetError::Config(format!("learning rate must be positive, got {eta}")));
        }
        self.check_grad_shapes(grads)?;
        if te.layer_count() != self.weights.len() {
            return Err(NetError::Shape {
                what: "te layer count",
                expected: self.weights.len(),
                actual: te.layer_count(),
            });
        }
        for (k, w) in self.weights.iter().enumerate() {
            let t = te.layer(k);
            if t.shape() != w.shape() {
                return Err(NetError::Shape {
                    what: "te matrix elements",
                    expected: w.rows() * w.cols(),
                    actual: t.rows() * t.cols(),
                });
            }
        }

        // validate before mutating so a failed step leaves the network intact
        for (k, (w, gw)) in self.weights.iter().zip(&grads.weights).enumerate() {
            let t = te.layer(k);
            for i in 0..w.rows() {
                for j in 0..w.cols() {
                    let next = w.get(i, j) - eta * gw.get(i, j) * (1.0 - t.get(i, j));
                    if !next.is_finite() {
                        return Err(NetError::NonFinite {
                            kind: "weight",
                            layer: k,
                            source_neuron: i,
                            target_neuron: j,
                        });
                    }
                }
            }
            for (j, (b, gb)) in self.biases[k].iter().zip(&grads.biases[k]).enumerate() {
                if !(b - eta * gb).is_finite() {
                    return Err(NetError::NonFinite {
                        kind: "bias",
                        layer: k,
                        source_neuron: 0,
                        target_neuron: j,
                    });
                }
            }
        }

        for (k, (w, gw)) in self.weights.iter_mut().zip(&grads.weights).enumerate() {
            let t = te.layer(k);
            for ((wv, g), tv) in w
                .as_mut_slice()
                .iter_mut()
                .zip(gw.as_slice())
                .zip(t.as_slice())
            {
                *wv -= eta * g * (1.0 - tv);
            }
            for (b, gb) in self.biases[k].iter_mut().zip(&grads.biases[k]) {
                *b -= eta * gb;
            }
        }
        Ok(())
    }

    fn check_grad_shapes(&self, grads: &GradientSet) -> Result<(), NetError> {
        if grads.weights.len() != self.weights.len() || grads.biases.len() != self.biases.len() {
            return Err(NetError::Shape {
                what: "gradient layer count",
                expected: self.weights.len(),
                actual: grads.weights.len(),
            });
        }
        for (w, g) in self.weights.iter().zip(&grads.weights) {
            if w.shape() != g.shape() {
                return Err(NetError::Shape {
                    what: "gradient matrix elements",
                    expected: w.rows() * w.cols(),
                    actual: g.rows() * g.cols(),
                });
            }
        }
        for (b, g) in self.biases.iter().zip(&grads.biases) {
            if b.len() != g.len() {
                return Err(NetError::Shape {
                    what: "bias gradient length",
                    expected: b.len(),
                    actual: g.len(),
                });
            }
        }
        Ok(())
    }

    /// Central-difference estimate of every weight and bias partial.
    /// Used as the verification oracle for [`Network::backward`].
    pub fn finite_diff_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        step: f64,
    ) -> Result<GradientSet, NetError> {
        if !(step > 0.0) {
            return Err(NetError::Config(format!("finite-difference step must be positive, got {step}")));
        }
        self.loss(x, y)?;
        let mut probe = self.clone();
        let mut grads = GradientSet::zeros_like(self);
        for k in 0..self.weights.len() {
            for idx in 0..self.weights[k].as_slice().len() {
                let orig = self.weights[k].as_slice()[idx];
                probe.weights[k].as_mut_slice()[idx] = orig + step;
                let plus = probe.loss(x, y)?;
                probe.weights[k].as_mut_slice()[idx] = orig - step;
                let minus = probe.loss(x, y)?;
                probe.weights[k].as_mut_slice()[idx] = orig;
                grads.weights[k].as_mut_slice()[idx] = (plus - minus) / (2.0 * step);
            }
            for j in 0..self.biases[k].len() {
                let orig = self.biases[k][j];
                probe.biases[k][j] = orig + step;
                let plus = probe.loss(x, y)?;
                probe.biases[k][j] = orig - step;
                let minus = probe.loss(x, y)?;
                probe.biases[k][j] = orig;
                grads.biases[k][j] = (plus - minus) / (2.0 * step);
            }
        }
        Ok(grads)
    }
}

//! Binarized activation histories.

use std::io::Write;

use super::estimator::{LagOneCounts, TeError};
use crate::net::ActivationRecord;

/// Maps a neuron output to `1` when it lies strictly above `g`.
#[inline]
pub fn binarize(output: f64, g: f64) -> u8 {
    u8::from(output > g)
}

/// Ordered sequence of `{0, 1}` symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinarySeries {
    values: Vec<u8>,
}

impl BinarySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, TeError> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(TeError::Parameter(format!(
                "series value {} at index {pos} is not 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self { values: bits.to_vec() })
    }

    pub fn from_outputs(outputs: &[f64], g: f64) -> Self {
        Self {
            values: outputs.iter().map(|&o| binarize(o, g)).collect(),
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.values.push(u8::from(bit));
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.values
    }
}

impl std::fmt::Display for BinarySeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.values {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One binary series per neuron of every layer, all aligned by training
/// step, plus running lag-one counts for every connected pair.
///
/// The first `warm_up` recorded patterns are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStore {
    layer_sizes: Vec<usize>,
    series: Vec<Vec<BinarySeries>>,
    // pair_counts[k][i * fan_out + j]: source i in layer k, target j in layer k+1
    pair_counts: Vec<Vec<LagOneCounts>>,
    warm_up_remaining: usize,
}

impl SeriesStore {
    pub fn new(layer_sizes: &[usize], warm_up: usize) -> Self {
        let series = layer_sizes
            .iter()
            .map(|&n| vec![BinarySeries::new(); n])
            .collect();
        let pair_counts = layer_sizes
            .windows(2)
            .map(|w| vec![LagOneCounts::new(); w[0] * w[1]])
            .collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            series,
            pair_counts,
            warm_up_remaining: warm_up,
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn warm_up_remaining(&self) -> usize {
        self.warm_up_remaining
    }

    /// Common length of every series.
    pub fn len(&self) -> usize {
        self.series[0].first().map_or(0, BinarySeries::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn series(&self, layer: usize, neuron: usize) -> &BinarySeries {
        &self.series[layer][neuron]
    }

    pub(crate) fn pair_counts(&self, weight_layer: usize) -> &[LagOneCounts] {
        &self.pair_counts[weight_layer]
    }

    /// Records one training step. Returns `true` when the step was appended,
    /// `false` while warm-up patterns are still being skipped.
    pub fn record_step(&mut self, rec: &ActivationRecord, g: f64) -> Result<bool, crate::net::NetError> {
        if rec.outputs.len() != self.layer_sizes.len() {
            return Err(crate::net::NetError::Shape {
                what: "recorded layer count",
                expected: self.layer_sizes.len(),
                actual: rec.outputs.len(),
            });
        }
        for (o, &n) in rec.outputs.iter().zip(&self.layer_sizes) {
            if o.len() != n {
                return Err(crate::net::NetError::Shape {
                    what: "recorded layer width",
                    expected: n,
                    actual: o.len(),
                });
            }
        }
        if self.warm_up_remaining > 0 {
            self.warm_up_remaining -= 1;
            return Ok(false);
        }
        for (layer, outputs) in self.series.iter_mut().zip(&rec.outputs) {
            for (s, &o) in layer.iter_mut().zip(outputs) {
                s.push(o > g);
            }
        }
        for (k, counts) in self.pair_counts.iter_mut().enumerate() {
            let fan_out = self.layer_sizes[k + 1];
            let src = &rec.outputs[k];
            let dst = &rec.outputs[k + 1];
            for (i, &so) in src.iter().enumerate() {
                let sb = binarize(so, g);
                for (j, &d) in dst.iter().enumerate() {
                    counts[i * fan_out + j].push(sb, binarize(d, g));
                }
            }
        }
        Ok(true)
    }

    /// One CSV row per neuron: `layer,neuron,series`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["layer", "neuron", "series"])?;
        for (l, layer) in self.series.iter().enumerate() {
            for (n, s) in layer.iter().enumerate() {
                w.write_record([l.to_string(), n.to_string(), s.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

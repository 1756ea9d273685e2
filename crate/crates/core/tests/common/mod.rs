//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

/// Lag-one TE in bits by direct enumeration of the 8 joint states, each
/// marginal counted by its own pass over the windows.
pub fn oracle_te(src: &[u8], dst: &[u8]) -> f64 {
    let n = src.len() - 1;
    let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&t| f(t)).count() as f64;
    let mut total = 0.0;
    for x in 0..2u8 {
        for y in 0..2u8 {
            for z in 0..2u8 {
                let c_xyz = count(&|t| dst[t + 1] == x && dst[t] == y && src[t] == z);
                if c_xyz == 0.0 {
                    continue;
                }
                let c_xy = count(&|t| dst[t + 1] == x && dst[t] == y);
                let c_yz = count(&|t| dst[t] == y && src[t] == z);
                let c_y = count(&|t| dst[t] == y);
                let p = |c: f64| c / n as f64;
                total += p(c_xyz) * (p(c_xyz) * p(c_y) / (p(c_xy) * p(c_yz))).log2();
            }
        }
    }
    total
}

/// General (k, l) TE in bits from tuple-keyed hash maps, windows starting
/// where both histories are complete.
pub fn oracle_te_general(src: &[u8], dst: &[u8], k: usize, l: usize) -> f64 {
    let lag = k.max(l);
    let mut joint: HashMap<(u8, Vec<u8>, Vec<u8>), f64> = HashMap::new();
    let mut n = 0.0;
    for t in lag - 1..src.len() - 1 {
        let yh = dst[t + 1 - k..=t].to_vec();
        let zh = src[t + 1 - l..=t].to_vec();
        *joint.entry((dst[t + 1], yh, zh)).or_default() += 1.0;
        n += 1.0;
    }
    let mut xy: HashMap<(u8, Vec<u8>), f64> = HashMap::new();
    let mut yz: HashMap<(Vec<u8>, Vec<u8>), f64> = HashMap::new();
    let mut y: HashMap<Vec<u8>, f64> = HashMap::new();
    for ((a, b, c), v) in &joint {
        *xy.entry((*a, b.clone())).or_default() += v;
        *yz.entry((b.clone(), c.clone())).or_default() += v;
        *y.entry(b.clone()).or_default() += v;
    }
    joint
        .iter()
        .map(|((a, b, c), &v)| {
            let ratio = (v / n) * (y[b] / n) / ((xy[&(*a, b.clone())] / n) * (yz[&(b.clone(), c.clone())] / n));
            v / n * ratio.log2()
        })
        .sum()
}

/// All 2^n binary sequences of length n.
pub fn all_series(n: usize) -> Vec<Vec<u8>> {
    (0..1u32 << n)
        .map(|m| (0..n).map(|i| ((m >> i) & 1) as u8).collect())
        .collect()
}

/// Small deterministic generator for test inputs (SplitMix64).
pub struct Gen(pub u64);

impl Gen {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| (self.next_u64() >> 63) as u8).collect()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// The period-4 pattern 0,1,1,0 and the same pattern delayed one step.
pub fn lagged_pair(len: usize) -> (Vec<u8>, Vec<u8>) {
    let src: Vec<u8> = (0..len).map(|t| [0, 1, 1, 0][t % 4]).collect();
    let mut dst = vec![0u8; len];
    dst[1..].copy_from_slice(&src[..len - 1]);
    (src, dst)
}

/// Random source and its one-step-delayed copy: the source drives the
/// destination, not the reverse.
pub fn asymmetry_pair() -> (Vec<u8>, Vec<u8>) {
    let src = Gen(11).bits(64);
    let mut dst = vec![0u8; 64];
    dst[1..].copy_from_slice(&src[..63]);
    (src, dst)
}

/// Forward pass and summed binary cross-entropy written out directly from
/// the weight matrices, independent of `Network::forward`/`loss`.
pub fn oracle_loss(net: &tebp::Network, x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    for (w, b) in net.weights().iter().zip(net.biases()) {
        a = (0..w.cols())
            .map(|j| {
                let z: f64 = (0..w.rows()).map(|i| a[i] * w.get(i, j)).sum::<f64>() + b[j];
                1.0 / (1.0 + (-z).exp())
            })
            .collect();
    }
    a.iter().zip(y).map(|(&o, &t)| -(t * o.ln() + (1.0 - t) * (1.0 - o).ln())).sum()
}

/// Central differences of [`oracle_loss`] for every weight, then every bias,
/// in storage order.
pub fn central_diff(net: &tebp::Network, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = net.clone();
    for k in 0..net.weights().len() {
        for idx in 0..net.weights()[k].as_slice().len() {
            let w0 = net.weights()[k].as_slice()[idx];
            probe.weights_mut()[k].as_mut_slice()[idx] = w0 + h;
            let up = oracle_loss(&probe, x, y);
            probe.weights_mut()[k].as_mut_slice()[idx] = w0 - h;
            let down = oracle_loss(&probe, x, y);
            probe.weights_mut()[k].as_mut_slice()[idx] = w0;
            out.push((up - down) / (2.0 * h));
        }
    }
    for k in 0..net.biases().len() {
        for j in 0..net.biases()[k].len() {
            let b0 = net.biases()[k][j];
            probe.biases_mut()[k][j] = b0 + h;
            let up = oracle_loss(&probe, x, y);
            probe.biases_mut()[k][j] = b0 - h;
            let down = oracle_loss(&probe, x, y);
            probe.biases_mut()[k][j] = b0;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

pub fn flatten(g: &tebp::GradientSet) -> Vec<f64> {
    g.weights
        .iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .chain(g.biases.iter().flatten().copied())
        .collect()
}

/// Worst violation of `|a - b| <= max(rel * max(|a|, |b|), abs_floor)`;
/// values <= 1 pass.
pub fn grad_error(analytic: &[f64], numeric: &[f64], rel: f64, abs_floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| (a - b).abs() / (rel * a.abs().max(b.abs())).max(abs_floor))
        .fold(0.0, f64::max)
}

/// A random small network and sample: 1-3 hidden layers of 1-5 units.
pub fn random_case(g: &mut Gen) -> (tebp::Network, Vec<f64>, Vec<f64>) {
    let depth = 2 + g.below(3) as usize;
    let sizes: Vec<usize> = (0..=depth).map(|_| 1 + g.below(5) as usize).collect();
    let mut net = tebp::Network::new(&sizes, g.next_u64()).unwrap();
    // widen the weights so the sigmoids leave their linear region
    let scale = 1.0 + 9.0 * g.unit();
    for w in net.weights_mut() {
        for v in w.as_mut_slice() {
            *v *= scale;
        }
    }
    for b in net.biases_mut().iter_mut().flatten() {
        *b = g.unit() - 0.5;
    }
    let x = (0..sizes[0]).map(|_| g.unit()).collect();
    let y = (0..sizes[depth]).map(|_| (g.next_u64() & 1) as f64).collect();
    (net, x, y)
}

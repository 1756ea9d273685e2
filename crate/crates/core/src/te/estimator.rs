//! Plug-in (histogram) transfer entropy for binary series.
//!
//! Joint states are packed into a single index
//! `next << (k + l) | dst_history << l | src_history`, with the most recent
//! symbol of each history in the lowest bit. Both estimators reduce their
//! counts through [`te_from_counts`], so the lag-one path and the general
//! path with `k = l = 1` produce bit-identical results.

use super::series::BinarySeries;

/// Largest `k + l` accepted by [`estimate_te_general`]; the joint table has
/// `2^(k + l + 1)` cells.
pub const MAX_HISTORY_BITS: usize = 24;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TeError {
    #[error("series lengths differ: source {src} vs destination {dst}")]
    LengthMismatch { src: usize, dst: usize },
    #[error("series of length {len} is too short, need at least {required}")]
    TooShort { len: usize, required: usize },
    #[error("invalid estimator parameter: {0}")]
    Parameter(String),
}

fn check_log_base(log_base: f64) -> Result<f64, TeError> {
    if log_base.is_finite() && log_base > 1.0 {
        Ok(log_base.ln())
    } else {
        Err(TeError::Parameter(format!("log base must be > 1, got {log_base}")))
    }
}

/// Reduces a joint histogram over `(next, dst history, src history)` into a
/// transfer entropy value.
///
/// `joint.len()` must be `2^(1 + k + l)`. Cells with zero count contribute
/// nothing.
pub fn te_from_counts(joint: &[u64], k: usize, l: usize, log_base: f64) -> f64 {
    debug_assert_eq!(joint.len(), 1usize << (1 + k + l));
    let hist_cells = 1usize << (k + l);
    let dst_cells = 1usize << k;
    let src_mask = (1usize << l) - 1;

    let mut next_dst = vec![0u64; 2 * dst_cells];
    let mut dst_src = vec![0u64; hist_cells];
    let mut dst = vec![0u64; dst_cells];
    let mut total = 0u64;
    for (state, &c) in joint.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let next = state >> (k + l);
        let d = (state >> l) & (dst_cells - 1);
        next_dst[(next << k) | d] += c;
        dst_src[state & (hist_cells - 1)] += c;
        dst[d] += c;
        total += c;
    }
    if total == 0 {
        return 0.0;
    }

    let n = total as f64;
    let ln_base = log_base.ln();
    let mut acc = 0.0;
    for (state, &c) in joint.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let next = state >> (k + l);
        let d = (state >> l) & (dst_cells - 1);
        let s = state & src_mask;
        let c_xyz = c as f64;
        let c_y = dst[d] as f64;
        let c_xy = next_dst[(next << k) | d] as f64;
        let c_yz = dst_src[(d << l) | s] as f64;
        // p(x,y,z) p(y) / (p(x,y) p(y,z)); the 1/n factors cancel
        acc += c_xyz / n * ((c_xyz * c_y) / (c_xy * c_yz)).ln();
    }
    acc / ln_base
}

/// Lag-one transfer entropy `src → dst` over the windows
/// `(dst[t+1], dst[t], src[t])` for `t = 0..p-1`.
pub fn estimate_te_lag1(
    src: &BinarySeries,
    dst: &BinarySeries,
    log_base: f64,
) -> Result<f64, TeError> {
    check_log_base(log_base)?;
    let (s, d) = (src.as_slice(), dst.as_slice());
    if s.len() != d.len() {
        return Err(TeError::LengthMismatch { src: s.len(), dst: d.len() });
    }
    if s.len() < 2 {
        return Err(TeError::TooShort { len: s.len(), required: 2 });
    }
    let mut joint = [0u64; 8];
    for t in 0..s.len() - 1 {
        let state = ((d[t + 1] as usize) << 2) | ((d[t] as usize) << 1) | s[t] as usize;
        joint[state] += 1;
    }
    Ok(te_from_counts(&joint, 1, 1, log_base))
}

/// Transfer entropy `src → dst` with a destination history of `k` symbols
/// and a source history of `l` symbols.
///
/// Windows start at the first index where both histories are complete, so
/// there are `p - max(k, l)` of them.
pub fn estimate_te_general(
    src: &BinarySeries,
    dst: &BinarySeries,
    k: usize,
    l: usize,
    log_base: f64,
) -> Result<f64, TeError> {
    check_log_base(log_base)?;
    if k == 0 || l == 0 {
        return Err(TeError::Parameter(format!("history lengths must be >= 1, got k={k}, l={l}")));
    }
    if k + l > MAX_HISTORY_BITS {
        return Err(TeError::Parameter(format!(
            "k + l = {} exceeds the supported maximum of {MAX_HISTORY_BITS}",
            k + l
        )));
    }
    let (s, d) = (src.as_slice(), dst.as_slice());
    if s.len() != d.len() {
        return Err(TeError::LengthMismatch { src: s.len(), dst: d.len() });
    }
    let lag = k.max(l);
    if s.len() < lag + 1 {
        return Err(TeError::TooShort { len: s.len(), required: lag + 1 });
    }

    let mut joint = vec![0u64; 1 << (1 + k + l)];
    for t in lag - 1..s.len() - 1 {
        let mut dh = 0usize;
        for i in 0..k {
            dh |= (d[t - i] as usize) << i;
        }
        let mut sh = 0usize;
        for i in 0..l {
            sh |= (s[t - i] as usize) << i;
        }
        let state = ((d[t + 1] as usize) << (k + l)) | (dh << l) | sh;
        joint[state] += 1;
    }
    Ok(te_from_counts(&joint, k, l, log_base))
}

/// Running lag-one joint histogram for one (source, destination) pair.
///
/// Feeding it the aligned symbols of two series yields exactly the counts
/// that [`estimate_te_lag1`] builds from the full series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LagOneCounts {
    joint: [u64; 8],
    last: Option<(u8, u8)>,
    observations: usize,
}

impl LagOneCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one aligned observation `(src_t, dst_t)`.
    pub fn push(&mut self, src: u8, dst: u8) {
        if let Some((ps, pd)) = self.last {
            let state = ((dst as usize) << 2) | ((pd as usize) << 1) | ps as usize;
            self.joint[state] += 1;
        }
        self.last = Some((src, dst));
        self.observations += 1;
    }

    /// Number of observations pushed (the series length).
    pub fn len(&self) -> usize {
        self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations == 0
    }

    pub fn joint(&self) -> &[u64; 8] {
        &self.joint
    }

    pub fn te(&self, log_base: f64) -> f64 {
        te_from_counts(&self.joint, 1, 1, log_base)
    }
}

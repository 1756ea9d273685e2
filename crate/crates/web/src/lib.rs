//! WebAssembly bindings for the demo page in `www/`.
//!
//! The plain functions do the work and return `Result<_, String>` so they
//! can be tested natively; the `#[wasm_bindgen]` wrappers only convert
//! errors.

use tebp::te::{estimate_te_general, estimate_te_lag1, BinarySeries};
use tebp::trainer::{run_fffb, run_ff, Task, TrainConfig};
use wasm_bindgen::prelude::*;

fn parse_bits(s: &str) -> Result<BinarySeries, String> {
    let bits: Vec<u8> = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(format!("`{other}` is not 0 or 1")),
        })
        .collect::<Result<_, _>>()?;
    BinarySeries::from_bits(&bits).map_err(|e| e.to_string())
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// TE in bits from `src` to `dst`, both written as `0`/`1` strings.
pub fn te_bits(src: &str, dst: &str, k: usize, l: usize) -> Result<f64, String> {
    let (s, d) = (parse_bits(src)?, parse_bits(dst)?);
    let r = if k == 1 && l == 1 {
        estimate_te_lag1(&s, &d, 2.0)
    } else {
        estimate_te_general(&s, &d, k, l, 2.0)
    };
    r.map_err(|e| e.to_string())
}

/// `0`/`1` string of `outputs > g`.
pub fn binarize_text(outputs: &str, g: f64) -> Result<String, String> {
    let v = parse_reals(outputs)?;
    Ok(BinarySeries::from_outputs(&v, g).to_string())
}

/// Accuracy curves of one FF and one FF+FB run on XOR.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct XorComparison {
    ff: Vec<f64>,
    fffb: Vec<f64>,
    stage1_epochs: usize,
    te_mean: f64,
}

#[wasm_bindgen]
impl XorComparison {
    #[wasm_bindgen(getter)]
    pub fn ff(&self) -> Vec<f64> {
        self.ff.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fffb(&self) -> Vec<f64> {
        self.fffb.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn stage1_epochs(&self) -> usize {
        self.stage1_epochs
    }

    /// Mean of the te snapshot Stage II used.
    #[wasm_bindgen(getter)]
    pub fn te_mean(&self) -> f64 {
        self.te_mean
    }
}

pub fn compare(eta: f64, g: f64, epochs: usize, seed: u64) -> Result<XorComparison, String> {
    let cfg = TrainConfig {
        eta,
        g,
        max_epochs: epochs,
        seed,
        ..TrainConfig::default()
    };
    let task = Task::xor(tebp::seed::derive(seed, &[tebp::seed::stream::DATA]));
    let sizes = [2, 2, 1];
    let ff = run_ff(&sizes, &task, &cfg).map_err(|e| e.to_string())?;
    let fb = run_fffb(&sizes, &task, &cfg).map_err(|e| e.to_string())?;
    let s1 = fb.stage1.as_ref().expect("FF+FB has a Stage I");
    let n = s1.te_snapshot.values().count() as f64;
    Ok(XorComparison {
        ff: ff.stage2.accuracy_trace,
        fffb: fb.stage2.accuracy_trace,
        stage1_epochs: s1.epochs_run,
        te_mean: s1.te_snapshot.values().sum::<f64>() / n,
    })
}

#[wasm_bindgen(js_name = estimateTe)]
pub fn estimate_te(src: &str, dst: &str, k: usize, l: usize) -> Result<f64, JsError> {
    te_bits(src, dst, k, l).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = binarize)]
pub fn binarize(outputs: &str, g: f64) -> Result<String, JsError> {
    binarize_text(outputs, g).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareXor)]
pub fn compare_xor(eta: f64, g: f64, epochs: usize, seed: u64) -> Result<XorComparison, JsError> {
    compare(eta, g, epochs, seed).map_err(|e| JsError::new(&e))
}

//! One XOR run: how often each neuron fires above `g` during Stage I, the
//! resulting te matrix, and FF vs FF+FB epochs.
//!
//! cargo run --release --example xor_te -- [eta] [g] [seed]

use tebp::seed::{self, stream};
use tebp::trainer::{run_ff, run_fffb, Task, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map_or(default, |s| s.parse().expect("number"));
    let cfg = TrainConfig {
        eta: arg(0, 0.025),
        g: arg(1, 0.7),
        seed: arg(2, 1.0) as u64,
        ..TrainConfig::default()
    };
    let sizes = [2, 2, 1];
    let task = Task::xor(seed::derive(cfg.seed, &[stream::DATA]));
    let fb = run_fffb(&sizes, &task, &cfg).expect("FF+FB run");
    let ff = run_ff(&sizes, &task, &cfg).expect("FF run");
    let s1 = fb.stage1.as_ref().expect("Stage I");
    let series = s1.series.as_ref().expect("recorded series");

    println!("stage I: {} epochs, {} recorded steps", s1.epochs_run, series.len());
    for (layer, &n) in sizes.iter().enumerate() {
        for neuron in 0..n {
            let s = series.series(layer, neuron).as_slice();
            let ones = s.iter().filter(|&&b| b == 1).count();
            println!("  layer {layer} neuron {neuron}: {:.3} above g", ones as f64 / s.len().max(1) as f64);
        }
    }
    let mut csv = Vec::new();
    s1.te_snapshot.write_csv(&mut csv).expect("in-memory write");
    print!("{}", String::from_utf8(csv).expect("utf-8"));
    println!(
        "FF+FB: {} epochs (reached {}), FF: {} epochs (reached {})",
        fb.epochs(),
        fb.stage2.reached_target,
        ff.epochs(),
        ff.stage2.reached_target
    );
}

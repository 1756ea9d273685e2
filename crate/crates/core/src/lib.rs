//! Backpropagation with transfer-entropy feedback.
//!
//! A small fully connected sigmoid network is trained online. While training,
//! every neuron output is binarized with a threshold `g` and appended to a
//! per-neuron series; the lag-one transfer entropy between each connected
//! pair of neurons then scales that connection's weight update by
//! `(1 - te)`. The baseline (`FF`) is the same loop with `te = 0`.
//!
//! - [`net`]: network, forward/backward pass, TE-modulated update
//! - [`te`]: binarization, series recording, plug-in TE estimators
//! - [`trainer`]: the two-stage FF+FB trainer, the FF baseline, ablations
//! - [`data`]: CSV ingestion, normalization, splits, the XOR generator
//! - [`harness`]: multi-run experiments, grid search, reports

pub mod data;
pub mod harness;
pub mod net;
pub mod seed;
pub mod te;
pub mod trainer;

pub use net::{ActivationRecord, GradientSet, Matrix, NetError, Network};
pub use te::{BinarySeries, SeriesStore, TeConfig, TeError, TeMatrix};

//! Lung sound event detection toolkit.
//!
//! The crate covers the full analysis chain for 15-second, 4 kHz mono lung
//! sound recordings:
//!
//! - [`dataset`]: WAV and label ingestion, per-frame targets, leakage-free
//!   grouped splits, and a deterministic synthetic recording generator.
//! - [`dsp`]: high-pass filtering, STFT, MFCC (+Δ, +Δ²) and band energies,
//!   assembled into a normalized 938×193 feature matrix per recording.
//! - [`nn`]: twelve recurrent sequence-labeling model variants (LSTM/GRU,
//!   unidirectional/bidirectional, with and without a CNN front, plus
//!   parameter-halved SIMP variants) with from-scratch backpropagation,
//!   Adam, plateau learning-rate decay, and early stopping.
//! - [`postproc`]: probability tracks to discrete events (thresholding,
//!   run assembly, spectral-peak merging, burst deletion).
//! - [`eval`]: segment- and event-level confusion counting, F1-family
//!   metrics, ROC/AUC, and event-count MAPE curves.
//! - [`bench`]: the benchmark orchestrator that ties it all together and
//!   emits CSV report tables and curve files.

pub mod bench;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod nn;
pub mod postproc;

pub use error::{Error, Result};

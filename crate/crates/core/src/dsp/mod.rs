//! Signal processing: 60000 samples in, a normalized 938×193 feature matrix out.
//!
//! Pipeline: order-10 Butterworth high-pass at 80 Hz, then a centered STFT
//! (Hann 256, hop 64) giving a 938×129 magnitude spectrogram, from which the
//! log-magnitude block, a 60-column MFCC block (20 static + 20 Δ + 20 Δ²),
//! and four band-energy columns are derived and min–max normalized per
//! column within the recording.

mod features;
mod filter;
mod mfcc;
mod stft;

pub use features::{band_energy, build_feature_matrix};
pub use filter::{design_highpass, highpass_filter, sos_frequency_response, Biquad};
pub use mfcc::{mel_filterbank, mfcc_block};
pub use stft::stft;

use ndarray::Array2;

use crate::error::{Error, Result};

/// FFT window length.
pub const N_FFT: usize = 256;
/// Hop between frames, in samples.
pub const HOP: usize = 64;
/// Non-negative frequency bins per frame (N_FFT / 2 + 1).
pub const N_BINS: usize = 129;
/// Frames per standard 60000-sample clip: 1 + 60000 / 64.
pub const N_FRAMES: usize = 938;
/// Frames after the CNN front halves time resolution.
pub const N_FRAMES_COARSE: usize = 469;
/// Seconds between frame centers (64 / 4000).
pub const FRAME_HOP_SECONDS: f64 = 0.016;
/// Hz per spectrogram bin (4000 / 256).
pub const BIN_HZ: f64 = 15.625;
/// Columns of the assembled feature matrix: 129 + 60 + 4.
pub const N_FEATURES: usize = 193;
/// High-pass filter order.
pub const FILTER_ORDER: usize = 10;
/// High-pass cutoff in Hz.
pub const FILTER_CUTOFF_HZ: f64 = 80.0;
/// Floor added before logarithms so silent frames stay finite.
pub const LOG_FLOOR: f64 = 1e-10;
/// Mel filterbank size.
pub const N_MELS: usize = 40;
/// Kept DCT coefficients per frame.
pub const N_MFCC: usize = 20;
/// Energy-summation bands in Hz, half-open `[lo, hi)`.
pub const ENERGY_BANDS: [(f64, f64); 4] =
    [(0.0, 250.0), (250.0, 500.0), (500.0, 1000.0), (0.0, 2000.0)];

/// Magnitude spectrogram of a standard clip: 938 frames × 129 bins.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    magnitudes: Array2<f64>,
}

impl Spectrogram {
    pub fn new(magnitudes: Array2<f64>) -> Result<Self> {
        if magnitudes.dim() != (N_FRAMES, N_BINS) {
            return Err(Error::InvalidInput(format!(
                "spectrogram must be {N_FRAMES}x{N_BINS}, got {:?}",
                magnitudes.dim()
            )));
        }
        Ok(Spectrogram { magnitudes })
    }

    pub fn magnitudes(&self) -> &Array2<f64> {
        &self.magnitudes
    }

    pub fn n_frames(&self) -> usize {
        self.magnitudes.nrows()
    }

    /// Center time of frame `k` in seconds.
    pub fn frame_time(k: usize) -> f64 {
        k as f64 * FRAME_HOP_SECONDS
    }

    /// Center frequency of bin `b` in Hz.
    pub fn bin_freq(b: usize) -> f64 {
        b as f64 * BIN_HZ
    }

    /// Squared magnitudes.
    pub fn power(&self) -> Array2<f64> {
        self.magnitudes.mapv(|m| m * m)
    }
}

/// The per-recording model input: 938 frames × 193 normalized features.
///
/// Column layout: 0–128 log-magnitude spectrogram, 129–188 MFCC block
/// (static, Δ, Δ² in order), 189–192 band energies. Every value lies in
/// [0, 1]; columns that were constant before normalization are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f32>,
}

impl FeatureMatrix {
    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    /// One CSV row per frame, for inspection dumps.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.values.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

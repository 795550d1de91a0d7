//! MFCC block: mel filterbank, log, DCT-II, and regression deltas.

use ndarray::Array2;

use crate::dsp::{stft, BIN_HZ, LOG_FLOOR, N_BINS, N_MELS, N_MFCC};
use crate::error::Result;

/// Half-width of the delta regression window (frame width 9).
pub const DELTA_HALF_WIDTH: usize = 4;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank over the representable band.
///
/// `n_mels` filters with peaks mel-uniformly spaced between 0 Hz and
/// `fmax_hz`, evaluated at the spectrogram bin centers. Rows are
/// non-negative and every row carries positive weight.
pub fn mel_filterbank(n_mels: usize, n_bins: usize, fmax_hz: f64) -> Array2<f64> {
    let mel_max = hz_to_mel(fmax_hz);
    let points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut fb = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (points[m], points[m + 1], points[m + 2]);
        for b in 0..n_bins {
            let f = b as f64 * BIN_HZ;
            let rising = (f - lo) / (mid - lo);
            let falling = (hi - f) / (hi - mid);
            fb[(m, b)] = rising.min(falling).max(0.0);
        }
    }
    fb
}

/// Orthonormal DCT-II basis: `n_out` rows over `n_in` inputs.
fn dct_matrix(n_out: usize, n_in: usize) -> Array2<f64> {
    let mut dct = Array2::zeros((n_out, n_in));
    for k in 0..n_out {
        let scale = if k == 0 {
            (1.0 / n_in as f64).sqrt()
        } else {
            (2.0 / n_in as f64).sqrt()
        };
        for m in 0..n_in {
            dct[(k, m)] = scale
                * (std::f64::consts::PI * k as f64 * (2.0 * m as f64 + 1.0)
                    / (2.0 * n_in as f64))
                    .cos();
        }
    }
    dct
}

/// Regression delta over frames with replicate padding at the edges:
/// `Δ_t = Σ_{n=1..N} n (c_{t+n} - c_{t-n}) / (2 Σ n²)` with N = 4.
fn deltas(coeffs: &Array2<f64>) -> Array2<f64> {
    let (t_len, n_c) = coeffs.dim();
    let norm: f64 = 2.0 * (1..=DELTA_HALF_WIDTH).map(|n| (n * n) as f64).sum::<f64>();
    let clamp = |t: isize| -> usize { t.clamp(0, t_len as isize - 1) as usize };
    let mut out = Array2::zeros((t_len, n_c));
    for t in 0..t_len {
        for c in 0..n_c {
            let mut acc = 0.0;
            for n in 1..=DELTA_HALF_WIDTH {
                let ahead = coeffs[(clamp(t as isize + n as isize), c)];
                let behind = coeffs[(clamp(t as isize - n as isize), c)];
                acc += n as f64 * (ahead - behind);
            }
            out[(t, c)] = acc / norm;
        }
    }
    out
}

/// MFCCs with deltas from a power spectrogram that shares the STFT framing.
/// Output columns: 20 static, 20 Δ, 20 Δ² (Δ of Δ).
pub(crate) fn mfcc_from_power(power: &Array2<f64>) -> Array2<f64> {
    let fb = mel_filterbank(N_MELS, N_BINS, 2000.0);
    let mel = power.dot(&fb.t());
    let log_mel = mel.mapv(|v| (v + LOG_FLOOR).ln());
    let dct = dct_matrix(N_MFCC, N_MELS);
    let statics = log_mel.dot(&dct.t());
    let delta = deltas(&statics);
    let delta2 = deltas(&delta);

    let t_len = power.nrows();
    let mut out = Array2::zeros((t_len, 3 * N_MFCC));
    for t in 0..t_len {
        for c in 0..N_MFCC {
            out[(t, c)] = statics[(t, c)];
            out[(t, N_MFCC + c)] = delta[(t, c)];
            out[(t, 2 * N_MFCC + c)] = delta2[(t, c)];
        }
    }
    out
}

/// Full MFCC block for a (already high-passed) clip: 938×60.
pub fn mfcc_block(samples: &[f64]) -> Result<Array2<f64>> {
    let spec = stft(samples)?;
    Ok(mfcc_from_power(&spec.power()))
}

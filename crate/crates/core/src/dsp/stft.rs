//! Centered short-time Fourier transform.
//!
//! The signal is reflection-padded by half a window on each side (no zero
//! padding), so a 60000-sample clip yields exactly 1 + 60000/64 = 938 frames
//! and frame k is centered on sample k·64.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dataset::CLIP_SAMPLES;
use crate::dsp::{Spectrogram, HOP, N_BINS, N_FFT, N_FRAMES};
use crate::error::{Error, Result};

fn hann_window() -> [f64; N_FFT] {
    let mut w = [0.0; N_FFT];
    for (i, v) in w.iter_mut().enumerate() {
        *v = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / N_FFT as f64).cos());
    }
    w
}

/// Reflect the signal by `N_FFT / 2` samples at each end, edge excluded.
fn reflect_pad(samples: &[f64]) -> Vec<f64> {
    let half = N_FFT / 2;
    let n = samples.len();
    let mut padded = Vec::with_capacity(n + N_FFT);
    for m in (1..=half).rev() {
        padded.push(samples[m]);
    }
    padded.extend_from_slice(samples);
    for m in 1..=half {
        padded.push(samples[n - 1 - m]);
    }
    padded
}

/// Magnitude spectrogram of a standard 60000-sample clip: 938×129.
pub fn stft(samples: &[f64]) -> Result<Spectrogram> {
    if samples.len() != CLIP_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "stft expects {CLIP_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let window = hann_window();
    let padded = reflect_pad(samples);
    let fft = FftPlanner::new().plan_fft_forward(N_FFT);
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buffer = vec![Complex::new(0.0, 0.0); N_FFT];

    let mut magnitudes = Array2::zeros((N_FRAMES, N_BINS));
    for k in 0..N_FRAMES {
        let start = k * HOP;
        for i in 0..N_FFT {
            buffer[i] = Complex::new(padded[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for b in 0..N_BINS {
            magnitudes[(k, b)] = buffer[b].norm();
        }
    }
    Spectrogram::new(magnitudes)
}

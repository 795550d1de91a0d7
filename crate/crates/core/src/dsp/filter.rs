//! Order-10 Butterworth high-pass filter, realized as five cascaded
//! second-order sections via the bilinear transform with prewarping.

use std::f64::consts::PI;

use crate::dataset::SAMPLE_RATE;
use crate::dsp::{FILTER_CUTOFF_HZ, FILTER_ORDER};

/// One second-order section, denominator normalized (a0 = 1).
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

/// Design an even-order Butterworth high-pass as second-order sections.
///
/// Analog prototype poles on the unit circle are high-pass transformed with
/// the prewarped cutoff, then each conjugate pair is discretized by the
/// bilinear transform. Each section has exactly unit gain at Nyquist and a
/// double zero at DC.
pub fn design_highpass(order: usize, cutoff_hz: f64, sample_rate: f64) -> Vec<Biquad> {
    assert!(order >= 2 && order % 2 == 0, "even order required");
    assert!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0);

    // Prewarped analog cutoff for the s = (1 - z^-1) / (1 + z^-1) transform.
    let omega = (PI * cutoff_hz / sample_rate).tan();

    let mut sections = Vec::with_capacity(order / 2);
    for k in 0..order / 2 {
        // Upper-half-plane prototype pole; its conjugate completes the pair.
        let theta = PI * (2.0 * k as f64 + order as f64 + 1.0) / (2.0 * order as f64);
        let re = theta.cos();

        // High-pass pole pair omega / p has sum 2*omega*re and product omega^2.
        let a1_analog = -2.0 * omega * re;
        let a0_analog = omega * omega;

        // Bilinear transform of s^2 / (s^2 + a1 s + a0).
        let d0 = 1.0 + a1_analog + a0_analog;
        let d1 = -2.0 + 2.0 * a0_analog;
        let d2 = 1.0 - a1_analog + a0_analog;
        sections.push(Biquad {
            b0: 1.0 / d0,
            b1: -2.0 / d0,
            b2: 1.0 / d0,
            a1: d1 / d0,
            a2: d2 / d0,
        });
    }
    sections
}

/// Magnitude of the cascade's frequency response at `freq_hz`.
pub fn sos_frequency_response(sections: &[Biquad], freq_hz: f64, sample_rate: f64) -> f64 {
    use rustfft::num_complex::Complex;
    let omega = 2.0 * PI * freq_hz / sample_rate;
    let z1 = Complex::from_polar(1.0, -omega);
    let z2 = Complex::from_polar(1.0, -2.0 * omega);
    sections
        .iter()
        .map(|s| {
            let num = Complex::new(s.b0, 0.0) + z1 * s.b1 + z2 * s.b2;
            let den = Complex::new(1.0, 0.0) + z1 * s.a1 + z2 * s.a2;
            (num / den).norm()
        })
        .product()
}

/// Run samples through cascaded sections (direct form II transposed),
/// starting from zero state. Causal; output length equals input length.
pub fn filter_sos(sections: &[Biquad], samples: &[f64]) -> Vec<f64> {
    let mut state = vec![(0.0f64, 0.0f64); sections.len()];
    samples
        .iter()
        .map(|&x0| {
            let mut x = x0;
            for (s, (s1, s2)) in sections.iter().zip(state.iter_mut()) {
                let y = s.b0 * x + *s1;
                *s1 = s.b1 * x - s.a1 * y + *s2;
                *s2 = s.b2 * x - s.a2 * y;
                x = y;
            }
            x
        })
        .collect()
}

/// The pipeline's standard high-pass: order 10, -3 dB at 80 Hz, 4 kHz input.
pub fn highpass_filter(samples: &[f64]) -> Vec<f64> {
    let sections = design_highpass(FILTER_ORDER, FILTER_CUTOFF_HZ, SAMPLE_RATE as f64);
    filter_sos(&sections, samples)
}

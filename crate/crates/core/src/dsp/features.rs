//! Band energies and feature-matrix assembly.

use ndarray::{s, Array2};

use crate::dataset::{AudioClip, CLIP_SAMPLES, SAMPLE_RATE};
use crate::dsp::mfcc::mfcc_from_power;
use crate::dsp::{
    highpass_filter, stft, FeatureMatrix, Spectrogram, ENERGY_BANDS, LOG_FLOOR, N_BINS,
    N_FEATURES,
};
use crate::error::{Error, Result};

/// Per-frame energy summation over the four analysis bands. A bin belongs
/// to a band when its center frequency lies in `[lo, hi)`; energy is the
/// squared magnitude.
pub fn band_energy(spec: &Spectrogram) -> Array2<f64> {
    let mags = spec.magnitudes();
    let mut out = Array2::zeros((spec.n_frames(), ENERGY_BANDS.len()));
    for (band_idx, &(lo, hi)) in ENERGY_BANDS.iter().enumerate() {
        let bins: Vec<usize> = (0..N_BINS)
            .filter(|&b| {
                let f = Spectrogram::bin_freq(b);
                f >= lo && f < hi
            })
            .collect();
        for k in 0..spec.n_frames() {
            out[(k, band_idx)] = bins.iter().map(|&b| mags[(k, b)].powi(2)).sum();
        }
    }
    out
}

fn minmax_normalize_columns(mut m: Array2<f64>) -> Array2<f64> {
    for mut col in m.columns_mut() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if range > 0.0 {
            col.mapv_inplace(|v| (v - lo) / range);
        } else {
            col.fill(0.0);
        }
    }
    m
}

/// Full preprocessing chain for one clip: high-pass, STFT, log-magnitude
/// spectrogram, MFCC block, band energies, concatenation, and per-column
/// min–max normalization within the recording.
pub fn build_feature_matrix(clip: &AudioClip) -> Result<FeatureMatrix> {
    if clip.sample_rate != SAMPLE_RATE {
        return Err(Error::InvalidInput(format!(
            "sample rate {} Hz, want {SAMPLE_RATE}",
            clip.sample_rate
        )));
    }
    if clip.samples.len() != CLIP_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "clip has {} samples, want {CLIP_SAMPLES}",
            clip.samples.len()
        )));
    }

    let filtered = highpass_filter(&clip.samples);
    let spec = stft(&filtered)?;
    let log_mag = spec.magnitudes().mapv(|m| (m + LOG_FLOOR).ln());
    let mfcc = mfcc_from_power(&spec.power());
    let bands = band_energy(&spec);

    let n = spec.n_frames();
    let mut combined = Array2::zeros((n, N_FEATURES));
    combined.slice_mut(s![.., 0..129]).assign(&log_mag);
    combined.slice_mut(s![.., 129..189]).assign(&mfcc);
    combined.slice_mut(s![.., 189..193]).assign(&bands);

    let normalized = minmax_normalize_columns(combined);
    Ok(FeatureMatrix {
        values: normalized.mapv(|v| v as f32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DeviceTag;

    fn clip_from(samples: Vec<f64>) -> AudioClip {
        AudioClip {
            samples,
            sample_rate: SAMPLE_RATE,
            source_id: "test".into(),
            device_tag: DeviceTag::Steth,
        }
    }

    fn sine_clip(freq: f64) -> AudioClip {
        clip_from(
            (0..CLIP_SAMPLES)
                .map(|i| 0.4 * (2.0 * std::f64::consts::PI * freq * i as f64 / 4000.0).sin())
                .collect(),
        )
    }

    #[test]
    fn zero_spectrogram_gives_zero_band_energy() {
        let spec = Spectrogram::new(Array2::zeros((938, 129))).unwrap();
        assert!(band_energy(&spec).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_hundred_hz_lands_in_second_band() {
        let spec = stft(&sine_clip(300.0).samples).unwrap();
        let bands = band_energy(&spec);
        let totals: Vec<f64> = (0..4).map(|b| bands.column(b).sum()).collect();
        let narrow_sum = totals[0] + totals[1] + totals[2];
        assert!(totals[1] > 0.9 * narrow_sum, "band totals {totals:?}");
        assert!(totals[3] >= totals[1]);
    }

    #[test]
    fn wide_band_dominates_every_narrow_band() {
        let clip = clip_from(
            (0..CLIP_SAMPLES).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect(),
        );
        let bands = band_energy(&stft(&clip.samples).unwrap());
        for k in 0..938 {
            for b in 0..3 {
                assert!(bands[(k, 3)] >= bands[(k, b)]);
            }
        }
    }

    #[test]
    fn feature_matrix_shape_and_range() {
        let fm = build_feature_matrix(&sine_clip(350.0)).unwrap();
        assert_eq!(fm.values.dim(), (938, 193));
        assert!(fm.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn nonconstant_columns_hit_both_bounds() {
        let fm = build_feature_matrix(&sine_clip(350.0)).unwrap();
        for (c, col) in fm.values.columns().into_iter().enumerate() {
            let lo = col.iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = col.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            if hi > lo {
                assert!(lo == 0.0 && (hi - 1.0).abs() < 1e-6, "column {c}: [{lo}, {hi}]");
            } else {
                assert_eq!(lo, 0.0, "constant column {c} must map to zero");
            }
        }
    }

    #[test]
    fn constant_column_maps_to_zero() {
        // All-zero input: every feature column is constant pre-normalization.
        let fm = build_feature_matrix(&clip_from(vec![0.0; CLIP_SAMPLES])).unwrap();
        assert!(fm.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_short_clip() {
        assert!(build_feature_matrix(&clip_from(vec![0.0; 100])).is_err());
    }
}

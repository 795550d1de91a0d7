//! Deterministic synthetic lung sound generator.
//!
//! Produces desk-scale labeled recordings whose classes are separable by
//! construction: breath phases are band-limited noise bursts placed in
//! disjoint frequency bands (inhalation high, exhalation mid), continuous
//! adventitious sounds are tonal chirps between 100 and 1000 Hz riding on a
//! breath phase, and discontinuous adventitious sounds are short transient
//! click trains. Emitted labels match the synthesis times exactly.

use std::f64::consts::TAU;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    assign_splits, format_label_file, AudioClip, DatasetManifest, DeviceTag, Klass, LabelEvent,
    RecordingRecord, Split, CLIP_SAMPLES, CLIP_SECONDS, SAMPLE_RATE,
};
use crate::error::{Error, Result};

/// Frequency band of inhalation noise bursts (Hz).
pub const INHALE_BAND: (f64, f64) = (1200.0, 1800.0);
/// Frequency band of exhalation noise bursts (Hz).
pub const EXHALE_BAND: (f64, f64) = (400.0, 900.0);
/// Fundamental range of CAS chirps (Hz).
pub const CAS_RANGE: (f64, f64) = (100.0, 1000.0);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisSpec {
    /// Minimum breaths per clip; generation fails if these cannot fit.
    pub breaths_min: usize,
    /// Upper bound on breaths per clip; extra breaths are dropped if the
    /// 15-s budget runs out.
    pub breaths_max: usize,
    /// Mean inhalation duration in seconds.
    pub inhale_mean_dur: f64,
    /// Mean exhalation duration in seconds.
    pub exhale_mean_dur: f64,
    /// Half-width of the uniform duration jitter around each mean.
    pub duration_jitter: f64,
    /// Probability that a clip contains CAS (wheeze/stridor/rhonchus) events.
    pub cas_rate: f64,
    /// Probability that a clip contains DAS (crackle) events.
    pub das_rate: f64,
    /// Event-signal-to-background-noise ratio in dB.
    pub snr_db: f64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        SynthesisSpec {
            breaths_min: 3,
            breaths_max: 5,
            inhale_mean_dur: 0.93,
            exhale_mean_dur: 0.96,
            duration_jitter: 0.25,
            cas_rate: 0.3,
            das_rate: 0.3,
            snr_db: 20.0,
        }
    }
}

impl SynthesisSpec {
    fn validate(&self) -> Result<()> {
        if self.breaths_min == 0 || self.breaths_max < self.breaths_min {
            return Err(Error::Config("breath count range is empty".into()));
        }
        if self.duration_jitter < 0.0
            || self.inhale_mean_dur <= self.duration_jitter
            || self.exhale_mean_dur <= self.duration_jitter
        {
            return Err(Error::Config("duration jitter exceeds mean durations".into()));
        }
        if !(0.0..=1.0).contains(&self.cas_rate) || !(0.0..=1.0).contains(&self.das_rate) {
            return Err(Error::Config("event rates must be in [0, 1]".into()));
        }
        // Worst case for the mandatory breaths: maximal durations and gaps.
        let max_cycle = self.inhale_mean_dur + self.exhale_mean_dur + 2.0 * self.duration_jitter
            + GAP_RANGE.1;
        let worst = START_RANGE.1 + self.breaths_min as f64 * (max_cycle + GAP_RANGE.1);
        if worst > CLIP_SECONDS {
            return Err(Error::Config(format!(
                "infeasible: {} breaths of up to {max_cycle:.2} s cannot fit in {CLIP_SECONDS} s",
                self.breaths_min
            )));
        }
        Ok(())
    }
}

const START_RANGE: (f64, f64) = (0.2, 0.6);
const GAP_RANGE: (f64, f64) = (0.15, 0.5);
const INHALE_AMP: f64 = 0.30;
const EXHALE_AMP: f64 = 0.22;
const CAS_AMP: f64 = 0.18;
const CLICK_AMP: f64 = 0.35;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Noise with spectral support restricted to `[lo_hz, hi_hz)`, unit RMS.
/// Built in the frequency domain so the band edges are exact.
fn bandlimited_noise(rng: &mut ChaCha8Rng, n: usize, lo_hz: f64, hi_hz: f64) -> Vec<f64> {
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let df = SAMPLE_RATE as f64 / n as f64;
    for k in 1..n / 2 {
        let f = k as f64 * df;
        if f >= lo_hz && f < hi_hz {
            let phase = uniform(rng, 0.0, TAU);
            spectrum[k] = Complex::from_polar(1.0, phase);
            spectrum[n - k] = spectrum[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let mut out: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        for x in &mut out {
            *x /= rms;
        }
    }
    out
}

/// Hann-flank amplitude envelope: 15% attack, 15% release.
fn envelope(n: usize, i: usize) -> f64 {
    let ramp = (n as f64 * 0.15).max(1.0);
    let pos = i as f64;
    if pos < ramp {
        0.5 * (1.0 - (std::f64::consts::PI * pos / ramp).cos())
    } else if pos > n as f64 - 1.0 - ramp {
        let from_end = n as f64 - 1.0 - pos;
        0.5 * (1.0 - (std::f64::consts::PI * from_end / ramp).cos())
    } else {
        1.0
    }
}

fn add_burst(samples: &mut [f64], rng: &mut ChaCha8Rng, start: f64, dur: f64, band: (f64, f64), amp: f64) {
    let s0 = (start * SAMPLE_RATE as f64).round() as usize;
    let n = (dur * SAMPLE_RATE as f64).round() as usize;
    let noise = bandlimited_noise(rng, n, band.0, band.1);
    for (i, x) in noise.iter().enumerate() {
        if s0 + i < samples.len() {
            samples[s0 + i] += amp * envelope(n, i) * x;
        }
    }
}

fn add_chirp(samples: &mut [f64], rng: &mut ChaCha8Rng, start: f64, dur: f64) {
    let f0 = uniform(rng, CAS_RANGE.0 + 50.0, CAS_RANGE.1 - 50.0);
    let f1 = (f0 * uniform(rng, 0.9, 1.1)).clamp(CAS_RANGE.0, CAS_RANGE.1);
    let s0 = (start * SAMPLE_RATE as f64).round() as usize;
    let n = (dur * SAMPLE_RATE as f64).round() as usize;
    let sweep = (f1 - f0) / dur;
    for i in 0..n {
        let t = i as f64 / SAMPLE_RATE as f64;
        let phase = TAU * (f0 * t + 0.5 * sweep * t * t);
        if s0 + i < samples.len() {
            samples[s0 + i] += CAS_AMP * envelope(n, i) * phase.sin();
        }
    }
}

fn add_click_train(samples: &mut [f64], rng: &mut ChaCha8Rng, start: f64, dur: f64) {
    let mut t = start;
    let end = start + dur;
    while t < end {
        let fc = uniform(rng, 400.0, 800.0);
        let s0 = (t * SAMPLE_RATE as f64).round() as usize;
        // 8 ms damped oscillation per click.
        let n = (0.008 * SAMPLE_RATE as f64) as usize;
        for i in 0..n {
            let tt = i as f64 / SAMPLE_RATE as f64;
            if s0 + i < samples.len() {
                samples[s0 + i] += CLICK_AMP * (-tt / 0.002).exp() * (TAU * fc * tt).sin();
            }
        }
        t += uniform(rng, 0.03, 0.06);
    }
}

/// Generate one labeled clip. Bit-identical output for a given (spec, seed).
pub fn synthesize_recording(spec: &SynthesisSpec, seed: u64) -> Result<(AudioClip, Vec<LabelEvent>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0f64; CLIP_SAMPLES];
    let mut labels: Vec<LabelEvent> = Vec::new();
    let mut breath_phases: Vec<(Klass, f64, f64)> = Vec::new();

    let breaths = rng.random_range(spec.breaths_min..=spec.breaths_max);
    let mut t = uniform(&mut rng, START_RANGE.0, START_RANGE.1);
    let mut placed = 0usize;
    for _ in 0..breaths {
        let di = uniform(
            &mut rng,
            spec.inhale_mean_dur - spec.duration_jitter,
            spec.inhale_mean_dur + spec.duration_jitter,
        );
        let gap1 = uniform(&mut rng, GAP_RANGE.0, GAP_RANGE.1);
        let de = uniform(
            &mut rng,
            spec.exhale_mean_dur - spec.duration_jitter,
            spec.exhale_mean_dur + spec.duration_jitter,
        );
        let gap2 = uniform(&mut rng, GAP_RANGE.0, GAP_RANGE.1);
        if t + di + gap1 + de > CLIP_SECONDS - 0.1 {
            break;
        }
        breath_phases.push((Klass::I, t, t + di));
        breath_phases.push((Klass::E, t + di + gap1, t + di + gap1 + de));
        t += di + gap1 + de + gap2;
        placed += 1;
    }
    if placed < spec.breaths_min {
        return Err(Error::InvalidInput(format!(
            "could not fit {} breaths in {CLIP_SECONDS} s",
            spec.breaths_min
        )));
    }

    for &(klass, start, end) in &breath_phases {
        let (band, amp) = match klass {
            Klass::I => (INHALE_BAND, INHALE_AMP),
            _ => (EXHALE_BAND, EXHALE_AMP),
        };
        add_burst(&mut samples, &mut rng, start, end - start, band, amp);
        labels.push(LabelEvent { klass, start, end });
    }

    // Adventitious sounds ride on breath phases, as they do physiologically.
    if rng.random_range(0.0..1.0) < spec.cas_rate {
        let count = rng.random_range(1..=2usize);
        for _ in 0..count {
            let &(_, hs, he) = breath_phases.choose(&mut rng).expect("breaths placed");
            let host_dur = he - hs;
            let dur = host_dur * uniform(&mut rng, 0.5, 0.9);
            let start = hs + uniform(&mut rng, 0.0, host_dur - dur);
            add_chirp(&mut samples, &mut rng, start, dur);
            let klass = *[Klass::W, Klass::W, Klass::W, Klass::S, Klass::R, Klass::R]
                .choose(&mut rng)
                .unwrap();
            labels.push(LabelEvent { klass, start, end: start + dur });
        }
    }
    if rng.random_range(0.0..1.0) < spec.das_rate {
        let count = rng.random_range(1..=2usize);
        for _ in 0..count {
            let &(_, hs, he) = breath_phases.choose(&mut rng).expect("breaths placed");
            let host_dur = he - hs;
            let dur = host_dur * uniform(&mut rng, 0.5, 0.9);
            let start = hs + uniform(&mut rng, 0.0, host_dur - dur);
            add_click_train(&mut samples, &mut rng, start, dur);
            labels.push(LabelEvent { klass: Klass::D, start, end: start + dur });
        }
    }

    // Background noise scaled to the requested SNR against the event signal.
    let signal_rms = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt();
    let noise_rms = signal_rms / 10f64.powf(spec.snr_db / 20.0);
    // Uniform white noise has RMS amp/sqrt(3).
    let noise_amp = noise_rms * 3f64.sqrt();
    for x in samples.iter_mut() {
        *x += noise_amp * uniform(&mut rng, -1.0, 1.0);
    }

    labels.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap().then(a.klass.cmp(&b.klass)));
    let clip = AudioClip {
        samples,
        sample_rate: SAMPLE_RATE,
        source_id: format!("synth_{seed}"),
        device_tag: DeviceTag::Trunc,
    };
    Ok((clip, labels))
}

/// Write `n` synthetic recordings (plus label files and a manifest) under
/// `out_dir`. Recordings are grouped `group_size` at a time into patient-day
/// groups, and groups are assigned to train/test splits by `test_fraction`.
pub fn synthesize_dataset(
    out_dir: &Path,
    n: usize,
    group_size: usize,
    spec: &SynthesisSpec,
    seed: u64,
    test_fraction: f64,
) -> Result<DatasetManifest> {
    if group_size == 0 {
        return Err(Error::Config("group_size must be positive".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let group = i / group_size;
        let round = i % group_size;
        let stem = format!("synth_p{group:04}_{round}");
        // Each clip draws from its own stream so files are independent of n.
        let (clip, labels) = synthesize_recording(spec, seed.wrapping_add(i as u64))?;
        let clip_path = out_dir.join(format!("{stem}.wav"));
        let label_path = out_dir.join(format!("{stem}_label.txt"));
        crate::dataset::write_wav_file(&clip_path, &clip.samples)?;
        std::fs::write(&label_path, format_label_file(&labels))?;
        records.push(RecordingRecord {
            clip_path,
            label_path,
            group_key: format!("synth_p{group:04}"),
            split: Split::Unassigned,
        });
    }
    assign_splits(&mut records, test_fraction, seed)?;
    DatasetManifest::new(records, 5, seed)
}

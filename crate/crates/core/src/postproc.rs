//! From probability tracks to discrete events.
//!
//! Thresholding turns a per-frame track into a binary one; maximal runs of
//! active frames become events; near-adjacent events whose spectral energy
//! peaks sit close together are merged; and events shorter than the burst
//! limit are deleted.

use serde::{Deserialize, Serialize};

use crate::dsp::{Spectrogram, FRAME_HOP_SECONDS, N_FRAMES, N_FRAMES_COARSE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocConfig {
    /// Probability threshold for segment activation.
    pub threshold: f64,
    /// Merge events whose gap is strictly below this many seconds.
    pub merge_gap: f64,
    /// ... and whose energy-peak frequencies differ by strictly less than
    /// this many Hz.
    pub peak_tol: f64,
    /// Delete events strictly shorter than this many seconds.
    pub min_duration: f64,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            threshold: 0.5,
            merge_gap: 0.5,
            peak_tol: 25.0,
            min_duration: 0.05,
        }
    }
}

impl PostprocConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold)
            || self.merge_gap < 0.0
            || self.peak_tol < 0.0
            || self.min_duration < 0.0
        {
            return Err(Error::Config("postprocessing parameters out of range".into()));
        }
        Ok(())
    }
}

/// A detected event with the frequency of its spectral energy peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub start: f64,
    pub end: f64,
    pub peak_freq: f64,
}

impl EventInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Threshold a probability track: value >= theta becomes 1.
pub fn binarize(track: &[f64], theta: f64) -> Vec<u8> {
    track.iter().map(|&p| (p >= theta) as u8).collect()
}

/// Expand a coarse 469-frame track to 938 frames by repeating each value
/// twice (the inverse of the max-pool target coarsening).
pub fn expand_coarse_track(track: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(track.len() * 2);
    for &v in track {
        out.push(v);
        out.push(v);
    }
    out
}

/// Frequency of the maximal summed magnitude over frames `[first, last]`,
/// restricted to bins below 2000 Hz. Ties resolve to the lowest frequency.
fn peak_over_frames(spec: &Spectrogram, first: usize, last: usize) -> f64 {
    let mags = spec.magnitudes();
    let max_bin = (2000.0 / crate::dsp::BIN_HZ) as usize; // exclusive
    let mut best_bin = 0usize;
    let mut best_sum = f64::NEG_INFINITY;
    for b in 0..max_bin {
        let sum: f64 = (first..=last).map(|k| mags[(k, b)]).sum();
        if sum > best_sum {
            best_sum = sum;
            best_bin = b;
        }
    }
    Spectrogram::bin_freq(best_bin)
}

/// Spectral peak over the frames whose centers lie in `[start, end)`.
pub fn spectral_peak(spec: &Spectrogram, start: f64, end: f64) -> f64 {
    let first = (start / FRAME_HOP_SECONDS).ceil().max(0.0) as usize;
    let last = ((end / FRAME_HOP_SECONDS).floor() as usize).min(N_FRAMES - 1);
    let first = first.min(last);
    peak_over_frames(spec, first, last)
}

/// Assemble maximal runs of active frames into events.
///
/// An event spans from half a hop before its first frame center to half a
/// hop after its last; its peak frequency maximizes the summed magnitude
/// over the event's frames. Coarse 469-frame tracks must be expanded first.
pub fn assemble_events(track: &[u8], spec: &Spectrogram) -> Result<Vec<EventInterval>> {
    if track.len() != spec.n_frames() {
        return Err(Error::InvalidInput(format!(
            "track length {} does not match {} frames",
            track.len(),
            spec.n_frames()
        )));
    }
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    for k in 0..=track.len() {
        let active = k < track.len() && track[k] == 1;
        match (active, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(first)) => {
                let last = k - 1;
                events.push(EventInterval {
                    start: Spectrogram::frame_time(first) - FRAME_HOP_SECONDS / 2.0,
                    end: Spectrogram::frame_time(last) + FRAME_HOP_SECONDS / 2.0,
                    peak_freq: peak_over_frames(spec, first, last),
                });
                run_start = None;
            }
            _ => {}
        }
    }
    // The first frame's center sits at t = 0; clamp its leading half-hop.
    for ev in &mut events {
        ev.start = ev.start.max(0.0);
    }
    Ok(events)
}

fn check_sorted_disjoint(events: &[EventInterval]) -> Result<()> {
    for w in events.windows(2) {
        if w[1].start < w[0].end {
            return Err(Error::InvalidInput(format!(
                "events must be sorted and non-overlapping: [{}, {}] then [{}, {}]",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    Ok(())
}

/// Merge consecutive events whose gap is strictly below `merge_gap` seconds
/// and whose peak frequencies differ by strictly less than `peak_tol` Hz.
///
/// `peak_of(start, end)` recomputes the energy peak over a merged span.
/// The left-to-right scan repeats until no pair merges, so the result is a
/// fixpoint: re-running changes nothing even though merged peaks move.
pub fn merge_close_events<F>(
    events: &[EventInterval],
    merge_gap: f64,
    peak_tol: f64,
    peak_of: F,
) -> Result<Vec<EventInterval>>
where
    F: Fn(f64, f64) -> f64,
{
    check_sorted_disjoint(events)?;
    let mut current: Vec<EventInterval> = events.to_vec();
    loop {
        let mut merged_any = false;
        let mut out: Vec<EventInterval> = Vec::with_capacity(current.len());
        for &ev in &current {
            match out.last_mut() {
                Some(prev)
                    if ev.start - prev.end < merge_gap
                        && (ev.peak_freq - prev.peak_freq).abs() < peak_tol =>
                {
                    prev.end = ev.end;
                    prev.peak_freq = peak_of(prev.start, prev.end);
                    merged_any = true;
                }
                _ => out.push(ev),
            }
        }
        current = out;
        if !merged_any {
            return Ok(current);
        }
    }
}

/// Delete events strictly shorter than `min_duration`.
pub fn remove_bursts(events: &[EventInterval], min_duration: f64) -> Vec<EventInterval> {
    events.iter().filter(|ev| ev.duration() >= min_duration).cloned().collect()
}

/// Full postprocessing chain: binarize, expand coarse tracks, assemble,
/// merge, and delete bursts.
pub fn postprocess(
    track: &[f64],
    cfg: &PostprocConfig,
    spec: &Spectrogram,
) -> Result<Vec<EventInterval>> {
    cfg.validate()?;
    let binary = binarize(track, cfg.threshold);
    let binary = match binary.len() {
        N_FRAMES => binary,
        N_FRAMES_COARSE => expand_coarse_track(&binary),
        n => {
            return Err(Error::InvalidInput(format!(
                "track length {n}, want {N_FRAMES} or {N_FRAMES_COARSE}"
            )))
        }
    };
    let events = assemble_events(&binary, spec)?;
    let merged = merge_close_events(&events, cfg.merge_gap, cfg.peak_tol, |s, e| {
        spectral_peak(spec, s, e)
    })?;
    Ok(remove_bursts(&merged, cfg.min_duration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn ev(start: f64, end: f64, peak: f64) -> EventInterval {
        EventInterval { start, end, peak_freq: peak }
    }

    fn flat_spec() -> Spectrogram {
        Spectrogram::new(Array2::zeros((938, 129))).unwrap()
    }

    #[test]
    fn binarize_uses_ge_convention() {
        assert_eq!(binarize(&[0.4, 0.6], 0.5), vec![0, 1]);
        assert_eq!(binarize(&[0.5], 0.5), vec![1]);
        assert_eq!(binarize(&[0.0, 0.1], 0.0), vec![1, 1]);
    }

    #[test]
    fn assemble_empty_track() {
        let events = assemble_events(&vec![0u8; 938], &flat_spec()).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn assemble_run_63_to_124() {
        let mut track = vec![0u8; 938];
        for k in 63..=124 {
            track[k] = 1;
        }
        let events = assemble_events(&track, &flat_spec()).unwrap();
        assert_eq!(events.len(), 1);
        assert!((events[0].start - 1.000).abs() < 1e-9);
        assert!((events[0].end - 1.992).abs() < 1e-9);
    }

    #[test]
    fn single_zero_frame_splits_runs() {
        let mut track = vec![0u8; 938];
        for k in 100..110 {
            track[k] = 1;
        }
        track[110] = 0;
        for k in 111..120 {
            track[k] = 1;
        }
        let events = assemble_events(&track, &flat_spec()).unwrap();
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn peak_prefers_lowest_on_ties_and_tracks_energy() {
        let mut mags = Array2::zeros((938, 129));
        for k in 0..938 {
            mags[(k, 20)] = 2.0; // 312.5 Hz dominates
            mags[(k, 40)] = 1.0;
        }
        let spec = Spectrogram::new(mags).unwrap();
        let mut track = vec![0u8; 938];
        for k in 10..30 {
            track[k] = 1;
        }
        let events = assemble_events(&track, &spec).unwrap();
        assert_eq!(events[0].peak_freq, 20.0 * 15.625);
        // All-equal magnitudes tie; lowest frequency wins.
        assert_eq!(peak_over_frames(&flat_spec(), 0, 10), 0.0);
    }

    #[test]
    fn merge_applies_both_rules() {
        let peak_of = |_s: f64, _e: f64| 205.0;

        // Gap 0.3 < 0.5 and |210 - 200| = 10 < 25: merged.
        let merged = merge_close_events(
            &[ev(1.0, 1.5, 200.0), ev(1.8, 2.4, 210.0)],
            0.5,
            25.0,
            peak_of,
        )
        .unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!((merged[0].start, merged[0].end), (1.0, 2.4));
        assert_eq!(merged[0].peak_freq, 205.0);

        // Gap 0.6 >= 0.5: not merged.
        let apart = merge_close_events(
            &[ev(1.0, 1.5, 200.0), ev(2.1, 2.4, 210.0)],
            0.5,
            25.0,
            peak_of,
        )
        .unwrap();
        assert_eq!(apart.len(), 2);

        // |240 - 200| = 40 >= 25: not merged.
        let spread = merge_close_events(
            &[ev(1.0, 1.5, 200.0), ev(1.8, 2.4, 240.0)],
            0.5,
            25.0,
            peak_of,
        )
        .unwrap();
        assert_eq!(spread.len(), 2);
    }

    #[test]
    fn merged_event_retests_against_next() {
        // A+B merge; the merged event then absorbs C as well.
        let merged = merge_close_events(
            &[ev(1.0, 1.5, 200.0), ev(1.8, 2.4, 210.0), ev(2.5, 3.0, 205.0)],
            0.5,
            25.0,
            |_, _| 205.0,
        )
        .unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!((merged[0].start, merged[0].end), (1.0, 3.0));
    }

    #[test]
    fn merge_rejects_unsorted_input() {
        let result = merge_close_events(
            &[ev(2.0, 3.0, 100.0), ev(1.0, 1.5, 100.0)],
            0.5,
            25.0,
            |_, _| 100.0,
        );
        assert!(result.is_err());
    }

    #[test]
    fn burst_rule_deletes_strictly_shorter() {
        let events = [ev(2.0, 2.04, 100.0), ev(3.0, 3.05, 100.0)];
        let kept = remove_bursts(&events, 0.05);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].start, 3.0);
        assert!(remove_bursts(&[], 0.05).is_empty());
    }

    #[test]
    fn pipeline_is_idempotent_at_event_level() {
        let mut mags = Array2::zeros((938, 129));
        for k in 0..938 {
            for b in 0..129 {
                mags[(k, b)] = ((k * 31 + b * 17) % 97) as f64 / 97.0;
            }
        }
        let spec = Spectrogram::new(mags).unwrap();
        // 40 active frames, 20 inactive: gaps of 0.32 s sit below the merge
        // threshold, so merging decisions hinge on the recomputed peaks.
        let track: Vec<f64> =
            (0..938).map(|k| if (k / 20) % 3 != 2 { 0.9 } else { 0.1 }).collect();
        let cfg = PostprocConfig::default();
        let events = postprocess(&track, &cfg, &spec).unwrap();
        let again = merge_close_events(&events, cfg.merge_gap, cfg.peak_tol, |s, e| {
            spectral_peak(&spec, s, e)
        })
        .unwrap();
        let again = remove_bursts(&again, cfg.min_duration);
        assert_eq!(events, again);
    }

    #[test]
    fn coarse_track_expansion() {
        let coarse = vec![1u8, 0, 1];
        assert_eq!(expand_coarse_track(&coarse), vec![1, 1, 0, 0, 1, 1]);
    }
}

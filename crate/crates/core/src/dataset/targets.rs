//! Ground-truth time segments: per-frame binary targets derived from events.

use crate::dataset::{Klass, LabelEvent, SegmentTargets};
use crate::dsp::{FRAME_HOP_SECONDS, N_FRAMES, N_FRAMES_COARSE};
use crate::error::{Error, Result};

/// Mark frame `k` active iff its center time `k * hop` lies in `[start, end)`
/// of any event of `klass`.
///
/// `n_frames` must be 938 (hop 0.016 s) or 469 (hop 0.032 s). Coarse targets
/// are the max over each fine frame pair, so an event visible in either fine
/// frame stays visible at coarse resolution.
pub fn make_segment_targets(
    labels: &[LabelEvent],
    klass: Klass,
    n_frames: usize,
    hop: f64,
) -> Result<SegmentTargets> {
    let fine = |hop: f64| -> Vec<u8> {
        (0..N_FRAMES)
            .map(|k| {
                let t = k as f64 * hop;
                labels
                    .iter()
                    .any(|ev| ev.klass == klass && t >= ev.start && t < ev.end) as u8
            })
            .collect()
    };

    let values = match (n_frames, hop) {
        (N_FRAMES, h) if h == FRAME_HOP_SECONDS => fine(h),
        (N_FRAMES_COARSE, h) if h == 2.0 * FRAME_HOP_SECONDS => {
            let fine = fine(FRAME_HOP_SECONDS);
            (0..N_FRAMES_COARSE)
                .map(|j| fine[2 * j].max(fine[2 * j + 1]))
                .collect()
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "unsupported target shape: {n_frames} frames at hop {hop}"
            )))
        }
    };

    Ok(SegmentTargets { klass, values })
}

//! Minimal RIFF/WAVE reader and writer for the fixed recording format:
//! PCM, 16-bit little-endian, mono, 4000 Hz. Anything else is rejected
//! rather than converted, so downstream shapes stay exact.

use std::path::Path;

use crate::dataset::{AudioClip, DeviceTag, SAMPLE_RATE};
use crate::error::{Error, Result};

fn read_u16(bytes: &[u8], at: usize) -> Result<u16> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| Error::Wav("truncated header".into()))
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Wav("truncated header".into()))
}

/// Decode a RIFF/WAVE byte stream into an [`AudioClip`].
///
/// Samples are scaled to [-1, 1) by dividing the 16-bit integers by 32768.
/// Rejects non-PCM, non-mono, non-16-bit, and non-4000-Hz input.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("not a RIFF/WAVE container".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let chunk_id = &bytes[pos..pos + 4];
        let chunk_len = read_u32(bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(chunk_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Wav("chunk overruns file".into()))?;
        match chunk_id {
            b"fmt " => {
                if chunk_len < 16 {
                    return Err(Error::Wav("fmt chunk too short".into()));
                }
                fmt = Some((
                    read_u16(bytes, body_start)?,
                    read_u16(bytes, body_start + 2)?,
                    read_u32(bytes, body_start + 4)?,
                    read_u16(bytes, body_start + 14)?,
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_end + (chunk_len & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Wav("missing fmt chunk".into()))?;
    if format != 1 {
        return Err(Error::Wav(format!("unsupported encoding {format}, want PCM")));
    }
    if channels != 1 {
        return Err(Error::Wav(format!("unsupported channel count {channels}")));
    }
    if bits != 16 {
        return Err(Error::Wav(format!("unsupported bit depth {bits}")));
    }
    if rate != SAMPLE_RATE {
        return Err(Error::Wav(format!(
            "sample rate mismatch: {rate} Hz, want {SAMPLE_RATE} Hz"
        )));
    }

    let data = data.ok_or_else(|| Error::Wav("missing data chunk".into()))?;
    if data.len() % 2 != 0 {
        return Err(Error::Wav("odd data chunk length for 16-bit samples".into()));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();

    Ok(AudioClip {
        samples,
        sample_rate: SAMPLE_RATE,
        source_id: String::new(),
        device_tag: DeviceTag::Steth,
    })
}

/// Encode samples (clamped to [-1, 1)) as a mono 16-bit 4 kHz WAV byte stream.
pub fn encode_wav(samples: &[f64]) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let q = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Read a WAV file, filling `source_id` from the file stem and the device
/// tag from the `steth_`/`trunc_` prefix convention.
pub fn read_wav_file(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path)?;
    let mut clip = parse_wav(&bytes)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    clip.device_tag = if stem.starts_with("trunc_") {
        DeviceTag::Trunc
    } else {
        DeviceTag::Steth
    };
    clip.source_id = stem;
    Ok(clip)
}

pub fn write_wav_file(path: &Path, samples: &[f64]) -> Result<()> {
    std::fs::write(path, encode_wav(samples))?;
    Ok(())
}

/// Keep the first `target` seconds of a clip.
pub fn truncate_clip(clip: &AudioClip, target: f64) -> Result<AudioClip> {
    let keep = (target * clip.sample_rate as f64).round() as usize;
    if clip.samples.len() < keep {
        return Err(Error::InvalidInput(format!(
            "clip too short: {} samples, need {keep}",
            clip.samples.len()
        )));
    }
    Ok(AudioClip {
        samples: clip.samples[..keep].to_vec(),
        sample_rate: clip.sample_rate,
        source_id: clip.source_id.clone(),
        device_tag: clip.device_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CLIP_SAMPLES;

    fn sine(n: usize, freq: f64) -> Vec<f64> {
        (0..n)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 4000.0).sin())
            .collect()
    }

    #[test]
    fn roundtrip_standard_clip() {
        let samples = sine(CLIP_SAMPLES, 440.0);
        let clip = parse_wav(&encode_wav(&samples)).unwrap();
        assert_eq!(clip.samples.len(), CLIP_SAMPLES);
        assert_eq!(clip.sample_rate, 4000);
        // Quantization error bounded by half a step.
        for (a, b) in clip.samples.iter().zip(&samples) {
            assert!((a - b).abs() <= 0.5 / 32768.0 + 1e-12);
        }
    }

    #[test]
    fn rejects_stereo() {
        let mut bytes = encode_wav(&sine(100, 440.0));
        bytes[22] = 2; // channel count
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported channel count"));
    }

    #[test]
    fn rejects_wrong_sample_rate() {
        let mut bytes = encode_wav(&sine(100, 440.0));
        bytes[24..28].copy_from_slice(&44100u32.to_le_bytes());
        bytes[28..32].copy_from_slice(&(44100u32 * 2).to_le_bytes());
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("sample rate mismatch"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_wav(b"not a wav at all").is_err());
    }

    #[test]
    fn truncates_long_recordings() {
        // 15.8 s recording: the final 0.8 s is cropped out.
        let clip = parse_wav(&encode_wav(&sine(63_200, 100.0))).unwrap();
        let cut = truncate_clip(&clip, 15.0).unwrap();
        assert_eq!(cut.samples.len(), CLIP_SAMPLES);
        assert_eq!(&cut.samples[..], &clip.samples[..CLIP_SAMPLES]);

        // 2-min recording: only the first 15 s is kept.
        let long = parse_wav(&encode_wav(&sine(120 * 4000, 100.0))).unwrap();
        assert_eq!(truncate_clip(&long, 15.0).unwrap().samples.len(), CLIP_SAMPLES);
    }

    #[test]
    fn truncate_is_identity_at_exact_length() {
        let clip = parse_wav(&encode_wav(&sine(CLIP_SAMPLES, 100.0))).unwrap();
        let cut = truncate_clip(&clip, 15.0).unwrap();
        assert_eq!(cut.samples, clip.samples);
    }

    #[test]
    fn truncate_rejects_short_clip() {
        let clip = parse_wav(&encode_wav(&sine(100, 100.0))).unwrap();
        let err = truncate_clip(&clip, 15.0).unwrap_err();
        assert!(err.to_string().contains("clip too short"));
    }
}

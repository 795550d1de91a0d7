//! Label file parsing and the CAS class derivation.
//!
//! Label files are UTF-8 text, one event per line: a class token followed by
//! start and end times. Times may be decimal seconds (`1.250`) or clock
//! format (`00:00:01.250000`); both occur in the wild, so both are accepted.

use crate::dataset::{Klass, LabelEvent, CLIP_SECONDS};
use crate::error::{Error, Result};

fn parse_time(token: &str) -> std::result::Result<f64, String> {
    if token.contains(':') {
        let parts: Vec<&str> = token.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("bad clock time {token:?}"));
        }
        let hours: f64 = parts[0].parse().map_err(|_| format!("bad hours in {token:?}"))?;
        let minutes: f64 = parts[1].parse().map_err(|_| format!("bad minutes in {token:?}"))?;
        let seconds: f64 = parts[2].parse().map_err(|_| format!("bad seconds in {token:?}"))?;
        Ok(hours * 3600.0 + minutes * 60.0 + seconds)
    } else {
        token.parse().map_err(|_| format!("bad time {token:?}"))
    }
}

/// Parse a label file into events. Errors carry the 1-based line number.
pub fn parse_label_file(text: &str) -> Result<Vec<LabelEvent>> {
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Label {
                line: line_no,
                msg: format!("expected `<class> <start> <end>`, got {} fields", fields.len()),
            });
        }
        let klass = Klass::from_token(fields[0]).ok_or_else(|| Error::Label {
            line: line_no,
            msg: format!("unknown class token {:?}", fields[0]),
        })?;
        if klass == Klass::C {
            return Err(Error::Label {
                line: line_no,
                msg: "class C is derived from W/S/R and never appears in label files".into(),
            });
        }
        let start = parse_time(fields[1]).map_err(|msg| Error::Label { line: line_no, msg })?;
        let end = parse_time(fields[2]).map_err(|msg| Error::Label { line: line_no, msg })?;
        if end <= start {
            return Err(Error::Label {
                line: line_no,
                msg: format!("end before start ({end} <= {start})"),
            });
        }
        if !(0.0..=CLIP_SECONDS).contains(&start) || !(0.0..=CLIP_SECONDS).contains(&end) {
            return Err(Error::Label {
                line: line_no,
                msg: format!("time out of [0, {CLIP_SECONDS}]"),
            });
        }
        events.push(LabelEvent { klass, start, end });
    }
    Ok(events)
}

/// Format events in the decimal-seconds layout accepted by
/// [`parse_label_file`]. Microsecond precision round-trips every time value
/// this toolkit produces.
pub fn format_label_file(events: &[LabelEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&format!("{} {:.6} {:.6}\n", ev.klass.token(), ev.start, ev.end));
    }
    out
}

/// Re-emit every W/S/R event as a derived C event, keeping the originals.
/// Intervals are unchanged; derived events are appended in input order.
pub fn derive_cas_labels(labels: &[LabelEvent]) -> Vec<LabelEvent> {
    let mut out = labels.to_vec();
    out.extend(labels.iter().filter(|ev| ev.klass.is_cas_component()).map(|ev| LabelEvent {
        klass: Klass::C,
        start: ev.start,
        end: ev.end,
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_lines() {
        let events = parse_label_file("I 1.250 2.180\n").unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].klass, Klass::I);
        assert_eq!(events[0].start, 1.25);
        assert_eq!(events[0].end, 2.18);
    }

    #[test]
    fn parses_clock_times() {
        let events = parse_label_file("W 00:00:01.250000 00:00:02.500000\n").unwrap();
        assert_eq!(events[0].start, 1.25);
        assert_eq!(events[0].end, 2.5);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_label_file("").unwrap().is_empty());
        assert!(parse_label_file("\n\n  \n").unwrap().is_empty());
    }

    #[test]
    fn rejects_end_before_start() {
        let err = parse_label_file("W 2.0 1.0").unwrap_err();
        assert!(err.to_string().contains("end before start"), "{err}");
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn rejects_unknown_class_with_line_number() {
        let err = parse_label_file("I 1.0 2.0\nQ 3.0 4.0").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("unknown class"));
    }

    #[test]
    fn rejects_raw_cas_class() {
        assert!(parse_label_file("C 1.0 2.0").is_err());
    }

    #[test]
    fn rejects_out_of_range_times() {
        assert!(parse_label_file("I 14.0 15.5").is_err());
        assert!(parse_label_file("I -1.0 2.0").is_err());
    }

    #[test]
    fn cas_derivation_adds_c_events() {
        let labels = vec![
            LabelEvent { klass: Klass::W, start: 1.0, end: 2.0 },
            LabelEvent { klass: Klass::R, start: 3.0, end: 4.0 },
        ];
        let derived = derive_cas_labels(&labels);
        assert_eq!(derived.len(), 4);
        assert_eq!(derived[2].klass, Klass::C);
        assert_eq!((derived[2].start, derived[2].end), (1.0, 2.0));
        assert_eq!(derived[3].klass, Klass::C);
        assert_eq!((derived[3].start, derived[3].end), (3.0, 4.0));
    }

    #[test]
    fn cas_derivation_counts_match_component_totals() {
        // Component counts scaled down from the database-wide 8457 W + 686 S
        // + 4740 R -> 13883 C relationship: |C| == |W| + |S| + |R|.
        let mut labels = Vec::new();
        let (n_w, n_s, n_r) = (84, 6, 47);
        for i in 0..n_w {
            labels.push(LabelEvent { klass: Klass::W, start: 0.01 * i as f64, end: 14.9 });
        }
        for i in 0..n_s {
            labels.push(LabelEvent { klass: Klass::S, start: 0.01 * i as f64, end: 14.9 });
        }
        for i in 0..n_r {
            labels.push(LabelEvent { klass: Klass::R, start: 0.01 * i as f64, end: 14.9 });
        }
        let derived = derive_cas_labels(&labels);
        let n_c = derived.iter().filter(|e| e.klass == Klass::C).count();
        assert_eq!(n_c, n_w + n_s + n_r);
    }

    #[test]
    fn cas_derivation_ignores_breath_phases() {
        let labels = vec![LabelEvent { klass: Klass::I, start: 1.0, end: 2.0 }];
        let derived = derive_cas_labels(&labels);
        assert_eq!(derived.len(), 1);
        assert!(derived.iter().all(|e| e.klass != Klass::C));
    }

    #[test]
    fn format_parse_roundtrip() {
        let labels = vec![
            LabelEvent { klass: Klass::I, start: 0.5, end: 1.43 },
            LabelEvent { klass: Klass::D, start: 2.125, end: 3.0 },
        ];
        assert_eq!(parse_label_file(&format_label_file(&labels)).unwrap(), labels);
    }
}

//! Segment- and event-level scoring.
//!
//! Segment detection is a per-frame binary classification; event detection
//! matches assembled intervals against ground truth by temporal Jaccard
//! index, where a true positive requires JI > 0.5. Event-level true
//! negatives are undefined by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame-level confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentConfusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl SegmentConfusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, other: &SegmentConfusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Event-level confusion counts; `tn` is structurally absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventConfusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl EventConfusion {
    pub fn add(&mut self, other: &EventConfusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// A ratio that may have had a 0/0 numerator and denominator; such values
/// are defined as 0 and flagged rather than poisoning averages silently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub flagged: bool,
}

impl MetricValue {
    fn ratio(num: f64, den: f64) -> MetricValue {
        if den == 0.0 {
            MetricValue { value: 0.0, flagged: true }
        } else {
            MetricValue { value: num / den, flagged: false }
        }
    }
}

/// F1-family metrics. `accuracy` and `specificity` are `None` at event
/// level, where true negatives do not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<MetricValue>,
    pub ppv: MetricValue,
    pub sensitivity: MetricValue,
    pub specificity: Option<MetricValue>,
    pub f1: MetricValue,
}

/// Compare a binary prediction track against targets frame by frame.
pub fn segment_confusion(pred: &[u8], target: &[u8]) -> Result<SegmentConfusion> {
    if pred.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let mut conf = SegmentConfusion::default();
    for (&p, &t) in pred.iter().zip(target) {
        match (p != 0, t != 0) {
            (true, true) => conf.tp += 1,
            (true, false) => conf.fp += 1,
            (false, true) => conf.fn_ += 1,
            (false, false) => conf.tn += 1,
        }
    }
    Ok(conf)
}

/// Temporal Jaccard index of two intervals; 0 when disjoint.
pub fn jaccard(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    if inter == 0.0 {
        return 0.0;
    }
    let union = (a.1.max(b.1) - a.0.min(b.0)).max(f64::MIN_POSITIVE);
    inter / union
}

fn f1_from(ppv: MetricValue, sens: MetricValue) -> MetricValue {
    let den = ppv.value + sens.value;
    if den == 0.0 {
        MetricValue { value: 0.0, flagged: true }
    } else {
        MetricValue {
            value: 2.0 * ppv.value * sens.value / den,
            flagged: ppv.flagged || sens.flagged,
        }
    }
}

/// Metrics from a segment confusion. Any 0/0 ratio becomes a flagged zero.
pub fn segment_metrics(conf: &SegmentConfusion) -> Metrics {
    let (tp, fp, tn, fn_) = (conf.tp as f64, conf.fp as f64, conf.tn as f64, conf.fn_ as f64);
    let ppv = MetricValue::ratio(tp, tp + fp);
    let sensitivity = MetricValue::ratio(tp, tp + fn_);
    Metrics {
        accuracy: Some(MetricValue::ratio(tp + tn, tp + fp + tn + fn_)),
        ppv,
        sensitivity,
        specificity: Some(MetricValue::ratio(tn, tn + fp)),
        f1: f1_from(ppv, sensitivity),
    }
}

/// Metrics from an event confusion; accuracy and specificity are undefined.
pub fn event_metrics(conf: &EventConfusion) -> Metrics {
    let (tp, fp, fn_) = (conf.tp as f64, conf.fp as f64, conf.fn_ as f64);
    let ppv = MetricValue::ratio(tp, tp + fp);
    let sensitivity = MetricValue::ratio(tp, tp + fn_);
    Metrics {
        accuracy: None,
        ppv,
        sensitivity,
        specificity: None,
        f1: f1_from(ppv, sensitivity),
    }
}

fn check_event_list(name: &str, list: &[(f64, f64)]) -> Result<()> {
    for w in list.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::InvalidInput(format!(
                "{name} events must be sorted and non-overlapping"
            )));
        }
    }
    for &(s, e) in list {
        if e <= s {
            return Err(Error::InvalidInput(format!("{name} event with end <= start")));
        }
    }
    Ok(())
}

/// Match predicted events to ground truth one-to-one, greedily by
/// descending Jaccard index.
///
/// Classification of each predicted event: matched with JI > 0.5 is a true
/// positive; positive overlap that never exceeds 0.5 is a false negative;
/// zero overlap with every ground-truth event is a false positive.
/// Ground-truth events untouched by any prediction add one false negative
/// each. Because disjoint intervals allow at most one JI > 0.5 partner per
/// event on either side, the greedy matching attains the maximum possible
/// true-positive count.
pub fn match_events(pred: &[(f64, f64)], gt: &[(f64, f64)]) -> Result<EventConfusion> {
    check_event_list("predicted", pred)?;
    check_event_list("ground-truth", gt)?;

    // All positive-overlap pairs, best JI first. Index order breaks ties so
    // the matching is deterministic.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &p) in pred.iter().enumerate() {
        for (j, &g) in gt.iter().enumerate() {
            let ji = jaccard(p, g);
            if ji > 0.0 {
                pairs.push((ji, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pred_match = vec![None::<f64>; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    for &(ji, i, j) in &pairs {
        if pred_match[i].is_none() && !gt_used[j] {
            pred_match[i] = Some(ji);
            gt_used[j] = true;
        }
    }

    let mut conf = EventConfusion::default();
    for (i, &p) in pred.iter().enumerate() {
        let best_any = gt.iter().map(|&g| jaccard(p, g)).fold(0.0f64, f64::max);
        match pred_match[i] {
            Some(ji) if ji > 0.5 => conf.tp += 1,
            _ if best_any > 0.0 => conf.fn_ += 1,
            _ => conf.fp += 1,
        }
    }
    for &g in gt {
        let touched = pred.iter().any(|&p| jaccard(p, g) > 0.0);
        if !touched {
            conf.fn_ += 1;
        }
    }
    Ok(conf)
}

/// ROC curve and trapezoid AUC over a micro-aggregated score set.
///
/// Operating points sit at every distinct score; tied scores move as a
/// block, which makes the trapezoid AUC equal the Mann–Whitney statistic
/// with ties counted half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<(Vec<(f64, f64)>, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidInput(
            "auc undefined: targets contain a single class".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut curve = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        // Advance over the whole block of tied scores.
        let score = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == score {
            if labels[order[idx]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        curve.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }

    let auc = curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok((curve, auc))
}

/// Mean absolute percentage error of per-recording event counts across a
/// threshold grid. Only recordings with a positive ground-truth count
/// contribute. `n_pred[recording][threshold_index]`.
pub fn mape_curve(
    n_gt: &[usize],
    n_pred: &[Vec<usize>],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if n_gt.len() != n_pred.len() {
        return Err(Error::InvalidInput("count table shape mismatch".into()));
    }
    if n_gt.iter().all(|&g| g == 0) {
        return Err(Error::InvalidInput(
            "mape undefined: no recording has ground-truth events".into(),
        ));
    }
    let mut curve = Vec::with_capacity(thresholds.len());
    for (ti, &theta) in thresholds.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (rec, &gt_count) in n_gt.iter().enumerate() {
            if gt_count == 0 {
                continue;
            }
            let pred_count = *n_pred[rec].get(ti).ok_or_else(|| {
                Error::InvalidInput("missing per-threshold prediction count".into())
            })?;
            sum += (pred_count as f64 - gt_count as f64).abs() / gt_count as f64;
            count += 1;
        }
        curve.push((theta, 100.0 * sum / count as f64));
    }
    Ok(curve)
}

/// The default threshold grid for MAPE curves: 0.05 to 0.95 in 0.05 steps.
pub fn default_threshold_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_confusion_enumeration() {
        let conf = segment_confusion(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(conf, SegmentConfusion { tp: 1, fp: 1, fn_: 1, tn: 1 });
        assert_eq!(conf.total(), 4);
    }

    #[test]
    fn segment_confusion_perfect_and_inverted() {
        let t = [1u8, 0, 1, 1, 0];
        let perfect = segment_confusion(&t, &t).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
        let inverted: Vec<u8> = t.iter().map(|&v| 1 - v).collect();
        let conf = segment_confusion(&inverted, &t).unwrap();
        assert_eq!((conf.tp, conf.tn), (0, 0));
    }

    #[test]
    fn segment_confusion_rejects_length_mismatch() {
        assert!(segment_confusion(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn jaccard_basics() {
        assert_eq!(jaccard((1.0, 2.0), (1.0, 2.0)), 1.0);
        assert_eq!(jaccard((0.0, 1.0), (2.0, 3.0)), 0.0);
        assert!((jaccard((0.0, 2.0), (1.0, 3.0)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn match_events_taxonomy() {
        // JI ~ 0.857 > 0.5: true positive.
        let conf = match_events(&[(1.0, 2.0)], &[(1.1, 2.05)]).unwrap();
        assert_eq!(conf, EventConfusion { tp: 1, fp: 0, fn_: 0 });

        // JI = 0.5 / 2.0 = 0.25: false negative.
        let conf = match_events(&[(1.0, 2.0)], &[(1.5, 2.5)]).unwrap();
        assert_eq!(conf, EventConfusion { tp: 0, fp: 0, fn_: 1 });

        // Disjoint: prediction is FP, untouched ground truth adds an FN.
        let conf = match_events(&[(5.0, 6.0)], &[(1.0, 2.0)]).unwrap();
        assert_eq!(conf, EventConfusion { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn match_events_rejects_overlapping_lists() {
        assert!(match_events(&[(1.0, 3.0), (2.0, 4.0)], &[]).is_err());
        assert!(match_events(&[], &[(2.0, 2.0)]).is_err());
    }

    #[test]
    fn metric_arithmetic() {
        let m = segment_metrics(&SegmentConfusion { tp: 70, fp: 30, fn_: 30, tn: 870 });
        assert!((m.ppv.value - 0.7).abs() < 1e-12);
        assert!((m.sensitivity.value - 0.7).abs() < 1e-12);
        assert!((m.f1.value - 0.7).abs() < 1e-12);
        assert!((m.accuracy.unwrap().value - 0.94).abs() < 1e-12);
    }

    #[test]
    fn metric_corner_cases() {
        let all_one = segment_metrics(&SegmentConfusion { tp: 1, fp: 0, fn_: 0, tn: 1 });
        assert_eq!(all_one.accuracy.unwrap().value, 1.0);
        assert_eq!(all_one.f1.value, 1.0);

        let zero_tp = segment_metrics(&SegmentConfusion { tp: 0, fp: 3, fn_: 4, tn: 0 });
        assert_eq!(zero_tp.ppv.value, 0.0);
        assert_eq!(zero_tp.sensitivity.value, 0.0);
        assert_eq!(zero_tp.f1.value, 0.0);

        let empty = segment_metrics(&SegmentConfusion::default());
        assert!(empty.ppv.flagged && empty.sensitivity.flagged && empty.f1.flagged);
        assert_eq!(empty.ppv.value, 0.0);
    }

    #[test]
    fn event_metrics_have_no_accuracy_or_specificity() {
        let m = event_metrics(&EventConfusion { tp: 3, fp: 1, fn_: 2 });
        assert!(m.accuracy.is_none());
        assert!(m.specificity.is_none());
        assert!((m.ppv.value - 0.75).abs() < 1e-12);
        assert!((m.sensitivity.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_ranking() {
        let (_, auc) = roc_auc(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn auc_three_of_four_pairs() {
        let (_, auc) = roc_auc(&[0.9, 0.6, 0.4, 0.1], &[1, 0, 1, 0]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let (curve, auc) = roc_auc(&[0.5, 0.5, 0.5, 0.5], &[1, 0, 1, 0]).unwrap();
        assert!((auc - 0.5).abs() < 1e-12);
        assert_eq!(curve.len(), 2);
    }

    #[test]
    fn auc_single_class_is_flagged() {
        assert!(roc_auc(&[0.5, 0.6], &[1, 1]).is_err());
    }

    #[test]
    fn mape_examples() {
        let thresholds = [0.5];
        let curve = mape_curve(&[4, 5], &[vec![4], vec![5]], &thresholds).unwrap();
        assert_eq!(curve[0].1, 0.0);

        let curve = mape_curve(&[4, 5], &[vec![5], vec![4]], &thresholds).unwrap();
        assert!((curve[0].1 - 22.5).abs() < 1e-12);

        let curve = mape_curve(&[4, 5], &[vec![0], vec![0]], &thresholds).unwrap();
        assert_eq!(curve[0].1, 100.0);
    }

    #[test]
    fn mape_skips_empty_recordings_and_flags_all_empty() {
        let curve = mape_curve(&[0, 5], &[vec![9], vec![5]], &[0.5]).unwrap();
        assert_eq!(curve[0].1, 0.0);
        assert!(mape_curve(&[0, 0], &[vec![1], vec![2]], &[0.5]).is_err());
    }

    #[test]
    fn threshold_grid_shape() {
        let grid = default_threshold_grid();
        assert_eq!(grid.len(), 19);
        assert!((grid[0] - 0.05).abs() < 1e-12);
        assert!((grid[18] - 0.95).abs() < 1e-12);
    }
}

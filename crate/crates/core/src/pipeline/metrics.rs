use std::collections::HashSet;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{RadError, Result};
use crate::model::{ScoreRecord, Verdict};

use super::Label;

/// A maximal run of ATTACK rows, as row indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentDelay {
    pub start: usize,
    pub end: usize,
    /// Rows from the segment start to the first ANOMALY inside it; `None`
    /// (serialized as `"MISSED"`) if the segment was never flagged.
    #[serde(serialize_with = "delay_or_missed")]
    pub delay: Option<usize>,
}

fn delay_or_missed<S: Serializer>(v: &Option<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(d) => s.serialize_u64(*d as u64),
        None => s.serialize_str("MISSED"),
    }
}

/// Row-level detection quality. An empty denominator counts as perfect:
/// precision is 1 when nothing was flagged, recall is 1 when nothing was
/// attacked. F1 is 0 when precision and recall are both 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Fraction of NORMAL rows flagged ANOMALY.
    pub false_alarm_rate: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub segments: Vec<SegmentDelay>,
}

/// Maximal ATTACK runs in `labels`, indexed by position.
pub fn attack_segments(labels: &[Label]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, l) in labels.iter().enumerate() {
        match (l, start) {
            (Label::Attack, None) => start = Some(i),
            (Label::Normal, Some(s)) => {
                out.push(Segment { start: s, end: i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Segment { start: s, end: labels.len() });
    }
    out
}

/// Scores verdicts against ground truth. `labels[k]` belongs to
/// `records[k]`; rows are put in `row_index` order before attack segments are
/// formed, so any consistent reordering of the two slices gives the same
/// result.
pub fn evaluate(records: &[ScoreRecord], labels: &[Label]) -> Result<DetectionMetrics> {
    if records.len() != labels.len() {
        return Err(RadError::LengthMismatch {
            what: "labels",
            expected: records.len(),
            got: labels.len(),
        });
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.row_index) {
            return Err(RadError::DuplicateRow(r.row_index));
        }
    }
    let mut rows: Vec<(usize, bool, Label)> = records
        .iter()
        .zip(labels)
        .map(|(r, l)| (r.row_index, r.verdict == Verdict::Anomaly, *l))
        .collect();
    rows.sort_unstable_by_key(|r| r.0);

    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for &(_, flagged, label) in &rows {
        match (label, flagged) {
            (Label::Attack, true) => tp += 1,
            (Label::Attack, false) => fn_ += 1,
            (Label::Normal, true) => fp += 1,
            (Label::Normal, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let false_alarm_rate = if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 };

    let ordered: Vec<Label> = rows.iter().map(|r| r.2).collect();
    let segments = attack_segments(&ordered)
        .into_iter()
        .map(|seg| SegmentDelay {
            start: rows[seg.start].0,
            end: rows[seg.end - 1].0 + 1,
            delay: rows[seg.start..seg.end].iter().position(|r| r.1),
        })
        .collect();

    Ok(DetectionMetrics {
        precision,
        recall,
        f1,
        false_alarm_rate,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, anomaly: bool) -> ScoreRecord {
        ScoreRecord {
            row_index: i,
            score: if anomaly { 2.0 } else { 0.5 },
            normalized: if anomaly { 2.0 } else { 0.5 },
            verdict: if anomaly { Verdict::Anomaly } else { Verdict::Normal },
            residual_norm: 0.0,
        }
    }

    fn labels_with_attack(n: usize, start: usize, end: usize) -> Vec<Label> {
        (0..n)
            .map(|i| if (start..end).contains(&i) { Label::Attack } else { Label::Normal })
            .collect()
    }

    #[test]
    fn perfect_verdicts() {
        let labels = labels_with_attack(50, 10, 20);
        let records: Vec<_> = labels.iter().enumerate().map(|(i, l)| rec(i, *l == Label::Attack)).collect();
        let m = evaluate(&records, &labels).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.segments.len(), 1);
        assert_eq!(m.segments[0].delay, Some(0));
        assert_eq!(m.false_alarm_rate, 0.0);
    }

    #[test]
    fn all_normal_misses_attack() {
        let labels = labels_with_attack(30, 5, 12);
        let records: Vec<_> = (0..30).map(|i| rec(i, false)).collect();
        let m = evaluate(&records, &labels).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.segments[0].delay, None);
        let json = serde_json::to_string(&m.segments[0]).unwrap();
        assert_eq!(json, r#"{"start":5,"end":12,"delay":"MISSED"}"#);
    }

    #[test]
    fn delayed_detection() {
        let labels = labels_with_attack(300, 100, 200);
        let records: Vec<_> = (0..300).map(|i| rec(i, (105..200).contains(&i))).collect();
        let m = evaluate(&records, &labels).unwrap();
        assert_eq!(m.segments[0].delay, Some(5));
        assert_eq!(m.precision, 1.0);
        assert!((m.recall - 0.95).abs() < 1e-12);
        assert!((m.f1 - 2.0 * 0.95 / 1.95).abs() < 1e-12);
    }

    #[test]
    fn segments_from_labels() {
        use Label::*;
        let segs = attack_segments(&[Attack, Attack, Normal, Attack, Normal, Normal, Attack]);
        assert_eq!(
            segs,
            vec![Segment { start: 0, end: 2 }, Segment { start: 3, end: 4 }, Segment { start: 6, end: 7 }]
        );
    }

    #[test]
    fn errors() {
        assert!(evaluate(&[rec(0, true)], &[]).is_err());
        assert!(matches!(
            evaluate(&[rec(0, true), rec(0, false)], &[Label::Normal, Label::Normal]),
            Err(RadError::DuplicateRow(0))
        ));
    }
}

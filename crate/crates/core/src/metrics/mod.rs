//! Classification metrics: thresholded accuracy, ROC curves and AUC.

mod svg;

pub use svg::render_roc_svg;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metric input is empty")]
    EmptyInput,
    #[error("probability vector length {probs} does not match label length {labels}")]
    LengthMismatch { probs: usize, labels: usize },
    #[error("both classes must be present to compute a ROC curve")]
    SingleClass,
}

/// One ROC operating point: everything with a score >= `threshold` is
/// classified positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// An ROC curve from (0,0) to (1,1) with fpr and tpr non-decreasing.
/// Tied scores collapse into a single point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
    pub auc: f64,
    pub n: usize,
    pub positives: usize,
}

/// Fraction of predictions on the right side of `threshold`. Scores equal
/// to the threshold classify positive.
pub fn accuracy(probs: &[f64], labels: &[u8], threshold: f64) -> Result<f64, MetricsError> {
    check_lengths(probs, labels)?;
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| (**p >= threshold) == (y == 1))
        .count();
    Ok(hits as f64 / probs.len() as f64)
}

/// Sweep thresholds over the unique scores in descending order (plus a
/// sentinel above the maximum) and record (fpr, tpr) at each.
pub fn roc_curve(probs: &[f64], labels: &[u8]) -> Result<RocCurve, MetricsError> {
    check_lengths(probs, labels)?;
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).expect("finite scores"));

    let max = probs[order[0]];
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: max + 1.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = probs[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && probs[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    Ok(RocCurve { points })
}

/// Area under the curve by the trapezoidal rule. Because tied scores
/// collapse to single curve points, this equals the pairwise statistic
/// (concordant + half of ties) / (positives * negatives).
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

pub fn auc_from_scores(probs: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    Ok(auc(&roc_curve(probs, labels)?))
}

impl RocCurve {
    /// Serialize as CSV with header `fpr,tpr,threshold`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["fpr", "tpr", "threshold"])?;
        for point in &self.points {
            csv.write_record(&[
                point.fpr.to_string(),
                point.tpr.to_string(),
                point.threshold.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn check_lengths(probs: &[f64], labels: &[u8]) -> Result<(), MetricsError> {
    if probs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if probs.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { probs: probs.len(), labels: labels.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_thresholding() {
        assert_eq!(accuracy(&[0.6, 0.4], &[1, 0], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.6, 0.4], &[0, 1], 0.5).unwrap(), 0.0);
        // Ties at the threshold classify positive.
        let acc = accuracy(&[0.5, 0.5, 0.5, 0.5], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn accuracy_rejects_empty() {
        assert_eq!(accuracy(&[], &[], 0.5).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn roc_perfect_ranking() {
        let curve = roc_curve(&[0.9, 0.1], &[1, 0]).unwrap();
        let xy: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&curve), 1.0);
    }

    #[test]
    fn roc_all_ties_is_diagonal() {
        let curve = roc_curve(&[0.3, 0.3, 0.3, 0.3], &[1, 0, 1, 0]).unwrap();
        let xy: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&curve), 0.5);
    }

    #[test]
    fn roc_hand_enumerated_staircase() {
        let probs = [0.9, 0.8, 0.4, 0.35];
        let labels = [1, 0, 0, 1];
        let curve = roc_curve(&probs, &labels).unwrap();
        let xy: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(
            xy,
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (1.0, 0.5), (1.0, 1.0)]
        );
        assert_eq!(curve.points[0].threshold, 0.9 + 1.0);
        // Two concordant pairs out of four.
        assert!((auc(&curve) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc_from_scores(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap(), 1.0);
        assert_eq!(auc_from_scores(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn roc_requires_both_classes() {
        assert_eq!(
            roc_curve(&[0.4, 0.6], &[1, 1]).unwrap_err(),
            MetricsError::SingleClass
        );
    }

    #[test]
    fn roc_csv_has_expected_header() {
        let curve = roc_curve(&[0.9, 0.1], &[1, 0]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("fpr,tpr,threshold\n"));
        assert_eq!(text.lines().count(), 4);
    }
}

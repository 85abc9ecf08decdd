//! ROC analysis.
//!
//! AUROC is computed from the Mann-Whitney U statistic with mid-ranks for
//! tied scores, i.e. `P(s_anomalous > s_normal) + ½·P(s_anomalous = s_normal)`.
//! Ties matter here: reconstruction scores of in-span queries collapse to 0.

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("score is NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUROC needs both classes (got {pos} anomalous, {neg} normal)"
        )));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve; `labels[i]` is true for anomalous samples.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 1-based mid-ranks of the anomalous samples.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid_rank * tied_pos as f64;
        i = j;
    }
    let pos_f = pos as f64;
    let u = rank_sum - pos_f * (pos_f + 1.0) / 2.0;
    Ok(u / (pos_f * neg as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Descending; the first entry is `+inf` (nothing flagged).
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under the `(fpr, tpr)` points.
    pub fn trapezoid_area(&self) -> f64 {
        self.fpr
            .windows(2)
            .zip(self.tpr.windows(2))
            .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
            .sum()
    }
}

/// ROC points at every distinct score, flagging samples with `score >= threshold`.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(s);
        fpr.push(fp as f64 / neg as f64);
        tpr.push(tp as f64 / pos as f64);
    }
    Ok(RocCurve {
        thresholds,
        fpr,
        tpr,
        auc: auroc(scores, labels)?,
    })
}

use serde::{Deserialize, Serialize};

use super::EvalError;

fn class_counts(scores: &[f64], positives: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != positives.len() {
        return Err(EvalError::Dimension {
            what: "scores vs labels",
            expected: scores.len(),
            actual: positives.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NonFinite("score is NaN".into()));
    }
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    Ok((n_pos, n_neg))
}

fn sorted_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// Probability that a positive outscores a negative, ties counting ½.
///
/// Computed exactly as `2U / (2 · n_pos · n_neg)` with integer `2U`.
pub fn auroc(scores: &[f64], positives: &[bool]) -> Result<f64, EvalError> {
    let (n_pos, n_neg) = class_counts(scores, positives)?;
    let order = sorted_order(scores);
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if positives[order[j]] {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        twice_u += 2 * p * neg_below + p * q;
        neg_below += q;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos as u128 * n_neg as u128) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Maximize `sensitivity + specificity − 1` over the observed scores.
    Youden,
    Fixed(f64),
}

/// Rates as fractions in `[0, 1]`; the decision is `AD iff score > threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
}

/// Under [`ThresholdRule::Youden`] the candidate thresholds are the distinct
/// observed scores; ties in J go to the higher sensitivity.
pub fn sensitivity_specificity(
    scores: &[f64],
    positives: &[bool],
    rule: ThresholdRule,
) -> Result<ThresholdMetrics, EvalError> {
    let (n_pos, n_neg) = class_counts(scores, positives)?;
    let rates = |tp: usize, tn: usize| (tp as f64 / n_pos as f64, tn as f64 / n_neg as f64);
    match rule {
        ThresholdRule::Fixed(t) => {
            let tp = (0..scores.len()).filter(|&i| positives[i] && scores[i] > t).count();
            let tn = (0..scores.len()).filter(|&i| !positives[i] && scores[i] <= t).count();
            let (sensitivity, specificity) = rates(tp, tn);
            Ok(ThresholdMetrics {
                sensitivity,
                specificity,
                threshold: t,
            })
        }
        ThresholdRule::Youden => {
            let order = sorted_order(scores);
            // Sweep thresholds upward; at t = score of group end, everything
            // at or below t is called negative.
            let (mut tn, mut fn_) = (0usize, 0usize);
            let mut best: Option<(usize, usize, f64)> = None;
            let mut i = 0;
            while i < order.len() {
                let t = scores[order[i]];
                while i < order.len() && scores[order[i]] == t {
                    if positives[order[i]] {
                        fn_ += 1;
                    } else {
                        tn += 1;
                    }
                    i += 1;
                }
                let tp = n_pos - fn_;
                // Compare J = tp/P + tn/N - 1 exactly via cross-multiplication.
                let better = match best {
                    None => true,
                    Some((btp, btn, _)) => {
                        let j_new = tp * n_neg + tn * n_pos;
                        let j_old = btp * n_neg + btn * n_pos;
                        j_new > j_old || (j_new == j_old && tp > btp)
                    }
                };
                if better {
                    best = Some((tp, tn, t));
                }
            }
            let (tp, tn, threshold) = best.expect("non-empty scores");
            let (sensitivity, specificity) = rates(tp, tn);
            Ok(ThresholdMetrics {
                sensitivity,
                specificity,
                threshold,
            })
        }
    }
}

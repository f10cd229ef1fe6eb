use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::RngStream;

use super::{auroc, sensitivity_specificity, DeviationReport, EvalError, ThresholdRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub n_replicates: usize,
    /// When false every replicate is the unresampled test set.
    pub resample: bool,
    pub threshold_rule: ThresholdRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_replicates: 30,
            resample: true,
            threshold_rule: ThresholdRule::Youden,
        }
    }
}

/// Mean and sample standard deviation, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    pub std: f64,
}

impl MetricStat {
    pub fn from_fractions(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let pct: Vec<f64> = values.iter().map(|v| 100.0 * v).collect();
        let mean = pct.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (pct.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl fmt::Display for MetricStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// Point metrics of one replicate, as fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub auroc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub auroc: MetricStat,
    pub sensitivity: MetricStat,
    pub specificity: MetricStat,
    /// Threshold chosen on the full, unresampled test set.
    pub threshold: f64,
    pub replicates: usize,
}

impl EvalSummary {
    pub fn from_replicates(reps: &[ReplicateMetrics], threshold: f64) -> Self {
        let col = |f: fn(&ReplicateMetrics) -> f64| reps.iter().map(f).collect::<Vec<_>>();
        Self {
            auroc: MetricStat::from_fractions(&col(|r| r.auroc)),
            sensitivity: MetricStat::from_fractions(&col(|r| r.sensitivity)),
            specificity: MetricStat::from_fractions(&col(|r| r.specificity)),
            threshold,
            replicates: reps.len(),
        }
    }
}

pub fn point_metrics(
    scores: &[f64],
    positives: &[bool],
    rule: ThresholdRule,
) -> Result<ReplicateMetrics, EvalError> {
    let t = sensitivity_specificity(scores, positives, rule)?;
    Ok(ReplicateMetrics {
        auroc: auroc(scores, positives)?,
        sensitivity: t.sensitivity,
        specificity: t.specificity,
        threshold: t.threshold,
    })
}

/// Per-replicate metrics over class-stratified resamples of the scores.
/// Each replicate draws from its own stream seeded from `rng`, so results do
/// not depend on how replicates are scheduled across threads.
pub fn bootstrap_replicates(
    scores: &[f64],
    positives: &[bool],
    config: &BootstrapConfig,
    rng: &mut RngStream,
) -> Result<Vec<ReplicateMetrics>, EvalError> {
    if config.n_replicates == 0 {
        return Err(EvalError::Invalid("n_replicates must be at least 1".into()));
    }
    let pos: Vec<usize> = (0..scores.len()).filter(|&i| positives[i]).collect();
    let neg: Vec<usize> = (0..scores.len()).filter(|&i| !positives[i]).collect();
    point_metrics(scores, positives, config.threshold_rule)?;
    let stream = rng.stream();
    let seeds: Vec<u64> = (0..config.n_replicates).map(|_| rng.next_u64()).collect();
    seeds
        .into_par_iter()
        .map(|seed| {
            if !config.resample {
                return point_metrics(scores, positives, config.threshold_rule);
            }
            let mut r = RngStream::with_stream(seed, stream);
            let mut s = Vec::with_capacity(scores.len());
            let mut l = Vec::with_capacity(scores.len());
            for (group, label) in [(&pos, true), (&neg, false)] {
                for _ in 0..group.len() {
                    s.push(scores[group[r.below(group.len())]]);
                    l.push(label);
                }
            }
            point_metrics(&s, &l, config.threshold_rule)
        })
        .collect()
}

/// Bootstrapped AUROC, sensitivity and specificity of a deviation report,
/// scoring subjects by `D_MSE`. A report in which every subject scores the
/// same carries no ranking and is rejected.
pub fn bootstrap_eval(
    report: &DeviationReport,
    config: &BootstrapConfig,
    rng: &mut RngStream,
) -> Result<EvalSummary, EvalError> {
    let positives = report.positives();
    if let Some(&first) = report.d_mse.first() {
        if report.d_mse.iter().all(|&d| d == first) && positives.iter().any(|&p| p) {
            return Err(EvalError::DegenerateScores);
        }
    }
    let full = point_metrics(&report.d_mse, &positives, config.threshold_rule)?;
    let reps = bootstrap_replicates(&report.d_mse, &positives, config, rng)?;
    Ok(EvalSummary::from_replicates(&reps, full.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::nn::Matrix;

    fn report() -> DeviationReport {
        let d: Vec<f64> = (0..60).map(|i| ((i * 37) % 23) as f64 + if i < 20 { 6.0 } else { 0.0 }).collect();
        DeviationReport {
            subject_ids: (0..60).map(|i| format!("s{i}")).collect(),
            labels: (0..60).map(|i| if i < 20 { Label::Ad } else { Label::Hc }).collect(),
            residuals: Matrix::from_vec(60, 1, d.clone()).unwrap(),
            d_mse: d,
            region_names: vec!["r".into()],
        }
    }

    #[test]
    fn unresampled_single_replicate_equals_point_metrics() {
        let r = report();
        let cfg = BootstrapConfig {
            n_replicates: 1,
            resample: false,
            ..Default::default()
        };
        let s = bootstrap_eval(&r, &cfg, &mut RngStream::new(0)).unwrap();
        let p = point_metrics(&r.d_mse, &r.positives(), ThresholdRule::Youden).unwrap();
        assert_eq!(s.auroc.mean, 100.0 * p.auroc);
        assert_eq!(s.sensitivity.mean, 100.0 * p.sensitivity);
        assert_eq!((s.auroc.std, s.sensitivity.std, s.specificity.std), (0.0, 0.0, 0.0));
    }

    #[test]
    fn forced_identical_replicates_have_zero_std() {
        let cfg = BootstrapConfig {
            resample: false,
            ..Default::default()
        };
        let s = bootstrap_eval(&report(), &cfg, &mut RngStream::new(0)).unwrap();
        assert_eq!(s.replicates, 30);
        assert_eq!(s.auroc.std, 0.0);
    }

    #[test]
    fn default_is_thirty_seeded_replicates() {
        let r = report();
        let cfg = BootstrapConfig::default();
        let a = bootstrap_eval(&r, &cfg, &mut RngStream::new(5)).unwrap();
        let b = bootstrap_eval(&r, &cfg, &mut RngStream::new(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates, 30);
        assert!(a.auroc.std > 0.0);
        let reps = bootstrap_replicates(&r.d_mse, &r.positives(), &cfg, &mut RngStream::new(5)).unwrap();
        let lo = reps.iter().map(|m| 100.0 * m.auroc).fold(f64::INFINITY, f64::min);
        let hi = reps.iter().map(|m| 100.0 * m.auroc).fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= a.auroc.mean && a.auroc.mean <= hi);
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let mut r = report();
        r.d_mse.iter_mut().for_each(|d| *d = 0.0);
        let err = bootstrap_eval(&r, &BootstrapConfig::default(), &mut RngStream::new(0)).unwrap_err();
        assert!(err.to_string().contains("degenerate scores"));
    }

    #[test]
    fn renders_two_decimals() {
        let s = MetricStat {
            mean: 68.5649,
            std: 3.9751,
        };
        assert_eq!(s.to_string(), "68.56 ± 3.98");
    }
}

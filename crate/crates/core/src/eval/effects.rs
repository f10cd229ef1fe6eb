use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::RngStream;

use super::{DeviationReport, EvalError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEffect {
    pub region: usize,
    pub name: String,
    /// Cohen's d of AD minus HC squared residuals.
    pub d: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The interval excludes zero.
    pub significant: bool,
}

/// Column moments of a `subjects × regions` residual matrix restricted to
/// `rows`.
fn moments(report: &DeviationReport, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let r = report.n_regions();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; r];
    for &i in rows {
        mean.iter_mut().zip(report.residuals.row(i)).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut ss = vec![0.0; r];
    for &i in rows {
        for ((s, v), m) in ss.iter_mut().zip(report.residuals.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    (mean, ss)
}

/// Cohen's d per region with a pooled denominator; `None` where the pooled
/// std is zero.
fn cohens_d(
    hc: &DeviationReport,
    hc_rows: &[usize],
    ad: &DeviationReport,
    ad_rows: &[usize],
) -> Vec<Option<f64>> {
    let (m0, ss0) = moments(hc, hc_rows);
    let (m1, ss1) = moments(ad, ad_rows);
    let dof = (hc_rows.len() + ad_rows.len() - 2) as f64;
    (0..m0.len())
        .map(|j| {
            let pooled = ((ss0[j] + ss1[j]) / dof).sqrt();
            let scale = m0[j].abs().max(m1[j].abs()).max(f64::MIN_POSITIVE);
            (pooled > 1e-12 * scale).then(|| (m1[j] - m0[j]) / pooled)
        })
        .collect()
}

/// Type-7 quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-region effect sizes of AD versus HC deviations with percentile
/// bootstrap 95% intervals over subjects (each group resampled separately,
/// all regions of a subject kept together). Replicates in which a region's
/// pooled std vanishes are left out of that region's interval. The interval
/// is widened if needed so that it always contains the point estimate.
pub fn region_effect_sizes(
    report_hc: &DeviationReport,
    report_ad: &DeviationReport,
    n_boot: usize,
    rng: &mut RngStream,
) -> Result<Vec<RegionEffect>, EvalError> {
    if report_hc.len() < 2 || report_ad.len() < 2 {
        return Err(EvalError::Invalid(format!(
            "effect sizes need at least 2 subjects per group, got {} HC and {} AD",
            report_hc.len(),
            report_ad.len()
        )));
    }
    if report_hc.n_regions() != report_ad.n_regions() {
        return Err(EvalError::Dimension {
            what: "region count",
            expected: report_hc.n_regions(),
            actual: report_ad.n_regions(),
        });
    }
    if n_boot == 0 {
        return Err(EvalError::Invalid("n_boot must be at least 1".into()));
    }
    let all_hc: Vec<usize> = (0..report_hc.len()).collect();
    let all_ad: Vec<usize> = (0..report_ad.len()).collect();
    let point = cohens_d(report_hc, &all_hc, report_ad, &all_ad);
    if let Some(j) = point.iter().position(Option::is_none) {
        return Err(EvalError::ZeroPooledStd(report_hc.region_names[j].clone()));
    }

    let stream = rng.stream();
    let seeds: Vec<u64> = (0..n_boot).map(|_| rng.next_u64()).collect();
    let draws: Vec<Vec<Option<f64>>> = seeds
        .into_par_iter()
        .map(|seed| {
            let mut r = RngStream::with_stream(seed, stream);
            let hc: Vec<usize> = (0..all_hc.len()).map(|_| r.below(all_hc.len())).collect();
            let ad: Vec<usize> = (0..all_ad.len()).map(|_| r.below(all_ad.len())).collect();
            cohens_d(report_hc, &hc, report_ad, &ad)
        })
        .collect();

    Ok(point
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            let d = d.expect("checked above");
            let mut boot: Vec<f64> = draws.iter().filter_map(|b| b[j]).collect();
            boot.sort_by(f64::total_cmp);
            let (lo, hi) = if boot.is_empty() {
                (d, d)
            } else {
                (quantile(&boot, 0.025), quantile(&boot, 0.975))
            };
            let (ci_low, ci_high) = (lo.min(d), hi.max(d));
            RegionEffect {
                region: j,
                name: report_hc.region_names[j].clone(),
                d,
                ci_low,
                ci_high,
                significant: !(ci_low <= 0.0 && 0.0 <= ci_high),
            }
        })
        .collect())
}

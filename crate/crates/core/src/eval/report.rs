//! CSV emitters for deviations, region effects, regional maps and sweeps.
//! Floats use shortest round-trip formatting, so no precision is lost.

use std::io::Write;

use super::{DeviationReport, EvalError, EvalSummary, ParamCell, RegionEffect, SizeRow};

const METRIC_COLUMNS: [&str; 6] = [
    "auroc_mean",
    "auroc_std",
    "sens_mean",
    "sens_std",
    "spec_mean",
    "spec_std",
];

fn metric_fields(s: &EvalSummary) -> [String; 6] {
    [
        s.auroc.mean,
        s.auroc.std,
        s.sensitivity.mean,
        s.sensitivity.std,
        s.specificity.mean,
        s.specificity.std,
    ]
    .map(|v| v.to_string())
}

/// `subject_id, label, d_mse, <region residuals…>`
pub fn write_deviations_csv<W: Write>(report: &DeviationReport, writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["subject_id".to_string(), "label".into(), "d_mse".into()];
    header.extend(report.region_names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..report.len() {
        let mut rec = vec![
            report.subject_ids[i].clone(),
            report.labels[i].to_string(),
            report.d_mse[i].to_string(),
        ];
        rec.extend(report.residuals.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `region, d, ci_low, ci_high, significant`
pub fn write_effects_csv<W: Write>(effects: &[RegionEffect], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["region", "d", "ci_low", "ci_high", "significant"])?;
    for e in effects {
        w.write_record([
            e.name.clone(),
            e.d.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            e.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Regional deviation map: mean squared residual per group, their
/// difference, and the effect size.
pub fn write_regions_csv<W: Write>(
    hc: &DeviationReport,
    ad: &DeviationReport,
    effects: &[RegionEffect],
    writer: W,
) -> Result<(), EvalError> {
    let (m0, m1) = (hc.region_means(), ad.region_means());
    if m0.len() != effects.len() || m1.len() != effects.len() {
        return Err(EvalError::Dimension {
            what: "regions vs effects",
            expected: m0.len(),
            actual: effects.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["region", "hc_mean_deviation", "ad_mean_deviation", "difference", "d", "significant"])?;
    for (j, e) in effects.iter().enumerate() {
        w.write_record([
            e.name.clone(),
            m0[j].to_string(),
            m1[j].to_string(),
            (m1[j] - m0[j]).to_string(),
            e.d.to_string(),
            e.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha, gamma, auroc_mean, …, spec_std`
pub fn write_param_sweep_csv<W: Write>(cells: &[ParamCell], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["alpha", "gamma"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header)?;
    for c in cells {
        let mut rec = vec![c.alpha.to_string(), c.gamma.to_string()];
        rec.extend(metric_fields(&c.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `size, auroc_mean, …, spec_std`
pub fn write_size_sweep_csv<W: Write>(rows: &[SizeRow], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["size"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.size.to_string()];
        rec.extend(metric_fields(&r.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::eval::MetricStat;
    use crate::nn::Matrix;

    fn report() -> DeviationReport {
        DeviationReport {
            subject_ids: vec!["a".into(), "b".into()],
            labels: vec![Label::Hc, Label::Ad],
            d_mse: vec![0.5, 0.1 + 0.2],
            residuals: Matrix::from_rows(&[vec![0.25, 0.75], vec![0.1, 0.7]]).unwrap(),
            region_names: vec!["roi_0".into(), "roi_1".into()],
        }
    }

    #[test]
    fn deviations_layout_and_precision() {
        let mut out = Vec::new();
        write_deviations_csv(&report(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "subject_id,label,d_mse,roi_0,roi_1");
        assert_eq!(lines[2], "b,AD,0.30000000000000004,0.1,0.7");
    }

    #[test]
    fn sweep_headers() {
        let s = EvalSummary {
            auroc: MetricStat { mean: 70.0, std: 1.5 },
            sensitivity: MetricStat { mean: 60.0, std: 2.0 },
            specificity: MetricStat { mean: 80.0, std: 3.0 },
            threshold: 0.4,
            replicates: 30,
        };
        let mut out = Vec::new();
        write_size_sweep_csv(&[SizeRow { size: 200, summary: s.clone() }], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "size,auroc_mean,auroc_std,sens_mean,sens_std,spec_mean,spec_std\n200,70,1.5,60,2,80,3\n"
        );
        let mut out = Vec::new();
        write_param_sweep_csv(&[ParamCell { alpha: 0.2, gamma: 15.0, summary: s }], &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("alpha,gamma,auroc_mean"));
    }
}

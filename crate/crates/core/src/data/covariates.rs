use serde::{Deserialize, Serialize};

use super::{DataError, Demographics, Gender};

pub const AGE_BINS: usize = 10;
pub const GENDER_BINS: usize = 2;
pub const ICV_BINS: usize = 10;
pub const COVARIATE_DIM: usize = AGE_BINS + GENDER_BINS + ICV_BINS;

/// Decade edges over [40, 140); ages below 50 fall in bin 0 and ages at or
/// above 130 in bin 9.
pub const DEFAULT_AGE_EDGES: [f64; AGE_BINS - 1] =
    [50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 130.0];

/// One-hot layout: `[age bin (10) | gender F, M (2) | ICV decile (10)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateEncoder {
    pub age_edges: Vec<f64>,
    pub icv_cuts: Vec<f64>,
}

impl CovariateEncoder {
    /// Default age edges and ICV deciles estimated from `icvs`.
    pub fn fit(icvs: &[f64]) -> Result<Self, DataError> {
        Ok(Self {
            age_edges: DEFAULT_AGE_EDGES.to_vec(),
            icv_cuts: icv_deciles(icvs)?,
        })
    }

    pub fn encode(&self, d: &Demographics) -> Result<Vec<f64>, DataError> {
        encode_with_edges(d.age, d.gender, d.icv, &self.age_edges, &self.icv_cuts)
    }
}

/// Nine ICV cut points at the 10th … 90th percentiles (linear interpolation
/// between order statistics).
pub fn icv_deciles(icvs: &[f64]) -> Result<Vec<f64>, DataError> {
    if icvs.len() < 2 {
        return Err(DataError::TooFewSamples(format!(
            "ICV deciles need at least 2 values, got {}",
            icvs.len()
        )));
    }
    if icvs.iter().any(|v| !v.is_finite()) {
        return Err(DataError::InvalidCovariate("non-finite ICV".into()));
    }
    let mut sorted = icvs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let cuts: Vec<f64> = (1..ICV_BINS)
        .map(|k| {
            let h = (n - 1) as f64 * k as f64 / ICV_BINS as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect();
    Ok(cuts)
}

/// Number of edges at or below `value`, i.e. the bin index.
fn bin_of(value: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| e <= value).count()
}

fn check_increasing(name: &str, edges: &[f64], expected: usize) -> Result<(), DataError> {
    if edges.len() != expected {
        return Err(DataError::InvalidCovariate(format!(
            "{name} needs {expected} cut points, got {}",
            edges.len()
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DataError::InvalidCovariate(format!(
            "{name} cut points must be finite and strictly increasing"
        )));
    }
    Ok(())
}

fn encode_with_edges(
    age: f64,
    gender: Gender,
    icv: f64,
    age_edges: &[f64],
    icv_cuts: &[f64],
) -> Result<Vec<f64>, DataError> {
    if !age.is_finite() || !icv.is_finite() {
        return Err(DataError::InvalidCovariate("age and ICV must be finite".into()));
    }
    if age < 0.0 {
        return Err(DataError::InvalidCovariate(format!("age must be >= 0, got {age}")));
    }
    if icv <= 0.0 {
        return Err(DataError::InvalidCovariate(format!("ICV must be > 0, got {icv}")));
    }
    check_increasing("age", age_edges, AGE_BINS - 1)?;
    check_increasing("ICV", icv_cuts, ICV_BINS - 1)?;
    let mut v = vec![0.0; COVARIATE_DIM];
    v[bin_of(age, age_edges)] = 1.0;
    v[AGE_BINS + gender as usize] = 1.0;
    v[AGE_BINS + GENDER_BINS + bin_of(icv, icv_cuts)] = 1.0;
    Ok(v)
}

/// The 22-dimensional covariate vector for one subject using the default
/// decade age bins and the supplied nine ICV decile cut points.
pub fn encode_covariates(
    age: f64,
    gender: Gender,
    icv: f64,
    icv_deciles: &[f64],
) -> Result<Vec<f64>, DataError> {
    encode_with_edges(age, gender, icv, &DEFAULT_AGE_EDGES, icv_deciles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cuts() -> Vec<f64> {
        (1..10).map(|k| 1000.0 + 100.0 * k as f64).collect()
    }

    #[test]
    fn hand_case_positions() {
        // Training ICVs 1000..=1999 step 1: the 35th percentile is ~1350,
        // which sits between the 30th and 40th percentile cut points.
        let train: Vec<f64> = (0..1000).map(|i| 1000.0 + i as f64).collect();
        let deciles = icv_deciles(&train).unwrap();
        assert!(deciles[2] < 1349.65 && 1349.65 < deciles[3]);
        let v = encode_covariates(55.0, Gender::F, 1349.65, &deciles).unwrap();
        let ones: Vec<usize> = (0..COVARIATE_DIM).filter(|&i| v[i] == 1.0).collect();
        assert_eq!(ones, vec![1, AGE_BINS, AGE_BINS + GENDER_BINS + 3]);
    }

    #[test]
    fn age_clamping() {
        let c = cuts();
        assert_eq!(encode_covariates(25.0, Gender::M, 1500.0, &c).unwrap()[0], 1.0);
        assert_eq!(encode_covariates(49.99, Gender::M, 1500.0, &c).unwrap()[0], 1.0);
        assert_eq!(encode_covariates(50.0, Gender::M, 1500.0, &c).unwrap()[1], 1.0);
        assert_eq!(encode_covariates(175.0, Gender::M, 1500.0, &c).unwrap()[9], 1.0);
        assert_eq!(encode_covariates(55.0, Gender::M, 1500.0, &c).unwrap()[AGE_BINS + 1], 1.0);
    }

    #[test]
    fn invalid_inputs() {
        let c = cuts();
        assert!(encode_covariates(f64::NAN, Gender::F, 1500.0, &c).is_err());
        assert!(encode_covariates(60.0, Gender::F, f64::INFINITY, &c).is_err());
        assert!(encode_covariates(-1.0, Gender::F, 1500.0, &c).is_err());
        assert!(encode_covariates(60.0, Gender::F, 0.0, &c).is_err());
        let mut bad = c.clone();
        bad[4] = bad[3];
        assert!(encode_covariates(60.0, Gender::F, 1500.0, &bad).is_err());
        assert!(encode_covariates(60.0, Gender::F, 1500.0, &c[..8]).is_err());
    }

    #[test]
    fn deciles_of_small_sample() {
        assert!(icv_deciles(&[1400.0]).is_err());
        let d = icv_deciles(&[0.0, 10.0]).unwrap();
        assert_eq!(d, (1..10).map(|k| k as f64).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn exactly_three_ones(age in 0.0f64..200.0, male in any::<bool>(), icv in 500.0f64..2500.0) {
            let g = if male { Gender::M } else { Gender::F };
            let v = encode_covariates(age, g, icv, &cuts()).unwrap();
            prop_assert_eq!(v.len(), COVARIATE_DIM);
            prop_assert_eq!(v.iter().sum::<f64>(), 3.0);
            prop_assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), 3);
            prop_assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
            prop_assert_eq!(v[..AGE_BINS].iter().sum::<f64>(), 1.0);
            prop_assert_eq!(v[AGE_BINS..AGE_BINS + GENDER_BINS].iter().sum::<f64>(), 1.0);
        }

        #[test]
        fn same_bins_same_vector(age in 50.0f64..59.0, icv in 1210.0f64..1290.0) {
            let a = encode_covariates(age, Gender::F, icv, &cuts()).unwrap();
            let b = encode_covariates(55.5, Gender::F, 1250.0, &cuts()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

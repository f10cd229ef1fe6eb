use serde::{Deserialize, Serialize};

use super::{DataError, Subject};

/// Per-feature z-scoring statistics (population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// In place `(x - mean) / std`.
    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn invert(&self, z: &mut [f64]) {
        for ((v, m), s) in z.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = *v * s + m;
        }
    }
}

/// Fits mean and std per feature over `train_hc`.
pub fn fit_normalization(
    train_hc: &[Subject],
    region_names: &[String],
) -> Result<Normalization, DataError> {
    if train_hc.len() < 2 {
        return Err(DataError::TooFewSamples(format!(
            "normalization needs at least 2 training samples, got {}",
            train_hc.len()
        )));
    }
    let dim = region_names.len();
    let n = train_hc.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in train_hc {
        for (m, v) in mean.iter_mut().zip(&s.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for s in train_hc {
        for ((acc, v), m) in var.iter_mut().zip(&s.features).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.into_iter().map(|v| (v / n).sqrt()).collect();
    for (j, (&s, &m)) in std.iter().zip(&mean).enumerate() {
        if !s.is_finite() || !m.is_finite() {
            return Err(DataError::Invalid(format!("feature {} has non-finite values", region_names[j])));
        }
        if s <= 1e-12 * m.abs().max(1.0) {
            return Err(DataError::ConstantFeature(region_names[j].clone()));
        }
    }
    Ok(Normalization { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Demographics, Gender, Label};

    fn subject(features: Vec<f64>) -> Subject {
        Subject {
            subject_id: "s".into(),
            features,
            demographics: Demographics {
                age: 70.0,
                gender: Gender::F,
                icv: 1400.0,
            },
            label: Label::Hc,
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("roi_{i}")).collect()
    }

    #[test]
    fn two_sample_hand_case() {
        let train = vec![subject(vec![0.0, 5.0]), subject(vec![2.0, 9.0])];
        let norm = fit_normalization(&train, &names(2)).unwrap();
        assert_eq!(norm.mean[0], 1.0);
        assert_eq!(norm.std[0], 1.0);
        let mut a = vec![0.0, 5.0];
        let mut b = vec![2.0, 9.0];
        norm.apply(&mut a);
        norm.apply(&mut b);
        assert_eq!((a[0], b[0]), (-1.0, 1.0));
    }

    #[test]
    fn training_set_is_standardized() {
        let train: Vec<Subject> = (0..50)
            .map(|i| {
                let t = i as f64;
                subject(vec![t.sin() * 3.0 + 10.0, t * t, -t])
            })
            .collect();
        let norm = fit_normalization(&train, &names(3)).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = train
                .iter()
                .map(|s| {
                    let mut f = s.features.clone();
                    norm.apply(&mut f);
                    f[j]
                })
                .collect();
            let m = col.iter().sum::<f64>() / 50.0;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 50.0;
            assert!(m.abs() < 1e-10);
            assert!((v.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_feature_named() {
        let train = vec![subject(vec![1.0, 3.0]), subject(vec![2.0, 3.0])];
        let err = fit_normalization(&train, &names(2)).unwrap_err();
        assert!(err.to_string().contains("roi_1"), "{err}");
    }

    #[test]
    fn single_sample_rejected() {
        assert!(fit_normalization(&[subject(vec![1.0])], &names(1)).is_err());
    }

    #[test]
    fn shifted_test_keeps_shift() {
        let train = vec![subject(vec![0.0]), subject(vec![2.0])];
        let norm = fit_normalization(&train, &names(1)).unwrap();
        let mut x = vec![5.0];
        norm.apply(&mut x);
        assert_eq!(x[0], 4.0);
        norm.invert(&mut x);
        assert_eq!(x[0], 5.0);
    }
}

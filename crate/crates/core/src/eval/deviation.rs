use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::model::{batch_from_samples, FaaeModel};
use crate::nn::{Matrix, RngStream};

use super::EvalError;

/// Anything that maps a batch of normalized features (and covariates) to a
/// reconstruction of the same shape.
pub trait Reconstructor {
    fn feature_dim(&self) -> usize;

    fn reconstruct_rows(&self, x: &Matrix, c: &Matrix) -> Result<Matrix, EvalError>;
}

impl Reconstructor for FaaeModel {
    fn feature_dim(&self) -> usize {
        self.config().input_dim
    }

    fn reconstruct_rows(&self, x: &Matrix, c: &Matrix) -> Result<Matrix, EvalError> {
        let batch = crate::model::Batch::new(x.clone(), c.clone())?;
        Ok(self.reconstruct_batch(&batch)?)
    }
}

/// Averages `samples` posterior draws per subject instead of decoding the
/// posterior mean.
pub struct SampledReconstructor<'a> {
    pub model: &'a FaaeModel,
    pub samples: usize,
    pub seed: u64,
}

impl Reconstructor for SampledReconstructor<'_> {
    fn feature_dim(&self) -> usize {
        self.model.config().input_dim
    }

    fn reconstruct_rows(&self, x: &Matrix, c: &Matrix) -> Result<Matrix, EvalError> {
        let batch = crate::model::Batch::new(x.clone(), c.clone())?;
        let mut rng = RngStream::with_stream(self.seed, crate::nn::streams::SCORING);
        Ok(self.model.reconstruct_batch_sampled(&batch, self.samples, &mut rng)?)
    }
}

/// Per-subject reconstruction deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub subject_ids: Vec<String>,
    pub labels: Vec<Label>,
    /// Mean squared residual over regions.
    pub d_mse: Vec<f64>,
    /// `subjects × regions` squared residuals.
    pub residuals: Matrix,
    pub region_names: Vec<String>,
}

impl DeviationReport {
    pub fn len(&self) -> usize {
        self.d_mse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_mse.is_empty()
    }

    pub fn n_regions(&self) -> usize {
        self.region_names.len()
    }

    /// `true` for disease subjects.
    pub fn positives(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_disease()).collect()
    }

    pub fn select(&self, indices: &[usize]) -> DeviationReport {
        DeviationReport {
            subject_ids: indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            d_mse: indices.iter().map(|&i| self.d_mse[i]).collect(),
            residuals: self.residuals.select_rows(indices),
            region_names: self.region_names.clone(),
        }
    }

    pub fn filter(&self, label: Label) -> DeviationReport {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        self.select(&idx)
    }

    /// Mean squared residual of each region over the report's subjects.
    pub fn region_means(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        let mut out = vec![0.0; self.n_regions()];
        for row in self.residuals.iter_rows() {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// Scores every subject of `dataset` by `D_MSE = ‖x − x̂‖² / n`.
pub fn score_deviation<R: Reconstructor + ?Sized>(
    model: &R,
    dataset: &Dataset,
) -> Result<DeviationReport, EvalError> {
    let dim = dataset.region_names().len();
    if model.feature_dim() != dim {
        return Err(EvalError::Dimension {
            what: "model input vs dataset features",
            expected: model.feature_dim(),
            actual: dim,
        });
    }
    let n = dataset.len();
    let mut residuals = Matrix::zeros(n, dim);
    let mut d_mse = Vec::with_capacity(n);
    if n > 0 {
        let batch = batch_from_samples(dataset.samples())?;
        let x_hat = model.reconstruct_rows(batch.x(), batch.c())?;
        if x_hat.shape() != (n, dim) {
            return Err(EvalError::Dimension {
                what: "reconstruction width",
                expected: dim,
                actual: x_hat.cols(),
            });
        }
        for i in 0..n {
            let out = residuals.row_mut(i);
            for ((o, a), b) in out.iter_mut().zip(batch.x().row(i)).zip(x_hat.row(i)) {
                let r = a - b;
                *o = r * r;
            }
            d_mse.push(out.iter().sum::<f64>() / dim as f64);
        }
    }
    if !residuals.is_finite() {
        return Err(EvalError::NonFinite("reconstruction residuals".into()));
    }
    Ok(DeviationReport {
        subject_ids: dataset.samples().iter().map(|s| s.subject_id.clone()).collect(),
        labels: dataset.samples().iter().map(|s| s.label).collect(),
        d_mse,
        residuals,
        region_names: dataset.region_names().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Normalization, Sample};

    struct Identity(usize);

    impl Reconstructor for Identity {
        fn feature_dim(&self) -> usize {
            self.0
        }

        fn reconstruct_rows(&self, x: &Matrix, _c: &Matrix) -> Result<Matrix, EvalError> {
            Ok(x.clone())
        }
    }

    struct OffByOne(usize);

    impl Reconstructor for OffByOne {
        fn feature_dim(&self) -> usize {
            self.0
        }

        fn reconstruct_rows(&self, x: &Matrix, _c: &Matrix) -> Result<Matrix, EvalError> {
            let v = x.as_slice().iter().map(|v| v + 1.0).collect();
            Ok(Matrix::from_vec(x.rows(), x.cols(), v)?)
        }
    }

    fn dataset(n: usize, dim: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample {
                subject_id: format!("s{i}"),
                features: (0..dim).map(|j| (i * dim + j) as f64 * 0.25).collect(),
                covariates: vec![1.0, 0.0],
                label: if i % 3 == 0 { Label::Ad } else { Label::Hc },
            })
            .collect();
        let norm = Normalization {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        };
        Dataset::new(samples, norm, (0..dim).map(|j| format!("r{j}")).collect()).unwrap()
    }

    #[test]
    fn identity_scores_zero() {
        let r = score_deviation(&Identity(4), &dataset(6, 4)).unwrap();
        assert!(r.d_mse.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn unit_residual() {
        let r = score_deviation(&OffByOne(5), &dataset(3, 5)).unwrap();
        assert!(r.d_mse.iter().all(|&d| d == 1.0));
        assert!(r.residuals.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(score_deviation(&Identity(3), &dataset(2, 4)).is_err());
    }

    #[test]
    fn model_scoring_is_deterministic_and_consistent() {
        let model = FaaeModel::new(crate::model::ModelConfig {
            input_dim: 4,
            covariate_dim: 2,
            latent_dim: 2,
            encoder_hidden: vec![3],
            decoder_hidden: vec![3],
            discriminator_hidden: vec![3],
            ..Default::default()
        })
        .unwrap();
        let ds = dataset(9, 4);
        let a = score_deviation(&model, &ds).unwrap();
        let b = score_deviation(&model, &ds).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            let mean = a.residuals.row(i).iter().sum::<f64>() / 4.0;
            assert!((mean - a.d_mse[i]).abs() < 1e-12);
            assert!(a.residuals.row(i).iter().all(|&v| v >= 0.0));
        }
        assert_eq!(a.filter(Label::Ad).len(), 3);
    }
}

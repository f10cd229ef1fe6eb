use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, Cohort, Dataset, Preprocessor};
use crate::model::{train, EpochLosses, FaaeModel, ModelConfig};
use crate::nn::{streams, RngStream};

use super::{
    bootstrap_eval, point_metrics, score_deviation, BootstrapConfig, DeviationReport, EvalError,
    EvalSummary, ReplicateMetrics, SampledReconstructor,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bootstrap: BootstrapConfig,
    /// Resamples for the per-region effect-size intervals.
    pub effect_resamples: usize,
    /// Posterior draws averaged per subject at scoring time; 0 decodes the
    /// posterior mean.
    pub latent_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bootstrap: BootstrapConfig::default(),
            effect_resamples: 1000,
            latent_samples: 0,
        }
    }
}

/// Scores `dataset` honoring `eval.latent_samples`.
pub fn score_with(
    model: &FaaeModel,
    dataset: &Dataset,
    eval: &EvalConfig,
) -> Result<DeviationReport, EvalError> {
    if eval.latent_samples == 0 {
        score_deviation(model, dataset)
    } else {
        let sampled = SampledReconstructor {
            model,
            samples: eval.latent_samples,
            seed: model.config().seed,
        };
        score_deviation(&sampled, dataset)
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub model: FaaeModel,
    pub trace: Vec<EpochLosses>,
    pub report: DeviationReport,
    pub summary: EvalSummary,
}

/// Initializes, trains and evaluates one model. Initialization, minibatch
/// noise and bootstrap draws all derive from `config.seed` on separate
/// streams.
pub fn run_experiment(
    train_set: &Dataset,
    test_set: &Dataset,
    config: &ModelConfig,
    eval: &EvalConfig,
) -> Result<Experiment, EvalError> {
    let seed = config.seed;
    let model = FaaeModel::new(config.clone())?;
    let out = train(
        model,
        train_set.samples(),
        &mut RngStream::with_stream(seed, streams::TRAIN),
    )?;
    let report = score_with(&out.model, test_set, eval)?;
    let summary = bootstrap_eval(
        &report,
        &eval.bootstrap,
        &mut RngStream::with_stream(seed, streams::BOOTSTRAP),
    )?;
    Ok(Experiment {
        model: out.model,
        trace: out.trace,
        report,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamCell {
    pub alpha: f64,
    pub gamma: f64,
    pub summary: EvalSummary,
}

/// One run per `(alpha, gamma)` cell, alpha-major, every cell starting from
/// the same initialization.
pub fn param_sweep(
    train_set: &Dataset,
    test_set: &Dataset,
    alphas: &[f64],
    gammas: &[f64],
    base: &ModelConfig,
    eval: &EvalConfig,
) -> Result<Vec<ParamCell>, EvalError> {
    if alphas.is_empty() || gammas.is_empty() {
        return Err(EvalError::Invalid("sweep grids must be nonempty".into()));
    }
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| gammas.iter().map(move |&g| (a, g)))
        .collect();
    cells
        .into_par_iter()
        .map(|(alpha, gamma)| {
            let config = ModelConfig {
                alpha,
                gamma,
                ..base.clone()
            };
            let exp = run_experiment(train_set, test_set, &config, eval)?;
            Ok(ParamCell {
                alpha,
                gamma,
                summary: exp.summary,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: usize,
    pub summary: EvalSummary,
}

/// Indices of the nested training subsets: one seeded permutation of the
/// pool, truncated to each size and sorted.
pub fn nested_subsets(pool_len: usize, sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if let Some(&s) = sizes.iter().find(|&&s| s > pool_len || s == 0) {
        return Err(EvalError::Invalid(format!(
            "training size {s} must lie in 1..={pool_len} (pool size)"
        )));
    }
    let mut perm: Vec<usize> = (0..pool_len).collect();
    RngStream::with_stream(seed, streams::SUBSAMPLE).shuffle(&mut perm);
    Ok(sizes
        .iter()
        .map(|&s| {
            let mut idx = perm[..s].to_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// Trains on nested subsets of the HC pool and evaluates each on the same
/// test set.
pub fn sample_size_sweep(
    pool: &Dataset,
    test_set: &Dataset,
    sizes: &[usize],
    config: &ModelConfig,
    eval: &EvalConfig,
) -> Result<Vec<SizeRow>, EvalError> {
    if sizes.is_empty() {
        return Err(EvalError::Invalid("sizes must be nonempty".into()));
    }
    let subsets = nested_subsets(pool.len(), sizes, config.seed)?;
    sizes
        .par_iter()
        .zip(subsets)
        .map(|(&size, idx)| {
            let exp = run_experiment(&pool.select(&idx), test_set, config, eval)?;
            Ok(SizeRow {
                size,
                summary: exp.summary,
            })
        })
        .collect()
}

/// Alternative protocol: each replicate redraws the train/test split, refits
/// preprocessing, retrains, and records point metrics on its own test set.
/// The reported threshold is that of the first replicate.
pub fn resplit_eval(
    cohort: &Cohort,
    fraction: f64,
    config: &ModelConfig,
    eval: &EvalConfig,
) -> Result<EvalSummary, EvalError> {
    let n = eval.bootstrap.n_replicates;
    if n == 0 {
        return Err(EvalError::Invalid("n_replicates must be at least 1".into()));
    }
    let reps: Vec<ReplicateMetrics> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::with_stream(config.seed, streams::RESPLIT_BASE + r);
            let (train_c, test_c, _) = split(cohort, fraction, &mut rng)?;
            let prep = Preprocessor::fit(&train_c)?;
            let (train_set, test_set) = (prep.apply(&train_c)?, prep.apply(&test_c)?);
            let model = FaaeModel::new(config.clone())?;
            let out = train(
                model,
                train_set.samples(),
                &mut RngStream::with_stream(config.seed, streams::TRAIN),
            )?;
            let report = score_with(&out.model, &test_set, eval)?;
            point_metrics(&report.d_mse, &report.positives(), eval.bootstrap.threshold_rule)
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(EvalSummary::from_replicates(&reps, reps[0].threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, prepare, SynthConfig};
    use crate::model::Variant;

    fn tiny() -> (Dataset, Dataset, ModelConfig, EvalConfig) {
        let synth = generate_synthetic(&SynthConfig {
            n_hc: 60,
            n_ad: 15,
            n_regions: 10,
            affected_regions: vec![0, 5],
            ..SynthConfig::default()
        })
        .unwrap();
        let prep = prepare(&synth.cohort, 0.8, 0).unwrap();
        let cfg = ModelConfig {
            input_dim: 10,
            latent_dim: 2,
            encoder_hidden: vec![6],
            decoder_hidden: vec![6],
            discriminator_hidden: vec![4],
            epochs: 3,
            batch_size: 16,
            ..ModelConfig::default()
        };
        let eval = EvalConfig {
            bootstrap: BootstrapConfig {
                n_replicates: 5,
                ..Default::default()
            },
            ..Default::default()
        };
        (prep.train, prep.test, cfg, eval)
    }

    #[test]
    fn degenerate_grid_matches_single_run() {
        let (tr, te, cfg, eval) = tiny();
        let grid = param_sweep(&tr, &te, &[0.3], &[2.0], &cfg, &eval).unwrap();
        let single = run_experiment(&tr, &te, &ModelConfig { alpha: 0.3, gamma: 2.0, ..cfg }, &eval).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid[0].summary, single.summary);
    }

    #[test]
    fn grid_is_complete_and_deterministic() {
        let (tr, te, cfg, eval) = tiny();
        let a = param_sweep(&tr, &te, &[0.2, 0.5], &[0.0, 5.0, 15.0], &cfg, &eval).unwrap();
        let pairs: Vec<(f64, f64)> = a.iter().map(|c| (c.alpha, c.gamma)).collect();
        assert_eq!(
            pairs,
            vec![(0.2, 0.0), (0.2, 5.0), (0.2, 15.0), (0.5, 0.0), (0.5, 5.0), (0.5, 15.0)]
        );
        let b = param_sweep(&tr, &te, &[0.2, 0.5], &[0.0, 5.0, 15.0], &cfg, &eval).unwrap();
        assert_eq!(a, b);
        assert!(param_sweep(&tr, &te, &[], &[1.0], &cfg, &eval).is_err());
    }

    #[test]
    fn nested_subsets_are_nested() {
        let subsets = nested_subsets(50, &[10, 20, 50], 4).unwrap();
        for w in subsets.windows(2) {
            assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
        assert_eq!(subsets[2], (0..50).collect::<Vec<_>>());
        assert!(nested_subsets(50, &[51], 4).is_err());
    }

    #[test]
    fn size_sweep_rows_follow_sizes() {
        let (tr, te, cfg, eval) = tiny();
        let cfg = ModelConfig {
            variant: Variant::Ae,
            ..cfg
        };
        let rows = sample_size_sweep(&tr, &te, &[20, tr.len()], &cfg, &eval).unwrap();
        assert_eq!(rows.iter().map(|r| r.size).collect::<Vec<_>>(), vec![20, tr.len()]);
        let full = run_experiment(&tr, &te, &cfg, &eval).unwrap();
        assert_eq!(rows[1].summary, full.summary);
        assert!(sample_size_sweep(&tr, &te, &[tr.len() + 1], &cfg, &eval).is_err());
    }

    #[test]
    fn resplit_protocol_runs() {
        let synth = generate_synthetic(&SynthConfig {
            n_hc: 40,
            n_ad: 10,
            n_regions: 10,
            affected_regions: vec![1],
            ..SynthConfig::default()
        })
        .unwrap();
        let (_, _, cfg, eval) = tiny();
        let eval = EvalConfig {
            bootstrap: BootstrapConfig {
                n_replicates: 3,
                ..Default::default()
            },
            ..eval
        };
        let s = resplit_eval(&synth.cohort, 0.8, &ModelConfig { epochs: 1, ..cfg }, &eval).unwrap();
        assert_eq!(s.replicates, 3);
        assert!((0.0..=100.0).contains(&s.auroc.mean));
    }
}

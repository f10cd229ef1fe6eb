use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::nn::{streams, RngStream};

use super::{Cohort, DataError, Demographics, Gender, Label, Subject, DEFAULT_AGE_EDGES};

const AGE_RANGE: (f64, f64) = (55.0, 90.0);
const AGE_CENTER: f64 = 72.5;
const ICV_MEAN: f64 = 1450.0;
const ICV_SD: f64 = 150.0;
/// Scale of the per-region age slope, in feature units per decade.
const AGE_SLOPE_SD: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_hc: usize,
    pub n_ad: usize,
    pub n_regions: usize,
    pub n_latent_factors: usize,
    pub affected_regions: Vec<usize>,
    /// Mean shift in affected regions, in units of the healthy std.
    pub effect_size: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_hc: 500,
            n_ad: 100,
            n_regions: 100,
            n_latent_factors: 8,
            affected_regions: (0..100).step_by(5).collect(),
            effect_size: 1.0,
            noise_std: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Invalid(m));
        if self.n_regions == 0 {
            return bad("n_regions must be positive".into());
        }
        if let Some(&r) = self.affected_regions.iter().find(|&&r| r >= self.n_regions) {
            return bad(format!("affected region {r} outside 0..{}", self.n_regions));
        }
        let unique: BTreeSet<_> = self.affected_regions.iter().collect();
        if unique.len() != self.affected_regions.len() {
            return bad("affected_regions contains duplicates".into());
        }
        if !(self.effect_size.is_finite() && self.effect_size >= 0.0) {
            return bad(format!("effect_size must be finite and >= 0, got {}", self.effect_size));
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return bad(format!("noise_std must be > 0, got {}", self.noise_std));
        }
        Ok(())
    }
}

/// Ground truth written next to a synthetic CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub seed: u64,
    pub n_hc: usize,
    pub n_ad: usize,
    pub n_regions: usize,
    pub n_latent_factors: usize,
    pub noise_std: f64,
    pub effect_size: f64,
    /// Sorted ascending.
    pub affected_regions: Vec<usize>,
    pub age_bin_edges: Vec<f64>,
    /// Healthy-population std of each region, the unit of the planted shift.
    pub region_std: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    pub metadata: SynthMetadata,
}

/// Samples a cohort from a seeded linear factor model:
///
/// `x = baseline + L·f + slope · (age − 72.5) / 10 + noise`
///
/// with `f ~ N(0, I_k)`, `L_ij ~ N(0, 1/k)` and `noise ~ N(0, noise_std²)`.
/// Disease subjects receive `effect_size · σ_j` on each affected region `j`,
/// where `σ_j` is the analytic healthy std of region `j`. Controls come
/// first, then disease subjects.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticCohort, DataError> {
    config.validate()?;
    let mut rng = RngStream::with_stream(config.seed, streams::SYNTH);
    let (r, k) = (config.n_regions, config.n_latent_factors);
    let scale = if k > 0 { 1.0 / (k as f64).sqrt() } else { 0.0 };
    let loadings: Vec<Vec<f64>> = (0..r)
        .map(|_| (0..k).map(|_| rng.standard_normal() * scale).collect())
        .collect();
    let baseline: Vec<f64> = (0..r).map(|_| rng.standard_normal()).collect();
    let slope: Vec<f64> = (0..r).map(|_| AGE_SLOPE_SD * rng.standard_normal()).collect();

    let age_var = (AGE_RANGE.1 - AGE_RANGE.0).powi(2) / 12.0 / 100.0;
    let region_std: Vec<f64> = (0..r)
        .map(|j| {
            let factor_var: f64 = loadings[j].iter().map(|l| l * l).sum();
            (factor_var + config.noise_std.powi(2) + slope[j].powi(2) * age_var).sqrt()
        })
        .collect();
    let mut shift = vec![0.0; r];
    for &j in &config.affected_regions {
        shift[j] = config.effect_size * region_std[j];
    }

    let total = config.n_hc + config.n_ad;
    let mut subjects = Vec::with_capacity(total);
    let mut factors = vec![0.0; k];
    for i in 0..total {
        let label = if i < config.n_hc { Label::Hc } else { Label::Ad };
        let age = rng.uniform_range(AGE_RANGE.0, AGE_RANGE.1);
        let gender = if rng.bernoulli(0.5) { Gender::M } else { Gender::F };
        // Truncate the ICV tail far below any realistic volume.
        let icv = rng.normal(ICV_MEAN, ICV_SD).max(ICV_MEAN - 6.0 * ICV_SD);
        factors.iter_mut().for_each(|f| *f = rng.standard_normal());
        let decades = (age - AGE_CENTER) / 10.0;
        let features = (0..r)
            .map(|j| {
                let latent: f64 = loadings[j].iter().zip(&factors).map(|(l, f)| l * f).sum();
                let mut v = baseline[j] + latent + slope[j] * decades
                    + config.noise_std * rng.standard_normal();
                if label == Label::Ad {
                    v += shift[j];
                }
                v
            })
            .collect();
        subjects.push(Subject {
            subject_id: format!("sub-{i:05}"),
            features,
            demographics: Demographics { age, gender, icv },
            label,
        });
    }
    let region_names = (0..r).map(|j| format!("roi_{j}")).collect();
    let mut affected = config.affected_regions.clone();
    affected.sort_unstable();
    Ok(SyntheticCohort {
        cohort: Cohort::new(subjects, region_names)?,
        metadata: SynthMetadata {
            seed: config.seed,
            n_hc: config.n_hc,
            n_ad: config.n_ad,
            n_regions: r,
            n_latent_factors: k,
            noise_std: config.noise_std,
            effect_size: config.effect_size,
            affected_regions: affected,
            age_bin_edges: DEFAULT_AGE_EDGES.to_vec(),
            region_std,
        },
    })
}

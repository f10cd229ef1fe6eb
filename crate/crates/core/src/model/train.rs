use serde::{Deserialize, Serialize};

use crate::data::{Label, Sample};
use crate::nn::{AdamConfig, AdamState, Matrix, NnError, RngStream};

use super::{Batch, FaaeModel, ModelError};

/// Batch-averaged loss components for one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    /// Discriminator focal loss.
    pub adv: f64,
    /// Focal generator loss on the encoder.
    pub generator: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: FaaeModel,
    pub trace: Vec<EpochLosses>,
}

/// Adam states for the three parameter groups.
struct Optimizers {
    autoencoder: AdamState,
    discriminator: AdamState,
    generator: AdamState,
}

/// Stacks samples into feature and covariate matrices.
pub fn batch_from_samples(samples: &[Sample]) -> Result<Batch, ModelError> {
    let x: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let c: Vec<&[f64]> = samples.iter().map(|s| s.covariates.as_slice()).collect();
    Batch::new(Matrix::from_rows(&x)?, Matrix::from_rows(&c)?)
}

fn reject_non_normative(samples: &[Sample]) -> Result<(), ModelError> {
    match samples.iter().find(|s| s.label != Label::Hc) {
        Some(s) => Err(ModelError::NonNormativeTraining {
            subject_id: s.subject_id.clone(),
        }),
        None => Ok(()),
    }
}

/// Fits the model on healthy controls with alternating minibatch updates:
///
/// 1. encoder + decoder on reconstruction + `kl_weight · KL`,
/// 2. discriminator on the focal adversarial loss (encoder frozen),
/// 3. encoder on the focal generator loss (discriminator frozen).
///
/// Steps 2–3 run only for adversarial variants. Rows are reshuffled every
/// epoch from `rng`; per batch the draws are, in order, the
/// reconstruction noise, then (adversarial variants) the prior sample and
/// the noise for the discriminator and generator steps.
pub fn train(
    mut model: FaaeModel,
    samples: &[Sample],
    rng: &mut RngStream,
) -> Result<TrainOutcome, ModelError> {
    reject_non_normative(samples)?;
    let cfg = model.config().clone();
    if cfg.epochs > 0 && samples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    if samples.is_empty() {
        return Ok(TrainOutcome {
            model,
            trace: Vec::new(),
        });
    }
    let data = batch_from_samples(samples)?;
    let adam = AdamConfig::with_learning_rate(cfg.learning_rate);
    let enc_len = model.encoder().param_count();
    let dec_len = model.decoder().param_count();
    let mut opt = Optimizers {
        autoencoder: AdamState::new(enc_len + dec_len, adam),
        discriminator: AdamState::new(model.discriminator().param_count(), adam),
        generator: AdamState::new(enc_len, adam),
    };
    let variant = cfg.variant;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut params = Vec::new();
    let mut grads = Vec::new();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut sums = [0.0f64; 4];
        let mut n_batches = 0usize;
        for (batch_idx, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch = data.select(idx)?;
            let rows = batch.rows();
            let wrap = |source: NnError| ModelError::Optimizer {
                epoch,
                batch: batch_idx,
                source,
            };
            let check = |component: &'static str, value: f64| {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::NonFiniteLoss {
                        component,
                        epoch,
                        batch: batch_idx,
                    })
                }
            };

            // Reconstruction phase.
            let noise = if variant.stochastic() {
                model.sample_noise(rows, rng)
            } else {
                Matrix::zeros(rows, cfg.latent_dim)
            };
            let (ae, enc_g, dec_g) = model.autoencoder_loss(&batch, &noise, model.default_terms())?;
            check("reconstruction", ae.recon)?;
            check("kl", ae.kl)?;
            params.clear();
            model.encoder().params_into(&mut params);
            model.decoder().params_into(&mut params);
            grads.clear();
            enc_g.flatten_into(&mut grads);
            dec_g.flatten_into(&mut grads);
            opt.autoencoder.step(&mut params, &grads).map_err(wrap)?;
            model.encoder_mut().set_params(&params[..enc_len])?;
            model.decoder_mut().set_params(&params[enc_len..])?;
            sums[0] += ae.recon;
            sums[1] += ae.kl;

            if variant.adversarial() {
                // Discriminator phase.
                let z_prior = model.sample_noise(rows, rng);
                let noise = if variant.stochastic() {
                    model.sample_noise(rows, rng)
                } else {
                    Matrix::zeros(rows, cfg.latent_dim)
                };
                let (d_loss, d_g) = model.discriminator_loss(&batch, &z_prior, &noise)?;
                check("discriminator", d_loss)?;
                params.clear();
                model.discriminator().params_into(&mut params);
                opt.discriminator.step(&mut params, &d_g.flatten()).map_err(wrap)?;
                model.discriminator_mut().set_params(&params)?;

                // Generator phase.
                let noise = if variant.stochastic() {
                    model.sample_noise(rows, rng)
                } else {
                    Matrix::zeros(rows, cfg.latent_dim)
                };
                let (g_loss, g_g) = model.generator_loss(&batch, &noise)?;
                check("generator", g_loss)?;
                params.clear();
                model.encoder().params_into(&mut params);
                opt.generator.step(&mut params, &g_g.flatten()).map_err(wrap)?;
                model.encoder_mut().set_params(&params)?;
                sums[2] += d_loss;
                sums[3] += g_loss;
            }
            n_batches += 1;
        }
        let n = n_batches as f64;
        trace.push(EpochLosses {
            epoch,
            recon: sums[0] / n,
            kl: sums[1] / n,
            adv: sums[2] / n,
            generator: sums[3] / n,
        });
    }
    Ok(TrainOutcome { model, trace })
}

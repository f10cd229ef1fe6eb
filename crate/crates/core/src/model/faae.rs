use serde::{Deserialize, Serialize};

use crate::nn::{rng::streams, Activation, ForwardTrace, Matrix, Mlp, MlpGrads, RngStream};

use super::losses::{clamp_log_var, focal_loss, focal_loss_grad, LOG_VAR_MAX, LOG_VAR_MIN};
use super::{GaussianLatent, ModelConfig, ModelError};

const HIDDEN_ACTIVATION: Activation = Activation::Tanh;

/// Conditional encoder, decoder and latent discriminator.
///
/// * encoder: `x ‖ c → mu ‖ log_var` (width `2 · latent_dim`)
/// * decoder: `z ‖ c → x_hat` with an identity head
/// * discriminator: `z ‖ c → P(z drawn from the prior)` with a sigmoid head
///
/// Variants without covariate conditioning drop `c` from every network input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaaeModel {
    config: ModelConfig,
    encoder: Mlp,
    decoder: Mlp,
    discriminator: Mlp,
}

/// A minibatch of features `x` (`rows × input_dim`) and covariates `c`
/// (`rows × covariate_dim`).
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    x: Matrix,
    c: Matrix,
}

impl Batch {
    pub fn new(x: Matrix, c: Matrix) -> Result<Self, ModelError> {
        if x.rows() == 0 {
            return Err(ModelError::EmptyBatch);
        }
        if x.rows() != c.rows() {
            return Err(ModelError::Dimension {
                what: "covariate rows",
                expected: x.rows(),
                actual: c.rows(),
            });
        }
        Ok(Self { x, c })
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn select(&self, indices: &[usize]) -> Result<Batch, ModelError> {
        Batch::new(self.x.select_rows(indices), self.c.select_rows(indices))
    }
}

/// Which autoencoder terms enter the objective, and with what weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AeTerms {
    pub recon: f64,
    pub kl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AeLoss {
    /// Batch-mean MSE.
    pub recon: f64,
    /// Batch-mean KL to the standard-normal prior (0 for deterministic variants).
    pub kl: f64,
    /// `terms.recon · recon + terms.kl · kl`.
    pub objective: f64,
}

/// Named loss components of one batch under the active variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub recon: f64,
    pub kl: f64,
    pub adv: f64,
    pub total: f64,
}

struct LatentPass {
    trace: ForwardTrace,
    mu: Matrix,
    log_var: Matrix,
    in_range: Vec<bool>,
    eps: Option<Matrix>,
    z: Matrix,
}

impl FaaeModel {
    /// Glorot-initialized model seeded by `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = RngStream::with_stream(config.seed, streams::INIT);
        let cov = config.effective_covariate_dim();
        let latent = config.latent_dim;
        let sizes = |first: usize, hidden: &[usize], last: usize| {
            let mut s = vec![first];
            s.extend_from_slice(hidden);
            s.push(last);
            s
        };
        let encoder = Mlp::glorot(
            &sizes(config.input_dim + cov, &config.encoder_hidden, 2 * latent),
            HIDDEN_ACTIVATION,
            Activation::Identity,
            &mut rng,
        )?;
        let decoder = Mlp::glorot(
            &sizes(latent + cov, &config.decoder_hidden, config.input_dim),
            HIDDEN_ACTIVATION,
            Activation::Identity,
            &mut rng,
        )?;
        let discriminator = Mlp::glorot(
            &sizes(latent + cov, &config.discriminator_hidden, 1),
            HIDDEN_ACTIVATION,
            Activation::Sigmoid,
            &mut rng,
        )?;
        Ok(Self {
            config,
            encoder,
            decoder,
            discriminator,
        })
    }

    /// Assembles a model from explicit networks, checking every width
    /// against `config`.
    pub fn from_networks(
        config: ModelConfig,
        encoder: Mlp,
        decoder: Mlp,
        discriminator: Mlp,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let cov = config.effective_covariate_dim();
        let latent = config.latent_dim;
        let checks = [
            ("encoder input", config.input_dim + cov, encoder.input_dim()),
            ("encoder output", 2 * latent, encoder.output_dim()),
            ("decoder input", latent + cov, decoder.input_dim()),
            ("decoder output", config.input_dim, decoder.output_dim()),
            ("discriminator input", latent + cov, discriminator.input_dim()),
            ("discriminator output", 1, discriminator.output_dim()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(ModelError::Dimension {
                    what,
                    expected,
                    actual,
                });
            }
        }
        let head = discriminator.layers().last().expect("non-empty").activation();
        if head != Activation::Sigmoid {
            return Err(ModelError::InvalidConfig(format!(
                "discriminator head must be Sigmoid, found {head:?}"
            )));
        }
        Ok(Self {
            config,
            encoder,
            decoder,
            discriminator,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn discriminator(&self) -> &Mlp {
        &self.discriminator
    }

    pub fn encoder_mut(&mut self) -> &mut Mlp {
        &mut self.encoder
    }

    pub fn decoder_mut(&mut self) -> &mut Mlp {
        &mut self.decoder
    }

    pub fn discriminator_mut(&mut self) -> &mut Mlp {
        &mut self.discriminator
    }

    fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), ModelError> {
        if expected == actual {
            Ok(())
        } else {
            Err(ModelError::Dimension {
                what,
                expected,
                actual,
            })
        }
    }

    fn joined(&self, head: &[f64], c: &[f64]) -> Result<Vec<f64>, ModelError> {
        Self::check_len("covariates", self.config.covariate_dim, c.len())?;
        let mut v = head.to_vec();
        if self.config.variant.conditioned() {
            v.extend_from_slice(c);
        }
        Ok(v)
    }

    fn joined_batch(&self, head: &Matrix, c: &Matrix) -> Result<Matrix, ModelError> {
        Self::check_len("covariates", self.config.covariate_dim, c.cols())?;
        if self.config.variant.conditioned() {
            Ok(head.hconcat(c)?)
        } else {
            Ok(head.clone())
        }
    }

    /// Posterior parameters for one subject. Deterministic variants report
    /// `log_var` pinned at the clamp floor; their latent is always `mu`.
    pub fn encode(&self, x: &[f64], c: &[f64]) -> Result<GaussianLatent, ModelError> {
        Self::check_len("features", self.config.input_dim, x.len())?;
        let out = self.encoder.forward(&self.joined(x, c)?)?;
        let (mu, log_var) = out.split_at(self.config.latent_dim);
        let log_var = if self.config.variant.stochastic() {
            log_var.to_vec()
        } else {
            vec![LOG_VAR_MIN; self.config.latent_dim]
        };
        GaussianLatent::new(mu.to_vec(), log_var)
    }

    pub fn decode(&self, z: &[f64], c: &[f64]) -> Result<Vec<f64>, ModelError> {
        Self::check_len("latent", self.config.latent_dim, z.len())?;
        Ok(self.decoder.forward(&self.joined(z, c)?)?)
    }

    /// Discriminator belief that `z` came from the prior, strictly inside (0, 1).
    pub fn discriminate(&self, z: &[f64], c: &[f64]) -> Result<f64, ModelError> {
        Self::check_len("latent", self.config.latent_dim, z.len())?;
        let p = self.discriminator.forward(&self.joined(z, c)?)?[0];
        Ok(p.clamp(f64::EPSILON, 1.0 - f64::EPSILON))
    }

    /// Mean-latent reconstruction (no sampling).
    pub fn reconstruct(&self, x: &[f64], c: &[f64]) -> Result<Vec<f64>, ModelError> {
        let latent = self.encode(x, c)?;
        self.decode(&latent.mu, c)
    }

    pub fn reconstruct_batch(&self, batch: &Batch) -> Result<Matrix, ModelError> {
        self.check_batch(batch)?;
        let enc = self.encoder.forward_batch(&self.joined_batch(batch.x(), batch.c())?)?;
        let (mu, _) = enc.split_cols(self.config.latent_dim);
        Ok(self.decoder.forward_batch(&self.joined_batch(&mu, batch.c())?)?)
    }

    /// Reconstruction averaged over `samples` posterior draws per row.
    pub fn reconstruct_batch_sampled(
        &self,
        batch: &Batch,
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<Matrix, ModelError> {
        if samples == 0 || !self.config.variant.stochastic() {
            return self.reconstruct_batch(batch);
        }
        self.check_batch(batch)?;
        let mut acc = Matrix::zeros(batch.rows(), self.config.input_dim);
        for _ in 0..samples {
            let noise = self.sample_noise(batch.rows(), rng);
            let pass = self.latent_pass(batch, Some(&noise))?;
            let x_hat = self.decoder.forward_batch(&self.joined_batch(&pass.z, batch.c())?)?;
            for (a, v) in acc.as_mut_slice().iter_mut().zip(x_hat.as_slice()) {
                *a += v;
            }
        }
        let k = samples as f64;
        acc.as_mut_slice().iter_mut().for_each(|v| *v /= k);
        Ok(acc)
    }

    /// `rows × latent_dim` standard-normal draws.
    pub fn sample_noise(&self, rows: usize, rng: &mut RngStream) -> Matrix {
        let l = self.config.latent_dim;
        Matrix::from_vec(rows, l, rng.standard_normal_vec(rows * l)).expect("shape")
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), ModelError> {
        Self::check_len("features", self.config.input_dim, batch.x().cols())?;
        Self::check_len("covariates", self.config.covariate_dim, batch.c().cols())
    }

    fn check_noise(&self, batch: &Batch, noise: &Matrix) -> Result<(), ModelError> {
        if noise.shape() != (batch.rows(), self.config.latent_dim) {
            return Err(ModelError::Dimension {
                what: "noise rows × latent_dim",
                expected: batch.rows() * self.config.latent_dim,
                actual: noise.rows() * noise.cols(),
            });
        }
        Ok(())
    }

    fn latent_pass(&self, batch: &Batch, noise: Option<&Matrix>) -> Result<LatentPass, ModelError> {
        self.check_batch(batch)?;
        let l = self.config.latent_dim;
        let trace = self
            .encoder
            .forward_trace(&self.joined_batch(batch.x(), batch.c())?)?;
        let (mu, raw_log_var) = trace.output().split_cols(l);
        let in_range = raw_log_var
            .as_slice()
            .iter()
            .map(|&v| (LOG_VAR_MIN..=LOG_VAR_MAX).contains(&v))
            .collect();
        let mut log_var = raw_log_var;
        log_var
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = clamp_log_var(*v));
        let (eps, z) = if self.config.variant.stochastic() {
            let eps = noise.ok_or_else(|| {
                ModelError::InvalidConfig("stochastic variant requires latent noise".into())
            })?;
            self.check_noise(batch, eps)?;
            let mut z = mu.clone();
            for ((zi, lv), e) in z
                .as_mut_slice()
                .iter_mut()
                .zip(log_var.as_slice())
                .zip(eps.as_slice())
            {
                *zi += (0.5 * lv).exp() * e;
            }
            (Some(eps.clone()), z)
        } else {
            (None, mu.clone())
        };
        Ok(LatentPass {
            trace,
            mu,
            log_var,
            in_range,
            eps,
            z,
        })
    }

    /// Gradient at the encoder output given `dL/dz` and a KL coefficient
    /// applied per row.
    fn latent_backward(&self, pass: &LatentPass, dz: &Matrix, kl_scale: f64) -> Matrix {
        let l = self.config.latent_dim;
        let rows = dz.rows();
        let mut out = Matrix::zeros(rows, 2 * l);
        for r in 0..rows {
            let dz_r = dz.row(r);
            let mu_r = pass.mu.row(r);
            let lv_r = pass.log_var.row(r);
            let row = out.row_mut(r);
            for j in 0..l {
                row[j] = dz_r[j] + kl_scale * mu_r[j];
            }
            if let Some(eps) = &pass.eps {
                let eps_r = eps.row(r);
                for j in 0..l {
                    if !pass.in_range[r * l + j] {
                        continue;
                    }
                    let sigma = (0.5 * lv_r[j]).exp();
                    row[l + j] = dz_r[j] * eps_r[j] * sigma * 0.5
                        + kl_scale * 0.5 * (lv_r[j].exp() - 1.0);
                }
            }
        }
        out
    }

    pub fn default_terms(&self) -> AeTerms {
        AeTerms {
            recon: 1.0,
            kl: if self.config.variant.uses_kl() {
                self.config.kl_weight
            } else {
                0.0
            },
        }
    }

    /// Reconstruction + weighted KL objective with its encoder and decoder
    /// gradients. `noise` is the reparameterization draw (ignored by
    /// deterministic variants).
    pub fn autoencoder_loss(
        &self,
        batch: &Batch,
        noise: &Matrix,
        terms: AeTerms,
    ) -> Result<(AeLoss, MlpGrads, MlpGrads), ModelError> {
        let pass = self.latent_pass(batch, Some(noise))?;
        let rows = batch.rows();
        let n = self.config.input_dim;
        let dec_trace = self
            .decoder
            .forward_trace(&self.joined_batch(&pass.z, batch.c())?)?;
        let x_hat = dec_trace.output();

        let scale = 1.0 / (rows * n) as f64;
        let mut sse = 0.0;
        let mut d_xhat = Matrix::zeros(rows, n);
        for ((d, &xh), &x) in d_xhat
            .as_mut_slice()
            .iter_mut()
            .zip(x_hat.as_slice())
            .zip(batch.x().as_slice())
        {
            let r = xh - x;
            sse += r * r;
            *d = terms.recon * 2.0 * r * scale;
        }
        let recon = sse * scale;

        let kl = if self.config.variant.uses_kl() {
            let mut total = 0.0;
            for (m, lv) in pass.mu.as_slice().iter().zip(pass.log_var.as_slice()) {
                total += m * m + lv.exp() - 1.0 - lv;
            }
            0.5 * total / rows as f64
        } else {
            0.0
        };
        let kl_scale = if self.config.variant.uses_kl() {
            terms.kl / rows as f64
        } else {
            0.0
        };

        let (dec_grads, d_dec_in) = self.decoder.backward(&dec_trace, &d_xhat)?;
        let (dz, _) = d_dec_in.split_cols(self.config.latent_dim);
        let d_enc_out = self.latent_backward(&pass, &dz, kl_scale);
        let (enc_grads, _) = self.encoder.backward(&pass.trace, &d_enc_out)?;
        let loss = AeLoss {
            recon,
            kl,
            objective: terms.recon * recon + terms.kl * kl,
        };
        Ok((loss, enc_grads, dec_grads))
    }

    /// Focal adversarial discriminator loss: prior draws `z_prior` are the
    /// positive class, encoder samples the negative class. Gradients are
    /// for the discriminator only.
    pub fn discriminator_loss(
        &self,
        batch: &Batch,
        z_prior: &Matrix,
        noise: &Matrix,
    ) -> Result<(f64, MlpGrads), ModelError> {
        self.check_noise(batch, z_prior)?;
        let pass = self.latent_pass(batch, Some(noise))?;
        self.discriminator_loss_on(batch, z_prior, &pass.z)
    }

    fn discriminator_loss_on(
        &self,
        batch: &Batch,
        z_prior: &Matrix,
        z_post: &Matrix,
    ) -> Result<(f64, MlpGrads), ModelError> {
        let rows = batch.rows();
        let (alpha, gamma) = self.config.focal_params();
        let input = self
            .joined_batch(z_prior, batch.c())?
            .vconcat(&self.joined_batch(z_post, batch.c())?)?;
        let trace = self.discriminator.forward_trace(&input)?;
        let p = trace.output().as_slice();
        let inv = 1.0 / rows as f64;
        let mut loss = 0.0;
        let mut dp = Matrix::zeros(2 * rows, 1);
        for (i, (&pi, d)) in p.iter().zip(dp.as_mut_slice()).enumerate() {
            let positive = i < rows;
            loss += focal_loss(pi, positive, alpha, gamma) * inv;
            *d = focal_loss_grad(pi, positive, alpha, gamma) * inv;
        }
        let (grads, _) = self.discriminator.backward(&trace, &dp)?;
        Ok((loss, grads))
    }

    /// Non-saturating focal generator loss `-alpha (1 - D(q))^gamma ln D(q)`
    /// on encoder samples; gradients are for the encoder, the
    /// discriminator is held fixed.
    pub fn generator_loss(&self, batch: &Batch, noise: &Matrix) -> Result<(f64, MlpGrads), ModelError> {
        let rows = batch.rows();
        let (alpha, gamma) = self.config.focal_params();
        let pass = self.latent_pass(batch, Some(noise))?;
        let trace = self
            .discriminator
            .forward_trace(&self.joined_batch(&pass.z, batch.c())?)?;
        let inv = 1.0 / rows as f64;
        let mut loss = 0.0;
        let mut dp = Matrix::zeros(rows, 1);
        for (&pi, d) in trace.output().as_slice().iter().zip(dp.as_mut_slice()) {
            loss += focal_loss(pi, true, alpha, gamma) * inv;
            *d = focal_loss_grad(pi, true, alpha, gamma) * inv;
        }
        let (_, d_in) = self.discriminator.backward(&trace, &dp)?;
        let (dz, _) = d_in.split_cols(self.config.latent_dim);
        let d_enc_out = self.latent_backward(&pass, &dz, 0.0);
        let (enc_grads, _) = self.encoder.backward(&pass.trace, &d_enc_out)?;
        Ok((loss, enc_grads))
    }

    /// Loss components on one batch with fresh noise from `rng`: the
    /// reparameterization draw first, then one prior draw per row.
    pub fn total_loss(&self, batch: &Batch, rng: &mut RngStream) -> Result<LossComponents, ModelError> {
        let variant = self.config.variant;
        let noise = if variant.stochastic() {
            self.sample_noise(batch.rows(), rng)
        } else {
            Matrix::zeros(batch.rows(), self.config.latent_dim)
        };
        let (ae, _, _) = self.autoencoder_loss(batch, &noise, self.default_terms())?;
        let adv = if variant.adversarial() {
            let z_prior = self.sample_noise(batch.rows(), rng);
            let pass = self.latent_pass(batch, Some(&noise))?;
            self.discriminator_loss_on(batch, &z_prior, &pass.z)?.0
        } else {
            0.0
        };
        let kl_weight = self.default_terms().kl;
        Ok(LossComponents {
            recon: ae.recon,
            kl: ae.kl,
            adv,
            total: ae.recon + kl_weight * ae.kl + adv,
        })
    }
}

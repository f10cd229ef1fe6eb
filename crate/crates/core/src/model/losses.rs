use serde::{Deserialize, Serialize};

use crate::nn::RngStream;

use super::ModelError;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;
pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;

/// Diagonal Gaussian posterior `N(mu, exp(log_var))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLatent {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl GaussianLatent {
    /// Builds a latent, clamping `log_var` into `[LOG_VAR_MIN, LOG_VAR_MAX]`.
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self, ModelError> {
        if mu.len() != log_var.len() {
            return Err(ModelError::Dimension {
                what: "latent log_var",
                expected: mu.len(),
                actual: log_var.len(),
            });
        }
        if mu.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidConfig("latent contains non-finite values".into()));
        }
        let log_var = log_var.into_iter().map(clamp_log_var).collect();
        Ok(Self { mu, log_var })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| (0.5 * lv).exp()).collect()
    }
}

#[inline]
pub(crate) fn clamp_log_var(lv: f64) -> f64 {
    lv.clamp(LOG_VAR_MIN, LOG_VAR_MAX)
}

/// `z = mu + sigma ⊙ eps` with fresh `eps ~ N(0, I)`.
pub fn reparameterize(latent: &GaussianLatent, rng: &mut RngStream) -> Vec<f64> {
    let eps = rng.standard_normal_vec(latent.dim());
    reparameterize_with(latent, &eps)
}

/// Reparameterization with caller-supplied noise.
pub fn reparameterize_with(latent: &GaussianLatent, eps: &[f64]) -> Vec<f64> {
    assert_eq!(eps.len(), latent.dim(), "noise length must equal latent_dim");
    latent
        .mu
        .iter()
        .zip(&latent.log_var)
        .zip(eps)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect()
}

/// Closed-form `KL(N(mu, exp(log_var)) || N(0, I))`.
pub fn kl_term(latent: &GaussianLatent) -> f64 {
    0.5 * latent
        .mu
        .iter()
        .zip(&latent.log_var)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// Mean squared error over coordinates.
pub fn reconstruction_loss(x: &[f64], x_hat: &[f64]) -> Result<f64, ModelError> {
    if x.len() != x_hat.len() {
        return Err(ModelError::Dimension {
            what: "reconstruction",
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let sse: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / x.len() as f64)
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Focal loss for predicted probability `p` of the positive class.
///
/// `positive`: `-alpha (1-p)^gamma ln p`; otherwise
/// `-(1-alpha) p^gamma ln(1-p)`.
pub fn focal_loss(p: f64, positive: bool, alpha: f64, gamma: f64) -> f64 {
    let p = clamp_prob(p);
    if positive {
        -alpha * (1.0 - p).powf(gamma) * p.ln()
    } else {
        -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).ln()
    }
}

/// `d focal_loss / dp`; zero where the clamp is active.
pub(crate) fn focal_loss_grad(p: f64, positive: bool, alpha: f64, gamma: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        return 0.0;
    }
    if positive {
        let q = 1.0 - p;
        let focus = q.powf(gamma);
        let dfocus = if gamma == 0.0 {
            0.0
        } else {
            -gamma * q.powf(gamma - 1.0)
        };
        -alpha * (dfocus * p.ln() + focus / p)
    } else {
        let q = 1.0 - p;
        let focus = p.powf(gamma);
        let dfocus = if gamma == 0.0 {
            0.0
        } else {
            gamma * p.powf(gamma - 1.0)
        };
        -(1.0 - alpha) * (dfocus * q.ln() - focus / q)
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Member of the autoencoder family. Each variant is a configuration of the
/// same model, switching covariate conditioning, the stochastic latent, the
/// KL term and the adversarial phases on or off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "AE")]
    Ae,
    #[serde(rename = "VAE")]
    Vae,
    #[serde(rename = "CVAE")]
    Cvae,
    #[serde(rename = "AAE")]
    Aae,
    #[serde(rename = "ACVAE")]
    Acvae,
    #[serde(rename = "FAAE")]
    Faae,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Ae,
        Variant::Vae,
        Variant::Cvae,
        Variant::Aae,
        Variant::Acvae,
        Variant::Faae,
    ];

    /// Encoder, decoder and discriminator receive the covariate vector.
    pub fn conditioned(self) -> bool {
        matches!(self, Variant::Cvae | Variant::Acvae | Variant::Faae)
    }

    /// Latent is sampled through the reparameterization; otherwise `z = mu`.
    pub fn stochastic(self) -> bool {
        matches!(self, Variant::Vae | Variant::Cvae | Variant::Acvae | Variant::Faae)
    }

    pub fn uses_kl(self) -> bool {
        self.stochastic()
    }

    pub fn adversarial(self) -> bool {
        matches!(self, Variant::Aae | Variant::Acvae | Variant::Faae)
    }

    /// `(alpha, gamma)` actually used by the adversarial terms. The plain
    /// adversarial variants use the focal form at `alpha = 0.5, gamma = 0`,
    /// i.e. half the binary cross-entropy.
    pub fn focal_params(self, alpha: f64, gamma: f64) -> (f64, f64) {
        match self {
            Variant::Faae => (alpha, gamma),
            _ => (0.5, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ae => "AE",
            Variant::Vae => "VAE",
            Variant::Cvae => "CVAE",
            Variant::Aae => "AAE",
            Variant::Acvae => "ACVAE",
            Variant::Faae => "FAAE",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub covariate_dim: usize,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub alpha: f64,
    pub gamma: f64,
    /// Weight of the summed KL term against the feature-averaged MSE;
    /// `2 / input_dim` matches a unit-variance Gaussian likelihood.
    pub kl_weight: f64,
    pub variant: Variant,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 100,
            covariate_dim: 22,
            latent_dim: 16,
            encoder_hidden: vec![64, 32],
            decoder_hidden: vec![32, 64],
            discriminator_hidden: vec![32, 16],
            alpha: 0.2,
            gamma: 15.0,
            kl_weight: 0.02,
            variant: Variant::Faae,
            epochs: 500,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.input_dim == 0 {
            return fail("input_dim must be at least 1".into());
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1".into());
        }
        for (name, sizes) in [
            ("encoder_hidden", &self.encoder_hidden),
            ("decoder_hidden", &self.decoder_hidden),
            ("discriminator_hidden", &self.discriminator_hidden),
        ] {
            if sizes.contains(&0) {
                return fail(format!("{name} sizes must be at least 1"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return fail(format!("kl_weight must be finite and >= 0, got {}", self.kl_weight));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        Ok(())
    }

    /// Covariate width actually fed to the networks.
    pub fn effective_covariate_dim(&self) -> usize {
        if self.variant.conditioned() {
            self.covariate_dim
        } else {
            0
        }
    }

    pub fn focal_params(&self) -> (f64, f64) {
        self.variant.focal_params(self.alpha, self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.alpha, cfg.gamma), (0.2, 15.0));
        assert_eq!(cfg.variant, Variant::Faae);
    }

    #[test]
    fn rejects_out_of_range_focal_params() {
        let mut cfg = ModelConfig {
            alpha: 1.0,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.alpha = 0.5;
        cfg.gamma = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_zero_sizes() {
        let cfg = ModelConfig {
            encoder_hidden: vec![8, 0],
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            latent_dim: 0,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn variant_table() {
        use Variant::*;
        assert!(!Ae.conditioned() && !Ae.stochastic() && !Ae.adversarial());
        assert!(!Vae.conditioned() && Vae.stochastic() && !Vae.adversarial());
        assert!(Cvae.conditioned() && Cvae.stochastic() && !Cvae.adversarial());
        assert!(!Aae.conditioned() && !Aae.stochastic() && Aae.adversarial());
        assert!(Acvae.conditioned() && Acvae.stochastic() && Acvae.adversarial());
        assert!(Faae.conditioned() && Faae.stochastic() && Faae.adversarial());
        assert_eq!(Acvae.focal_params(0.2, 15.0), (0.5, 0.0));
        assert_eq!(Faae.focal_params(0.2, 15.0), (0.2, 15.0));
    }

    #[test]
    fn variant_names_parse_and_serialize() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("MCI".parse::<Variant>().is_err());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let err = serde_json::from_str::<ModelConfig>(r#"{"latnet_dim": 4}"#);
        assert!(err.is_err());
        let cfg: ModelConfig = serde_json::from_str(r#"{"latent_dim": 4}"#).unwrap();
        assert_eq!(cfg.latent_dim, 4);
        assert_eq!(cfg.encoder_hidden, vec![64, 32]);
    }
}

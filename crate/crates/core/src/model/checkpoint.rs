//! Binary checkpoint layout:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `FAAECKPT` |
//! | 4 | format version, `u32` little-endian |
//! | 8 | header length `n`, `u64` little-endian |
//! | n | UTF-8 JSON header |
//! | 8·p | parameters as `f64` little-endian: encoder, decoder, discriminator |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Preprocessor, SplitRecord};
use crate::nn::{Activation, DenseLayer, Mlp};

use super::{FaaeModel, ModelConfig, ModelError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FAAECKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const PREAMBLE: usize = 8 + 4 + 8;

/// A trained model with everything needed to score new data exactly as the
/// training run would.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: FaaeModel,
    pub preprocessor: Preprocessor,
    pub split: SplitRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LayerShape {
    rows: usize,
    cols: usize,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    seed: u64,
    encoder: Vec<LayerShape>,
    decoder: Vec<LayerShape>,
    discriminator: Vec<LayerShape>,
    param_count: usize,
    preprocessor: Preprocessor,
    split: SplitRecord,
}

fn shapes(net: &Mlp) -> Vec<LayerShape> {
    net.layers()
        .iter()
        .map(|l| LayerShape {
            rows: l.output_dim(),
            cols: l.input_dim(),
            activation: l.activation(),
        })
        .collect()
}

fn rebuild(shapes: &[LayerShape], params: &[f64]) -> Result<Mlp, ModelError> {
    let layers = shapes
        .iter()
        .map(|s| DenseLayer::zeros(s.cols, s.rows, s.activation))
        .collect();
    let mut net = Mlp::new(layers)?;
    net.set_params(params)?;
    Ok(net)
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        let m = &self.model;
        let nets = [m.encoder(), m.decoder(), m.discriminator()];
        let param_count: usize = nets.iter().map(|n| n.param_count()).sum();
        let header = Header {
            config: m.config().clone(),
            seed: m.config().seed,
            encoder: shapes(m.encoder()),
            decoder: shapes(m.decoder()),
            discriminator: shapes(m.discriminator()),
            param_count,
            preprocessor: self.preprocessor.clone(),
            split: self.split.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
        let mut out = Vec::with_capacity(PREAMBLE + json.len() + 8 * param_count);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for net in nets {
            for p in net.params() {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        if bytes.len() < PREAMBLE || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!(
                "unsupported format version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let body = &bytes[PREAMBLE..];
        let header_len = usize::try_from(header_len)
            .ok()
            .filter(|&n| n <= body.len())
            .ok_or_else(|| bad("header length exceeds file size"))?;
        let header: Header =
            serde_json::from_slice(&body[..header_len]).map_err(|e| bad(format!("header: {e}")))?;
        if header.seed != header.config.seed {
            return Err(bad("header seed disagrees with config seed"));
        }
        let raw = &body[header_len..];
        if raw.len() != 8 * header.param_count {
            return Err(bad(format!(
                "expected {} parameter bytes, found {}",
                8 * header.param_count,
                raw.len()
            )));
        }
        let params: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let count = |s: &[LayerShape]| s.iter().map(|l| l.rows * (l.cols + 1)).sum::<usize>();
        let (ne, nd) = (count(&header.encoder), count(&header.decoder));
        if ne + nd + count(&header.discriminator) != header.param_count {
            return Err(bad("layer shapes disagree with parameter count"));
        }
        let encoder = rebuild(&header.encoder, &params[..ne])?;
        let decoder = rebuild(&header.decoder, &params[ne..ne + nd])?;
        let discriminator = rebuild(&header.discriminator, &params[ne + nd..])?;
        let model = FaaeModel::from_networks(header.config, encoder, decoder, discriminator)?;
        Ok(Self {
            model,
            preprocessor: header.preprocessor,
            split: header.split,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        crate::io::write_atomic(path, &self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

//! JSON run configurations and the run manifest.
//!
//! A config file is either a bare command config or a run manifest
//! (`{"command": …, "config": …}`) previously written by the same command.
//! Unknown keys are errors.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use faae::data::SynthConfig;
use faae::eval::EvalConfig;
use faae::model::ModelConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthRun {
    pub synth: SynthConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRun {
    pub dataset: PathBuf,
    #[serde(default = "default_fraction")]
    pub split_fraction: f64,
    #[serde(default)]
    pub model: ModelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRun {
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    /// Seeds bootstrap and effect-size resampling; defaults to the
    /// checkpoint's training seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    FocalGrid,
    SampleSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRun {
    pub dataset: PathBuf,
    pub mode: SweepMode,
    #[serde(default = "default_fraction")]
    pub split_fraction: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Stratified resampling of one fixed test set.
    #[default]
    Bootstrap,
    /// Redraw the train/test split in every replicate.
    Resplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRun {
    pub dataset: PathBuf,
    #[serde(default = "default_fraction")]
    pub split_fraction: f64,
    #[serde(default)]
    pub protocol: Protocol,
    /// Shared settings; `variant` is overridden per row.
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_fraction() -> f64 {
    0.8
}

fn default_alphas() -> Vec<f64> {
    vec![0.2, 0.5, 0.8]
}

fn default_gammas() -> Vec<f64> {
    vec![0.0, 2.0, 15.0]
}

fn default_sizes() -> Vec<usize> {
    (1..=7).map(|k| 200 * k).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest<T> {
    command: String,
    config: T,
}

/// Parses `text` as a `command` config or a manifest of the same command.
pub fn parse_config<T: DeserializeOwned>(text: &str, command: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let is_manifest = value
        .as_object()
        .is_some_and(|o| o.contains_key("command") && o.contains_key("config") && o.len() == 2);
    if is_manifest {
        let written_by = value["command"].as_str().unwrap_or_default();
        if written_by != command {
            bail!("manifest was written by `{written_by}`, not `{command}`");
        }
        let m: Manifest<T> = serde_json::from_value(value).context("invalid run manifest")?;
        Ok(m.config)
    } else {
        serde_json::from_value(value).context("invalid config")
    }
}

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => load_required(p, command),
    }
}

pub fn load_required<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text, command).with_context(|| format!("in {}", path.display()))
}

/// Makes `path` absolute so a manifest stays valid from any directory.
pub fn absolutize(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).with_context(|| format!("cannot resolve {}", path.display()))
}

pub fn manifest_json<T: Serialize>(command: &str, config: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Manifest {
        command: command.to_string(),
        config,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

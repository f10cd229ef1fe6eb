//! Deviation scoring, detection metrics, bootstrap aggregation, per-region
//! effect sizes, and the focal-parameter and training-size sweeps.

mod bootstrap;
mod deviation;
mod effects;
mod metrics;
mod report;
mod sweep;

pub use bootstrap::{
    bootstrap_eval, bootstrap_replicates, point_metrics, BootstrapConfig, EvalSummary, MetricStat,
    ReplicateMetrics,
};
pub use deviation::{score_deviation, DeviationReport, Reconstructor, SampledReconstructor};
pub use effects::{region_effect_sizes, RegionEffect};
pub use metrics::{auroc, sensitivity_specificity, ThresholdMetrics, ThresholdRule};
pub use report::{
    write_deviations_csv, write_effects_csv, write_param_sweep_csv, write_regions_csv,
    write_size_sweep_csv,
};
pub use sweep::{
    nested_subsets, param_sweep, resplit_eval, run_experiment, sample_size_sweep, score_with,
    EvalConfig, Experiment, ParamCell, SizeRow,
};

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("metrics need both HC and AD samples")]
    SingleClass,
    #[error("degenerate scores: every subject has the same deviation")]
    DegenerateScores,
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error("pooled std is zero in region {0}; effect size undefined")]
    ZeroPooledStd(String),
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
}

impl From<NnError> for EvalError {
    fn from(e: NnError) -> Self {
        EvalError::Model(ModelError::Nn(e))
    }
}

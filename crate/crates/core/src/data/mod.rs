//! Cohort representation, CSV ingestion, covariate encoding, training-only
//! normalization, the healthy-control split protocol, and a synthetic
//! cohort generator with planted affected regions.

mod covariates;
mod csv_io;
mod normalize;
mod split;
mod synth;
mod types;

pub use covariates::{
    encode_covariates, icv_deciles, CovariateEncoder, AGE_BINS, COVARIATE_DIM, DEFAULT_AGE_EDGES,
    GENDER_BINS, ICV_BINS,
};
pub use csv_io::{load_csv, read_csv, read_csv_with_regions, write_csv, N_REGIONS};
pub use normalize::{fit_normalization, Normalization};
pub use split::{prepare, split, PreparedSplit, SplitRecord};
pub use synth::{generate_synthetic, SynthConfig, SynthMetadata, SyntheticCohort};
pub use types::{Cohort, Dataset, Demographics, Gender, Label, Preprocessor, Sample, Subject};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("column {0} missing")]
    MissingColumn(String),
    #[error("unexpected column {0}")]
    UnexpectedColumn(String),
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("row {row}: expected {expected} fields, found {actual}")]
    RowLength {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-numeric value {value:?} in column {column} at row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown label at row {row}: {value:?} (expected HC or AD)")]
    UnknownLabel { row: usize, value: String },
    #[error("unknown gender at row {row}: {value:?} (expected F or M)")]
    UnknownGender { row: usize, value: String },
    #[error("feature {0} is constant across the training set")]
    ConstantFeature(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("invalid covariate input: {0}")]
    InvalidCovariate(String),
    #[error("invalid data: {0}")]
    Invalid(String),
}

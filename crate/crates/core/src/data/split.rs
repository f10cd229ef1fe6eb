use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nn::{streams, RngStream};

use super::{Cohort, DataError, Dataset, Label, Preprocessor};

/// Which subjects went where, with a content hash so that runs sharing a
/// split can be verified to do so.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub fraction: f64,
    pub n_total: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Hex SHA-256 over the train and test subject records (id, label,
    /// demographics and feature bits).
    pub hash: String,
}

impl SplitRecord {
    /// Re-derives the split on `cohort`, failing if it is not the cohort the
    /// record was made from.
    pub fn apply(&self, cohort: &Cohort) -> Result<(Cohort, Cohort), DataError> {
        let in_range = |idx: &[usize]| idx.iter().all(|&i| i < cohort.len());
        if cohort.len() != self.n_total
            || !in_range(&self.train_indices)
            || !in_range(&self.test_indices)
            || split_hash(cohort, &self.train_indices, &self.test_indices) != self.hash
        {
            return Err(DataError::Invalid(
                "dataset does not match the recorded split".into(),
            ));
        }
        Ok((
            cohort.select(&self.train_indices),
            cohort.select(&self.test_indices),
        ))
    }
}

fn split_hash(cohort: &Cohort, train: &[usize], test: &[usize]) -> String {
    let mut h = Sha256::new();
    for (tag, idx) in [(b"train".as_slice(), train), (b"test".as_slice(), test)] {
        h.update(tag);
        for &i in idx {
            let s = &cohort.subjects()[i];
            h.update(b"\n");
            h.update(s.subject_id.as_bytes());
            h.update(s.label.as_str().as_bytes());
            h.update(s.demographics.gender.as_str().as_bytes());
            for v in s.features.iter().chain([&s.demographics.age, &s.demographics.icv]) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.update(b"\0");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Number of training HC for `n_hc` controls, i.e. `floor(fraction · n_hc)`
/// robust to representation error in `fraction`.
pub(crate) fn train_count(fraction: f64, n_hc: usize) -> usize {
    (fraction * n_hc as f64 + 1e-9).floor() as usize
}

/// Draws `floor(fraction · |HC|)` healthy controls for training; the test
/// set holds the remaining controls and every disease sample. Both keep the
/// original row order.
pub fn split(
    cohort: &Cohort,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(Cohort, Cohort, SplitRecord), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::Invalid(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let mut hc: Vec<usize> = (0..cohort.len())
        .filter(|&i| cohort.subjects()[i].label == Label::Hc)
        .collect();
    let n_ad = cohort.len() - hc.len();
    if hc.len() < 5 || n_ad < 1 {
        return Err(DataError::TooFewSamples(format!(
            "split needs at least 5 HC and 1 AD, got {} HC and {n_ad} AD",
            hc.len()
        )));
    }
    let n_train = train_count(fraction, hc.len());
    rng.shuffle(&mut hc);
    let mut train_indices = hc[..n_train].to_vec();
    train_indices.sort_unstable();
    let mut in_train = vec![false; cohort.len()];
    train_indices.iter().for_each(|&i| in_train[i] = true);
    let test_indices: Vec<usize> = (0..cohort.len()).filter(|&i| !in_train[i]).collect();
    let record = SplitRecord {
        seed: rng.seed(),
        fraction,
        n_total: cohort.len(),
        hash: split_hash(cohort, &train_indices, &test_indices),
        train_indices,
        test_indices,
    };
    let (train, test) = record.apply(cohort)?;
    Ok((train, test, record))
}

/// Split, fitted preprocessing, and both normalized partitions.
#[derive(Clone, Debug)]
pub struct PreparedSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub preprocessor: Preprocessor,
    pub record: SplitRecord,
}

/// Splits with the seed's split stream, fits preprocessing on the training
/// controls, and applies it to both partitions.
pub fn prepare(cohort: &Cohort, fraction: f64, seed: u64) -> Result<PreparedSplit, DataError> {
    let mut rng = RngStream::with_stream(seed, streams::SPLIT);
    let (train, test, record) = split(cohort, fraction, &mut rng)?;
    let preprocessor = Preprocessor::fit(&train)?;
    Ok(PreparedSplit {
        train: preprocessor.apply(&train)?,
        test: preprocessor.apply(&test)?,
        preprocessor,
        record,
    })
}

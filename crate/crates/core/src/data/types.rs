use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CovariateEncoder, DataError, Normalization};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "AD")]
    Ad,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hc => "HC",
            Label::Ad => "AD",
        }
    }

    pub fn is_disease(self) -> bool {
        self == Label::Ad
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "HC" => Ok(Label::Hc),
            "AD" => Ok(Label::Ad),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
        }
    }
}

impl FromStr for Gender {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "F" => Ok(Gender::F),
            "M" => Ok(Gender::M),
            _ => Err(()),
        }
    }
}

/// Raw demographic covariates; `icv` in cm³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: f64,
    pub gender: Gender,
    pub icv: f64,
}

/// One subject-period as ingested: raw regional features and demographics.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub subject_id: String,
    pub features: Vec<f64>,
    pub demographics: Demographics,
    pub label: Label,
}

/// Unnormalized subjects sharing one region layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    subjects: Vec<Subject>,
    region_names: Vec<String>,
}

impl Cohort {
    pub fn new(subjects: Vec<Subject>, region_names: Vec<String>) -> Result<Self, DataError> {
        check_region_names(&region_names)?;
        for s in &subjects {
            if s.features.len() != region_names.len() {
                return Err(DataError::Invalid(format!(
                    "subject {} has {} features, expected {}",
                    s.subject_id,
                    s.features.len(),
                    region_names.len()
                )));
            }
        }
        Ok(Self {
            subjects,
            region_names,
        })
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn region_names(&self) -> &[String] {
        &self.region_names
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.subjects.iter().filter(|s| s.label == label).count()
    }

    /// Subset by index, keeping the region layout.
    pub fn select(&self, indices: &[usize]) -> Cohort {
        Cohort {
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
            region_names: self.region_names.clone(),
        }
    }
}

fn check_region_names(names: &[String]) -> Result<(), DataError> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(DataError::Invalid(format!("region name {n} is not unique")));
        }
    }
    Ok(())
}

/// A normalized, covariate-encoded subject ready for the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub subject_id: String,
    pub features: Vec<f64>,
    pub covariates: Vec<f64>,
    pub label: Label,
}

/// Statistics fitted on the training split and applied to every split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub normalization: Normalization,
    pub covariates: CovariateEncoder,
}

impl Preprocessor {
    /// Fits feature normalization and ICV deciles on `train` (healthy
    /// controls only).
    pub fn fit(train: &Cohort) -> Result<Self, DataError> {
        if let Some(s) = train.subjects().iter().find(|s| s.label != Label::Hc) {
            return Err(DataError::Invalid(format!(
                "preprocessing must be fit on HC only; {} is {}",
                s.subject_id, s.label
            )));
        }
        let normalization = super::fit_normalization(train.subjects(), train.region_names())?;
        let icvs: Vec<f64> = train.subjects().iter().map(|s| s.demographics.icv).collect();
        let covariates = CovariateEncoder::fit(&icvs)?;
        Ok(Self {
            normalization,
            covariates,
        })
    }

    pub fn apply(&self, cohort: &Cohort) -> Result<Dataset, DataError> {
        if cohort.region_names().len() != self.normalization.len() {
            return Err(DataError::Invalid(format!(
                "cohort has {} regions, normalization fitted on {}",
                cohort.region_names().len(),
                self.normalization.len()
            )));
        }
        let samples = cohort
            .subjects()
            .iter()
            .map(|s| {
                let mut features = s.features.clone();
                self.normalization.apply(&mut features);
                Ok(Sample {
                    subject_id: s.subject_id.clone(),
                    features,
                    covariates: self.covariates.encode(&s.demographics)?,
                    label: s.label,
                })
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Ok(Dataset {
            samples,
            normalization: self.normalization.clone(),
            region_names: cohort.region_names().to_vec(),
        })
    }
}

/// Normalized samples together with the statistics that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    normalization: Normalization,
    region_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        samples: Vec<Sample>,
        normalization: Normalization,
        region_names: Vec<String>,
    ) -> Result<Self, DataError> {
        check_region_names(&region_names)?;
        if normalization.len() != region_names.len() {
            return Err(DataError::Invalid("normalization width differs from region count".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.features.len() != region_names.len()) {
            return Err(DataError::Invalid(format!(
                "sample {} has {} features, expected {}",
                s.subject_id,
                s.features.len(),
                region_names.len()
            )));
        }
        Ok(Self {
            samples,
            normalization,
            region_names,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn region_names(&self) -> &[String] {
        &self.region_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            normalization: self.normalization.clone(),
            region_names: self.region_names.clone(),
        }
    }

    pub fn filter(&self, label: Label) -> Dataset {
        let idx: Vec<usize> = (0..self.samples.len())
            .filter(|&i| self.samples[i].label == label)
            .collect();
        self.select(&idx)
    }
}

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Cohort, DataError, Demographics, Gender, Label, Subject};

/// Region count of the on-disk schema.
pub const N_REGIONS: usize = 100;

fn region_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("roi_{i}")).collect()
}

/// Reads `subject_id, roi_0 … roi_99, age, gender, icv, label` from `path`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Cohort, DataError> {
    read_csv(File::open(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Cohort, DataError> {
    read_csv_with_regions(reader, N_REGIONS)
}

/// Like [`read_csv`] with `roi_0 … roi_{n_regions-1}` columns. Columns may
/// appear in any order; row numbers in errors count data rows from 1.
pub fn read_csv_with_regions<R: Read>(reader: R, n_regions: usize) -> Result<Cohort, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(header.len());
    for (i, name) in header.iter().enumerate() {
        if index.insert(name, i).is_some() {
            return Err(DataError::DuplicateColumn(name.to_string()));
        }
    }
    let names = region_names(n_regions);
    let mut expected: Vec<&str> = vec!["subject_id"];
    expected.extend(names.iter().map(String::as_str));
    expected.extend(["age", "gender", "icv", "label"]);
    let mut cols = Vec::with_capacity(expected.len());
    for name in &expected {
        match index.get(name) {
            Some(&i) => cols.push(i),
            None => return Err(DataError::MissingColumn(name.to_string())),
        }
    }
    if header.len() != expected.len() {
        let extra = header
            .iter()
            .find(|h| !expected.contains(h))
            .unwrap_or_default();
        return Err(DataError::UnexpectedColumn(extra.to_string()));
    }

    let mut subjects = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(DataError::RowLength {
                row,
                expected: header.len(),
                actual: record.len(),
            });
        }
        let field = |pos: usize| &record[cols[pos]];
        let number = |pos: usize| -> Result<f64, DataError> {
            let raw = field(pos);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(DataError::NonNumeric {
                    row,
                    column: expected[pos].to_string(),
                    value: raw.to_string(),
                }),
            }
        };
        let features = (1..=n_regions).map(number).collect::<Result<Vec<_>, _>>()?;
        let age = number(n_regions + 1)?;
        let gender_raw = field(n_regions + 2);
        let gender: Gender = gender_raw.parse().map_err(|_| DataError::UnknownGender {
            row,
            value: gender_raw.to_string(),
        })?;
        let icv = number(n_regions + 3)?;
        let label_raw = field(n_regions + 4);
        let label: Label = label_raw.parse().map_err(|_| DataError::UnknownLabel {
            row,
            value: label_raw.to_string(),
        })?;
        subjects.push(Subject {
            subject_id: field(0).to_string(),
            features,
            demographics: Demographics { age, gender, icv },
            label,
        });
    }
    Cohort::new(subjects, names)
}

/// Writes `cohort` in the on-disk schema with `roi_k` column names and
/// shortest round-trip float formatting.
pub fn write_csv<W: Write>(cohort: &Cohort, writer: W) -> Result<(), DataError> {
    let n = cohort.region_names().len();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec!["subject_id".into()];
    header.extend(region_names(n));
    header.extend(["age", "gender", "icv", "label"].map(String::from));
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(n + 5);
    for s in cohort.subjects() {
        record.clear();
        record.push(s.subject_id.clone());
        record.extend(s.features.iter().map(|v| v.to_string()));
        record.push(s.demographics.age.to_string());
        record.push(s.demographics.gender.as_str().to_string());
        record.push(s.demographics.icv.to_string());
        record.push(s.label.as_str().to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

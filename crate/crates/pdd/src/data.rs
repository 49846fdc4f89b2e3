//! CSV ingestion and emission.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pdd_core::Sample;

/// Which CSV columns feed which role.
#[derive(Debug, Clone, PartialEq)]
pub struct Bindings {
    pub running: String,
    pub outcome: String,
    pub treatment: Option<String>,
    pub placebo_outcomes: Vec<String>,
    pub placebo_treatments: Vec<String>,
}

impl Default for Bindings {
    /// Matches the header written by [`write_csv`] for a single placebo pair.
    fn default() -> Self {
        Self {
            running: "d".into(),
            outcome: "y".into(),
            treatment: None,
            placebo_outcomes: vec!["w1".into()],
            placebo_treatments: vec!["z1".into()],
        }
    }
}

impl Bindings {
    fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.running.as_str(), self.outcome.as_str()];
        cols.extend(self.treatment.as_deref());
        cols.extend(self.placebo_outcomes.iter().map(String::as_str));
        cols.extend(self.placebo_treatments.iter().map(String::as_str));
        cols
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    /// `row` counts data records from 1; the header is not a row.
    #[error("parse error at row {row}, column `{column}`: {detail}")]
    ParseError { row: usize, column: String, detail: String },
    #[error("no usable rows remain ({dropped} dropped)")]
    EmptyAfterFiltering { dropped: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub sample: Sample,
    /// Rows skipped because a bound column was empty or non-numeric.
    pub dropped_rows: usize,
}

pub fn load_csv(path: &Path, bindings: &Bindings) -> Result<Loaded, DataError> {
    let file = File::open(path).map_err(|source| DataError::Open { path: path.display().to_string(), source })?;
    read_csv(file, bindings)
}

/// Reads a headed CSV. Empty, non-numeric and non-finite cells in a bound
/// column drop the row; a treatment value other than 0 or 1 is an error.
pub fn read_csv<R: Read>(reader: R, bindings: &Bindings) -> Result<Loaded, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let names = bindings.columns();
    let index: Vec<usize> = names
        .iter()
        .map(|name| header.iter().position(|h| h == *name).ok_or_else(|| DataError::MissingColumn(name.to_string())))
        .collect::<Result<_, _>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut dropped = 0;
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    let mut values = vec![0.0; names.len()];
    let treatment_slot = bindings.treatment.as_ref().map(|_| 2);
    while rdr.read_record(&mut record)? {
        row += 1;
        let mut keep = true;
        for (slot, &col) in index.iter().enumerate() {
            match record.get(col).and_then(|cell| cell.parse::<f64>().ok()).filter(|v| v.is_finite()) {
                Some(v) => values[slot] = v,
                None => {
                    keep = false;
                    break;
                }
            }
        }
        if !keep {
            dropped += 1;
            continue;
        }
        if let Some(slot) = treatment_slot {
            if values[slot] != 0.0 && values[slot] != 1.0 {
                return Err(DataError::ParseError {
                    row,
                    column: names[slot].to_string(),
                    detail: format!("treatment must be 0 or 1, found {}", values[slot]),
                });
            }
        }
        for (col, v) in columns.iter_mut().zip(&values) {
            col.push(*v);
        }
    }
    if columns[0].is_empty() {
        return Err(DataError::EmptyAfterFiltering { dropped });
    }

    let mut it = columns.into_iter();
    let running = it.next().unwrap();
    let outcome = it.next().unwrap();
    let treatment = bindings.treatment.as_ref().map(|_| it.next().unwrap());
    let placebo_outcomes: Vec<Vec<f64>> = it.by_ref().take(bindings.placebo_outcomes.len()).collect();
    let placebo_treatments: Vec<Vec<f64>> = it.collect();
    let sample = Sample { running, outcome, treatment, placebo_outcomes, placebo_treatments };
    Ok(Loaded { sample, dropped_rows: dropped })
}

/// Writes `d, y, [a], w1..wq, z1..zq`. Values use the shortest decimal that
/// parses back to the same `f64`.
pub fn write_csv<W: Write>(sample: &Sample, out: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(out);
    let q = sample.placebo_outcomes.len();
    let mut header = vec!["d".to_string(), "y".to_string()];
    if sample.treatment.is_some() {
        header.push("a".into());
    }
    header.extend((1..=q).map(|j| format!("w{j}")));
    header.extend((1..=sample.placebo_treatments.len()).map(|j| format!("z{j}")));
    wtr.write_record(&header)?;

    let mut cols: Vec<&[f64]> = vec![&sample.running, &sample.outcome];
    cols.extend(sample.treatment.as_deref());
    cols.extend(sample.placebo_outcomes.iter().map(Vec::as_slice));
    cols.extend(sample.placebo_treatments.iter().map(Vec::as_slice));
    let mut fields = Vec::with_capacity(cols.len());
    for i in 0..sample.running.len() {
        fields.clear();
        fields.extend(cols.iter().map(|c| c[i].to_string()));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Bindings that read back what [`write_csv`] wrote for `sample`.
pub fn bindings_for(sample: &Sample) -> Bindings {
    Bindings {
        treatment: sample.treatment.as_ref().map(|_| "a".into()),
        placebo_outcomes: (1..=sample.placebo_outcomes.len()).map(|j| format!("w{j}")).collect(),
        placebo_treatments: (1..=sample.placebo_treatments.len()).map(|j| format!("z{j}")).collect(),
        ..Bindings::default()
    }
}

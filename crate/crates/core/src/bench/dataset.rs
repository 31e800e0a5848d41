//! Tabular datasets: CSV ingestion, export and majority undersampling.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Feature matrix with binary labels and a free-form provenance note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        x: Matrix,
        y: Vec<u8>,
        feature_names: Vec<String>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::data(format!(
                "{} labels for {} rows",
                y.len(),
                x.rows()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(Error::data(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.cols()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::data(format!(
                "label {} at row {i} is not binary",
                y[i]
            )));
        }
        if let Some(p) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite value at row {}, column '{}'",
                p / x.cols(),
                feature_names[p % x.cols()]
            )));
        }
        Ok(Dataset {
            name: name.into(),
            x,
            y,
            feature_names,
            provenance: provenance.into(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v == 1).count();
        (self.y.len() - pos, pos)
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Writes a header row, then features followed by the label column.
    pub fn write_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (row, &label) in self.x.iter_rows().zip(&self.y) {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(label.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    DropRows,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Defaults to the last column when `None`.
    pub label_column: Option<String>,
    /// Label value mapped to 1. When `None`, the labels must already be 0/1.
    pub positive_class: Option<String>,
    pub delimiter: u8,
    pub missing: MissingPolicy,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: None,
            positive_class: None,
            delimiter: b',',
            missing: MissingPolicy::Reject,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "?" | "null" | "none"
    )
}

/// Reads a headered CSV file; every non-label column must be numeric.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::data(format!(
            "{}: need at least one feature column and a label column",
            path.display()
        )));
    }
    let label_idx = match &options.label_column {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("{}: no column named '{name}'", path.display())))?,
        None => header.len() - 1,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut dropped = 0usize;
    'rows: for (r, record) in reader.records().enumerate() {
        let record = record?;
        let line = r + 2;
        if record.len() != header.len() {
            return Err(Error::data(format!(
                "{}: line {line} has {} fields, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (j, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                match options.missing {
                    MissingPolicy::Reject => {
                        return Err(Error::data(format!(
                            "{}: missing value at line {line}, column '{}'",
                            path.display(),
                            header[j]
                        )))
                    }
                    MissingPolicy::DropRows => {
                        dropped += 1;
                        continue 'rows;
                    }
                }
            }
            if j == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "{}: non-numeric value '{cell}' at line {line}, column '{}'",
                    path.display(),
                    header[j]
                ))
            })?;
            row.push(v);
        }
        let label = &record[label_idx];
        let bit = match &options.positive_class {
            Some(pos) => u8::from(label == pos),
            None => match label.parse::<f64>() {
                Ok(0.0) => 0,
                Ok(1.0) => 1,
                _ => {
                    return Err(Error::data(format!(
                        "{}: label '{label}' at line {line} is not 0/1 (set a positive class)",
                        path.display()
                    )))
                }
            },
        };
        data.extend(row);
        y.push(bit);
    }
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} rows with missing values",
            path.display()
        );
    }
    let rows = y.len();
    let x = Matrix::from_vec(rows, feature_names.len(), data)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, x, y, feature_names, format!("csv:{}", path.display()))
}

/// Randomly drops majority rows until `minority / majority` reaches `ratio`
/// (majority kept = floor(minority / ratio)). Identity when already there.
pub fn undersample(dataset: &Dataset, ratio: f64, seed_root: u64) -> Result<Dataset> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "undersampling ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let (neg, pos) = dataset.class_counts();
    let (minority_label, minority, majority) = if pos <= neg {
        (1u8, pos, neg)
    } else {
        (0u8, neg, pos)
    };
    let target = ((minority as f64) / ratio + 1e-9).floor() as usize;
    if majority <= target {
        log::info!(
            "undersampling to ratio {ratio} leaves '{}' unchanged ({minority}/{majority})",
            dataset.name
        );
        return Ok(dataset.clone());
    }
    let mut majority_rows: Vec<usize> = (0..dataset.n_samples())
        .filter(|&i| dataset.y[i] != minority_label)
        .collect();
    let mut rng = seed::rng(seed::derive(seed_root, &[seed::stream::UNDERSAMPLE]));
    majority_rows.shuffle(&mut rng);
    majority_rows.truncate(target);
    let mut keep: Vec<usize> = (0..dataset.n_samples())
        .filter(|&i| dataset.y[i] == minority_label)
        .chain(majority_rows)
        .collect();
    keep.sort_unstable();
    let mut out = dataset.subset(&keep);
    out.provenance = format!(
        "{}; undersampled to ratio {ratio} (seed {seed_root})",
        dataset.provenance
    );
    Ok(out)
}

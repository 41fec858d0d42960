//! Prediction records: one answered question with its stated confidence.
//!
//! Correctness is always derived by comparing normalized answer strings,
//! never stored, so a record can't drift out of sync with its own answers.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// One answered question: predicted answer, true answer, confidence in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predicted_answer: String,
    pub true_answer: String,
    pub confidence: f64,
}

impl PredictionRecord {
    pub fn new(
        id: impl Into<String>,
        predicted_answer: impl Into<String>,
        true_answer: impl Into<String>,
        confidence: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) || !confidence.is_finite() {
            return Err(CalibError::InvalidConfidence { value: confidence });
        }
        Ok(Self {
            id: id.into(),
            predicted_answer: predicted_answer.into(),
            true_answer: true_answer.into(),
            confidence,
        })
    }

    /// Whether the prediction matches the truth after normalization.
    pub fn is_correct(&self) -> bool {
        normalize_answer(&self.predicted_answer) == normalize_answer(&self.true_answer)
    }
}

/// Canonical answer form: trim, case-fold, strip surrounding punctuation.
///
/// Deterministic and auditable; anything semantic belongs to a judge.
pub fn normalize_answer(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Read a JSONL prediction log. Errors carry the 1-based line number.
pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path)?;
    read_records_from(std::io::BufReader::new(file))
}

pub fn read_records_from(reader: impl BufRead) -> Result<Vec<PredictionRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| CalibError::MalformedLine {
                line: i + 1,
                message: e.to_string(),
            })?;
        if !(0.0..=1.0).contains(&rec.confidence) || !rec.confidence.is_finite() {
            return Err(CalibError::MalformedLine {
                line: i + 1,
                message: format!("confidence {} outside [0,1]", rec.confidence),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

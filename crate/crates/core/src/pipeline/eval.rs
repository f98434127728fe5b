//! Extraction scoring against a hand-labeled gold corpus.
//!
//! Precision is correct / detected, recall is correct / gold-total, and
//! F = 2PR / (P + R). A prediction is correct when its page URL, normalized
//! product name, and whitespace-normalized price text all agree with a gold
//! row; each gold row can confirm at most one prediction.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crawler::normalize_url;
use crate::text::{normalize_name, normalize_ws};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold corpus is empty")]
    EmptyGold,
    #[error("gold file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("gold file {path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// One labeled page: the product name and actual-price text a correct
/// extraction must produce for this URL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldRow {
    pub url: String,
    pub gold_name: String,
    pub gold_price_text: String,
}

/// One extracted (page, name, price) triple under evaluation.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub url: String,
    pub name: String,
    pub price_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub correct: usize,
    pub detected: usize,
    pub gold_total: usize,
    /// Fractions in [0, 1].
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
}

impl EvalReport {
    /// Scores from raw counts. Division-by-zero cases degrade to 0 rather
    /// than NaN: no detections means precision 0, and F is 0 when both
    /// component scores are 0.
    pub fn from_counts(
        correct: usize,
        detected: usize,
        gold_total: usize,
    ) -> Result<Self, EvalError> {
        if gold_total == 0 {
            return Err(EvalError::EmptyGold);
        }
        let recall = correct as f64 / gold_total as f64;
        let precision = if detected == 0 {
            0.0
        } else {
            correct as f64 / detected as f64
        };
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Ok(EvalReport {
            correct,
            detected,
            gold_total,
            recall,
            precision,
            f_measure,
        })
    }
}

fn match_url(a: &str, b: &str) -> bool {
    match (normalize_url(a), normalize_url(b)) {
        (Some(na), Some(nb)) => na == nb,
        _ => a == b,
    }
}

/// Scores predictions against the gold rows. Every prediction counts as a
/// detection; it is correct only if an unconsumed gold row matches it, so
/// duplicate predictions of one labeled page cost precision.
pub fn evaluate(predictions: &[Prediction], gold: &[GoldRow]) -> Result<EvalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut consumed = vec![false; gold.len()];
    let mut correct = 0usize;
    for pred in predictions {
        let pred_name = normalize_name(&pred.name);
        let pred_price = normalize_ws(&pred.price_text);
        let hit = gold.iter().enumerate().position(|(i, row)| {
            !consumed[i]
                && match_url(&pred.url, &row.url)
                && normalize_name(&row.gold_name) == pred_name
                && normalize_ws(&row.gold_price_text) == pred_price
        });
        if let Some(i) = hit {
            consumed[i] = true;
            correct += 1;
        }
    }
    EvalReport::from_counts(correct, predictions.len(), gold.len())
}

/// Reads a gold corpus: one JSON object per line.
pub fn read_gold(path: impl AsRef<Path>) -> Result<Vec<GoldRow>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line).map_err(|source| EvalError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(rows)
}

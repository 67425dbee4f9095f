use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::write_jsonl;

/// Probability at or above which a post is labelled positive.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Binary sentiment of one post. `probability` is the confidence of label 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub post_id: String,
    pub label: u8,
    pub probability: f64,
}

impl SentimentLabel {
    pub fn from_probability(post_id: impl Into<String>, probability: f64) -> Self {
        Self {
            post_id: post_id.into(),
            label: u8::from(probability >= DECISION_THRESHOLD),
            probability,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    post_id: String,
    label: i64,
    probability: f64,
}

/// Reads a `{post_id, label, probability}` JSONL file. Any line with a label
/// outside {0,1} or a probability outside [0,1] rejects the whole file.
pub fn ingest_labels(path: &Path) -> Result<Vec<SentimentLabel>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::BadLine {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLabel = serde_json::from_str(line).map_err(|e| bad(line_no, e.to_string()))?;
        let label = match raw.label {
            0 => 0,
            1 => 1,
            other => return Err(bad(line_no, format!("label {other} outside {{0,1}}"))),
        };
        if !(0.0..=1.0).contains(&raw.probability) {
            return Err(bad(line_no, format!("probability {} outside [0,1]", raw.probability)));
        }
        out.push(SentimentLabel {
            post_id: raw.post_id,
            label,
            probability: raw.probability,
        });
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[SentimentLabel]) -> Result<()> {
    write_jsonl(path, labels)
}

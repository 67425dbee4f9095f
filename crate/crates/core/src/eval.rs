//! Trend classification of price forecasts and the usual binary metrics.
//!
//! A day is positive when the price is "rising or steady" relative to the
//! previous day's actual open, negative when it falls.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StockSeries;
use crate::lstm::Prediction;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMode {
    /// `next ≥ prev` is positive.
    #[default]
    RisingOrSteady,
    /// Only `next > prev` is positive.
    StrictRise,
}

impl TrendMode {
    fn positive(self, next: f64, prev: f64) -> bool {
        match self {
            TrendMode::RisingOrSteady => next >= prev,
            TrendMode::StrictRise => next > prev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendDay {
    pub date: NaiveDate,
    pub predicted: f64,
    pub actual: f64,
    pub prev_actual: f64,
    pub pred_trend: bool,
    pub actual_trend: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrendLabels {
    pub days: Vec<TrendDay>,
    /// Predictions without a prior-day actual.
    pub dropped: usize,
}

impl TrendLabels {
    pub fn predicted(&self) -> Vec<bool> {
        self.days.iter().map(|d| d.pred_trend).collect()
    }

    pub fn actual(&self) -> Vec<bool> {
        self.days.iter().map(|d| d.actual_trend).collect()
    }
}

/// Both trends are taken against the previous day's actual value.
pub fn trend_labels(
    predictions: &[Prediction],
    prev_actual: &[Option<f64>],
    mode: TrendMode,
) -> Result<TrendLabels> {
    if predictions.len() != prev_actual.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: prev_actual.len(),
        });
    }
    let mut out = TrendLabels::default();
    for (p, prev) in predictions.iter().zip(prev_actual) {
        let Some(prev) = *prev else {
            out.dropped += 1;
            continue;
        };
        out.days.push(TrendDay {
            date: p.date,
            predicted: p.predicted,
            actual: p.actual,
            prev_actual: prev,
            pred_trend: mode.positive(p.predicted, prev),
            actual_trend: mode.positive(p.actual, prev),
        });
    }
    Ok(out)
}

/// The open of the trading day before each prediction date.
pub fn prior_opens(predictions: &[Prediction], stock: &StockSeries) -> Vec<Option<f64>> {
    predictions
        .iter()
        .map(|p| match stock.position(p.date) {
            Some(i) if i > 0 => Some(stock.bars()[i - 1].open),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same tallies with the positive class swapped.
    pub fn complement(&self) -> Self {
        Self {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }
}

pub fn confusion(predicted: &[bool], actual: &[bool]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (p, a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => m.tp += 1,
            (false, true) => m.fn_ += 1,
            (true, false) => m.fp += 1,
            (false, false) => m.tn += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub mse: Option<f64>,
    /// Metrics whose denominator was zero and were reported as 0.
    pub undefined: Vec<String>,
}

fn ratio(num: f64, den: f64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

pub fn metrics(m: &ConfusionMatrix) -> Result<MetricsReport> {
    if m.total() == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let mut undefined = Vec::new();
    let (tp, fn_, fp, tn) = (m.tp as f64, m.fn_ as f64, m.fp as f64, m.tn as f64);
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
    let f1 = ratio(2.0 * precision * recall, precision + recall, "f1", &mut undefined);
    let accuracy = (tp + tn) / m.total() as f64;
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        accuracy,
        mse: None,
        undefined,
    })
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Empty("series"));
    }
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sse / predicted.len() as f64)
}

/// `precision_a / precision_b − 1`; `None` when `b` has zero precision.
pub fn precision_gap(a: &MetricsReport, b: &MetricsReport) -> Option<f64> {
    (b.precision > 0.0).then(|| a.precision / b.precision - 1.0)
}

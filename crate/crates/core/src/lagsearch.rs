//! Lead-lag search between daily sentiment and a stock series.
//!
//! Sentiment is first mapped onto trading days, then paired with the target
//! column `T` trading days later; the `T` with the largest Pearson
//! coefficient wins.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PriceColumn, StockSeries};
use crate::sentiment::DailySentimentSeries;

/// Pearson product-moment correlation, computed in two passes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            available: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first series is constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second series is constant"));
    }
    let r = sxy / (sxx * syy).sqrt();
    if !r.is_finite() {
        return Err(Error::NonFinite("pearson"));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// What happens to sentiment dated on a non-trading day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Fold into the next trading day, weighted by post count.
    #[default]
    NextTradingDay,
    Drop,
}

/// What value a trading day without posts receives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    /// 0.5
    #[default]
    Neutral,
    Drop,
    CarryForward,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignOptions {
    #[serde(default)]
    pub merge: MergePolicy,
    #[serde(default)]
    pub fill: FillPolicy,
}

pub const NEUTRAL_SENTIMENT: f64 = 0.5;

/// Sentiment per trading day of `stock`. Days outside the span covered by
/// sentiment are `None`; days inside it without posts follow `opts.fill`.
pub fn align_to_trading_days(
    sentiment: &DailySentimentSeries,
    stock: &StockSeries,
    opts: AlignOptions,
) -> Vec<Option<f64>> {
    let mut acc: Vec<(f64, usize)> = vec![(0.0, 0); stock.len()];
    for (date, day) in &sentiment.entries {
        let idx = match (stock.position(*date), opts.merge) {
            (Some(i), _) => Some(i),
            (None, MergePolicy::NextTradingDay) => stock.next_trading_day(*date),
            (None, MergePolicy::Drop) => None,
        };
        if let Some(i) = idx {
            acc[i].0 += day.value * day.post_count as f64;
            acc[i].1 += day.post_count;
        }
    }

    let mut out = vec![None; stock.len()];
    let first = acc.iter().position(|a| a.1 > 0);
    let last = acc.iter().rposition(|a| a.1 > 0);
    let (Some(first), Some(last)) = (first, last) else {
        return out;
    };
    let mut carried = None;
    for i in first..=last {
        let (sum, n) = acc[i];
        out[i] = if n > 0 {
            let v = (sum / n as f64).clamp(0.0, 1.0);
            carried = Some(v);
            Some(v)
        } else {
            match opts.fill {
                FillPolicy::Neutral => Some(NEUTRAL_SENTIMENT),
                FillPolicy::Drop => None,
                FillPolicy::CarryForward => carried,
            }
        };
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignedPairs {
    /// (sentiment, target value `T` trading days later)
    pub pairs: Vec<(f64, f64)>,
    /// Trading day each sentiment value was mapped to.
    pub dates: Vec<NaiveDate>,
}

impl AlignedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn split(&self) -> (Vec<f64>, Vec<f64>) {
        self.pairs.iter().copied().unzip()
    }
}

fn pairs_from_aligned(
    aligned: &[Option<f64>],
    stock: &StockSeries,
    lag: usize,
    target: PriceColumn,
) -> AlignedPairs {
    let bars = stock.bars();
    let mut out = AlignedPairs::default();
    for (i, s) in aligned.iter().enumerate() {
        let (Some(s), Some(bar)) = (s, bars.get(i + lag)) else {
            continue;
        };
        out.pairs.push((*s, bar.value(target)));
        out.dates.push(bars[i].date);
    }
    out
}

/// Pairs each trading day's sentiment with the `target` value `lag`
/// trading days later.
pub fn shift_align(
    sentiment: &DailySentimentSeries,
    stock: &StockSeries,
    lag: usize,
    target: PriceColumn,
    opts: AlignOptions,
) -> Result<AlignedPairs> {
    let aligned = align_to_trading_days(sentiment, stock, opts);
    let pairs = pairs_from_aligned(&aligned, stock, lag, target);
    if pairs.is_empty() {
        return Err(Error::Empty("sentiment/stock overlap"));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagSelection {
    #[default]
    Signed,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagSearchConfig {
    pub t_min: usize,
    pub t_max: usize,
    pub target: PriceColumn,
    pub selection: LagSelection,
    pub align: AlignOptions,
}

impl Default for LagSearchConfig {
    fn default() -> Self {
        Self {
            t_min: 3,
            t_max: 30,
            target: PriceColumn::ChangePct,
            selection: LagSelection::Signed,
            align: AlignOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSearchResult {
    pub best_t: usize,
    pub best_r: f64,
    pub target_column: PriceColumn,
    pub correlations: BTreeMap<usize, f64>,
    pub pairs: BTreeMap<usize, usize>,
    /// Lags that could not be evaluated, with the reason.
    pub skipped: BTreeMap<usize, String>,
}

pub fn search_lag(
    sentiment: &DailySentimentSeries,
    stock: &StockSeries,
    config: &LagSearchConfig,
) -> Result<LagSearchResult> {
    if config.t_min > config.t_max {
        return Err(Error::Invalid(format!(
            "lag range {}..{} is empty",
            config.t_min, config.t_max
        )));
    }
    let aligned = align_to_trading_days(sentiment, stock, config.align);
    let mut correlations = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    let mut best: Option<(usize, f64, f64)> = None;

    for lag in config.t_min..=config.t_max {
        let aligned_pairs = pairs_from_aligned(&aligned, stock, lag, config.target);
        let (s, v) = aligned_pairs.split();
        match pearson(&s, &v) {
            Ok(r) => {
                let key = match config.selection {
                    LagSelection::Signed => r,
                    LagSelection::Absolute => r.abs(),
                };
                // strict comparison keeps the smaller lag on ties
                if best.is_none_or(|(_, k, _)| key > k) {
                    best = Some((lag, key, r));
                }
                correlations.insert(lag, r);
                pairs.insert(lag, aligned_pairs.len());
            }
            Err(e) => {
                skipped.insert(lag, e.to_string());
            }
        }
    }

    let (best_t, _, best_r) = best.ok_or_else(|| {
        Error::Invalid(format!(
            "no lag in {}..={} could be evaluated",
            config.t_min, config.t_max
        ))
    })?;
    Ok(LagSearchResult {
        best_t,
        best_r,
        target_column: config.target,
        correlations,
        pairs,
        skipped,
    })
}

/// CSV `T,r,pairs`.
pub fn write_lag_csv(path: &Path, result: &LagSearchResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["T", "r", "pairs"])?;
    for (t, r) in &result.correlations {
        w.write_record([t.to_string(), r.to_string(), result.pairs[t].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

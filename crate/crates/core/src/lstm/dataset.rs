use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StockSeries;
use crate::lagsearch::{align_to_trading_days, AlignOptions};
use crate::sentiment::DailySentimentSeries;

/// Min-max scaling to [0, 1]. A constant column maps to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Self { min: v, max: v }),
            Some(m) => Some(Self {
                min: m.min.min(v),
                max: m.max.max(v),
            }),
        })
    }

    fn range(&self) -> f64 {
        let r = self.max - self.min;
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.range() + self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub open: MinMax,
    pub sentiment: MinMax,
}

/// One trading day with both features available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub date: NaiveDate,
    pub open: f64,
    /// Sentiment of the trading day `lag` days earlier.
    pub sentiment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `lookback` normalized (open, lagged sentiment) pairs.
    pub inputs: Vec<Vec<f64>>,
    /// Normalized open of the next row.
    pub target: f64,
    pub target_date: NaiveDate,
    pub target_open: f64,
    /// Raw open of the last input row.
    pub last_open: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct SequenceDataset {
    pub rows: Vec<Row>,
    pub windows: Vec<Window>,
    pub normalization: Normalization,
    /// First row that belongs to the test split.
    pub split_row: usize,
    /// First window whose target lies in the test split.
    pub split_index: usize,
    pub lag: usize,
    pub lookback: usize,
}

impl SequenceDataset {
    pub fn split(&self, which: Split) -> &[Window] {
        match which {
            Split::Train => &self.windows[..self.split_index],
            Split::Test => &self.windows[self.split_index..],
        }
    }
}

/// Fraction of rows used for training when none is configured.
pub const DEFAULT_SPLIT: f64 = 0.6;

/// Pairs each trading day's open with the sentiment `lag` trading days
/// earlier, then cuts chronological windows.
///
/// Window `k` reads rows `k+1 ..= k+lookback` and targets the open of row
/// `k+lookback+1`, so `n` rows give `n - lookback - 1` windows. Rows before
/// `floor(split · n)` form the training split; normalization is fitted on
/// them alone, and a window is a training window iff its target row is.
pub fn build_dataset(
    stock: &StockSeries,
    sentiment: &DailySentimentSeries,
    lag: usize,
    lookback: usize,
    split: f64,
    align: AlignOptions,
) -> Result<SequenceDataset> {
    if lookback == 0 {
        return Err(Error::Invalid("lookback must be at least 1".into()));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::Invalid(format!("split {split} outside (0, 1)")));
    }
    let aligned = align_to_trading_days(sentiment, stock, align);
    let bars = stock.bars();
    let rows: Vec<Row> = (lag..bars.len())
        .filter_map(|d| {
            aligned[d - lag].map(|s| Row {
                date: bars[d].date,
                open: bars[d].open,
                sentiment: s,
            })
        })
        .collect();
    build_from_rows(rows, lag, lookback, split)
}

pub fn build_from_rows(rows: Vec<Row>, lag: usize, lookback: usize, split: f64) -> Result<SequenceDataset> {
    let n = rows.len();
    if n < lookback + 2 {
        return Err(Error::InsufficientData {
            required: lookback + 2,
            available: n,
        });
    }
    let split_row = (split * n as f64).floor() as usize;
    let train_rows = &rows[..split_row];
    let (Some(open), Some(sentiment)) = (
        MinMax::fit(train_rows.iter().map(|r| r.open)),
        MinMax::fit(train_rows.iter().map(|r| r.sentiment)),
    ) else {
        return Err(Error::InsufficientData {
            required: lookback + 2,
            available: split_row,
        });
    };
    let normalization = Normalization { open, sentiment };

    let features: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![open.normalize(r.open), sentiment.normalize(r.sentiment)])
        .collect();
    let windows: Vec<Window> = (0..n - lookback - 1)
        .map(|k| {
            let target_row = k + lookback + 1;
            Window {
                inputs: features[k + 1..target_row].to_vec(),
                target: features[target_row][0],
                target_date: rows[target_row].date,
                target_open: rows[target_row].open,
                last_open: rows[target_row - 1].open,
            }
        })
        .collect();
    let split_index = split_row.saturating_sub(lookback + 1).min(windows.len());
    if split_index == 0 {
        return Err(Error::InsufficientData {
            required: lookback + 2,
            available: split_row,
        });
    }
    if split_index == windows.len() {
        return Err(Error::InsufficientData {
            required: lookback + 2 + (n - split_row),
            available: n,
        });
    }
    Ok(SequenceDataset {
        rows,
        windows,
        normalization,
        split_row,
        split_index,
        lag,
        lookback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;
    use proptest::prelude::*;

    fn rows(n: usize) -> Vec<Row> {
        let d0 = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        (0..n)
            .map(|i| Row {
                date: d0 + Duration::days(i as i64),
                open: 100.0 + i as f64,
                sentiment: (i % 4) as f64 / 4.0,
            })
            .collect()
    }

    #[test]
    fn ten_rows_lookback_three_gives_six_windows() {
        let ds = build_from_rows(rows(10), 0, 3, 0.6).unwrap();
        assert_eq!(ds.windows.len(), 6);
        let first = ds.windows.first().unwrap();
        let last = ds.windows.last().unwrap();
        // 1-based days 5..=10
        assert_eq!(first.target_date, ds.rows[4].date);
        assert_eq!(last.target_date, ds.rows[9].date);
        assert_eq!(first.last_open, ds.rows[3].open);
    }

    #[test]
    fn split_at_floor_of_fraction() {
        let ds = build_from_rows(rows(602), 0, 20, DEFAULT_SPLIT).unwrap();
        assert_eq!(ds.split_row, 361);
        assert!(ds.split(Split::Train).iter().all(|w| w.target_date < ds.rows[361].date));
        assert_eq!(ds.split(Split::Test)[0].target_date, ds.rows[361].date);
    }

    #[test]
    fn normalization_uses_training_rows_only() {
        let ds = build_from_rows(rows(100), 0, 5, 0.6).unwrap();
        assert_eq!(ds.normalization.open, MinMax { min: 100.0, max: 159.0 });
        let all = MinMax::fit(ds.rows.iter().map(|r| r.open)).unwrap();
        assert_ne!(all, ds.normalization.open);
        // test targets run past 1.0 because they were not seen when fitting
        assert!(ds.split(Split::Test).last().unwrap().target > 1.0);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            build_from_rows(rows(4), 0, 3, 0.6),
            Err(Error::InsufficientData { required: 5, available: 4 })
        ));
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let m = MinMax::fit([3.0, 3.0]).unwrap();
        assert_eq!(m.normalize(3.0), 0.0);
        assert_eq!(m.denormalize(0.0), 3.0);
    }

    proptest! {
        #[test]
        fn normalize_round_trip(lo in -1e4f64..1e4, width in 1e-3f64..1e4, t in -1.0f64..2.0) {
            let m = MinMax { min: lo, max: lo + width };
            let x = lo + t * width;
            prop_assert!((m.denormalize(m.normalize(x)) - x).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}

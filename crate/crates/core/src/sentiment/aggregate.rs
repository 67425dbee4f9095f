use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use super::labels::SentimentLabel;
use crate::error::{Error, Result};
use crate::ingest::{parse_date, PostRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailySentiment {
    /// Mean label of the day's posts, in [0, 1].
    pub value: f64,
    pub post_count: usize,
}

/// Per-calendar-day sentiment. Days without posts are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailySentimentSeries {
    pub entries: BTreeMap<NaiveDate, DailySentiment>,
}

impl DailySentimentSeries {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, date: NaiveDate) -> Option<DailySentiment> {
        self.entries.get(&date).copied()
    }

    pub fn insert(&mut self, date: NaiveDate, value: f64, post_count: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Invalid(format!("sentiment {value} on {date} outside [0,1]")));
        }
        if post_count == 0 {
            return Err(Error::Invalid(format!("zero post count on {date}")));
        }
        self.entries.insert(date, DailySentiment { value, post_count });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Mean of hard 0/1 labels.
    #[default]
    Labels,
    /// Mean of label-1 probabilities.
    Probability,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub joined: usize,
    /// Posts that had no label.
    pub unlabeled_posts: usize,
    /// Labels whose post_id matched no post.
    pub orphan_labels: usize,
}

/// Averages each day's post labels: `value_d = Σ label_i / n_d`.
pub fn daily_aggregate(
    posts: &[PostRecord],
    labels: &[SentimentLabel],
    tz: FixedOffset,
    mode: AggregateMode,
) -> (DailySentimentSeries, JoinReport) {
    let by_id: HashMap<&str, &SentimentLabel> =
        labels.iter().map(|l| (l.post_id.as_str(), l)).collect();
    let mut report = JoinReport::default();
    // (positive count, probability sum, n)
    let mut days: BTreeMap<NaiveDate, (u64, f64, usize)> = BTreeMap::new();
    let mut used = std::collections::HashSet::new();
    for post in posts {
        let Some(label) = by_id.get(post.post_id.as_str()) else {
            report.unlabeled_posts += 1;
            continue;
        };
        used.insert(post.post_id.as_str());
        report.joined += 1;
        let slot = days.entry(post.local_date(tz)).or_insert((0, 0.0, 0));
        slot.0 += u64::from(label.label);
        slot.1 += label.probability;
        slot.2 += 1;
    }
    report.orphan_labels = by_id.keys().filter(|id| !used.contains(*id)).count();

    let entries = days
        .into_iter()
        .map(|(date, (positives, prob_sum, n))| {
            let value = match mode {
                AggregateMode::Labels => positives as f64 / n as f64,
                AggregateMode::Probability => (prob_sum / n as f64).clamp(0.0, 1.0),
            };
            (date, DailySentiment { value, post_count: n })
        })
        .collect();
    (DailySentimentSeries { entries }, report)
}

/// CSV `date,sentiment,post_count`.
pub fn write_daily_series(path: &Path, series: &DailySentimentSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "sentiment", "post_count"])?;
    for (date, d) in &series.entries {
        w.write_record([date.to_string(), d.value.to_string(), d.post_count.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_daily_series(path: &Path) -> Result<DailySentimentSeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut series = DailySentimentSeries::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let cell = |col: usize, field: &str| -> Result<&str> {
            rec.get(col).ok_or_else(|| Error::BadCell {
                path: path.to_path_buf(),
                row,
                field: field.into(),
                value: String::new(),
            })
        };
        let bad = |field: &str, value: &str| Error::BadCell {
            path: path.to_path_buf(),
            row,
            field: field.into(),
            value: value.into(),
        };
        let d = cell(0, "date")?;
        let date = parse_date(d).ok_or_else(|| bad("date", d))?;
        let v = cell(1, "sentiment")?;
        let value: f64 = v.trim().parse().map_err(|_| bad("sentiment", v))?;
        let n = cell(2, "post_count")?;
        let count: usize = n.trim().parse().map_err(|_| bad("post_count", n))?;
        if series.entries.contains_key(&date) {
            return Err(Error::Invalid(format!("{}: duplicate date {date}", path.display())));
        }
        series.insert(date, value, count)?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn tz() -> FixedOffset {
        FixedOffset::east_opt(8 * 3600).unwrap()
    }

    fn day0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 3, 5).unwrap()
    }

    fn post(id: usize, day: i64) -> PostRecord {
        PostRecord {
            post_id: format!("p{id}"),
            user_id: "u".into(),
            created_at: Utc.with_ymd_and_hms(2018, 3, 5, 2, 0, 0).unwrap() + Duration::days(day),
            text: "t".into(),
            comments: 0,
            reposts: 0,
            likes: 0,
        }
    }

    fn label(id: usize, l: u8) -> SentimentLabel {
        SentimentLabel {
            post_id: format!("p{id}"),
            label: l,
            probability: if l == 1 { 0.8 } else { 0.2 },
        }
    }

    #[test]
    fn mean_of_labels() {
        let posts = vec![post(0, 0), post(1, 0), post(2, 0)];
        let labels = vec![label(0, 1), label(1, 1), label(2, 0)];
        let (s, r) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
        let d = s.get(day0()).unwrap();
        assert_eq!(d.value, 2.0 / 3.0);
        assert_eq!(d.post_count, 3);
        assert_eq!(r.joined, 3);
    }

    #[test]
    fn all_positive_and_all_negative() {
        let posts = vec![post(0, 0), post(1, 0), post(2, 1), post(3, 1)];
        let labels = vec![label(0, 1), label(1, 1), label(2, 0), label(3, 0)];
        let (s, _) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
        assert_eq!(s.get(day0()).unwrap().value, 1.0);
        assert_eq!(s.get(day0() + Duration::days(1)).unwrap().value, 0.0);
        assert!(s.get(day0() + Duration::days(2)).is_none());
    }

    #[test]
    fn probability_mode_averages_confidence() {
        let posts = vec![post(0, 0), post(1, 0)];
        let labels = vec![label(0, 1), label(1, 0)];
        let (s, _) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Probability);
        assert!((s.get(day0()).unwrap().value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn join_failures_are_counted() {
        let posts = vec![post(0, 0), post(1, 0)];
        let labels = vec![label(0, 1), label(9, 1)];
        let (s, r) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
        assert_eq!(s.get(day0()).unwrap().post_count, 1);
        assert_eq!(r.unlabeled_posts, 1);
        assert_eq!(r.orphan_labels, 1);
    }

    #[test]
    fn csv_round_trip() {
        let posts: Vec<_> = (0..9).map(|i| post(i, (i % 3) as i64)).collect();
        let labels: Vec<_> = (0..9).map(|i| label(i, (i % 2) as u8)).collect();
        let (s, _) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_daily_series(f.path(), &s).unwrap();
        assert_eq!(load_daily_series(f.path()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            days in proptest::collection::vec((0i64..5, 0u8..2), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let posts: Vec<_> = days.iter().enumerate().map(|(i, (d, _))| post(i, *d)).collect();
            let labels: Vec<_> = days.iter().enumerate().map(|(i, (_, l))| label(i, *l)).collect();
            let mut shuffled = posts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (a, _) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
            let (b, _) = daily_aggregate(&shuffled, &labels, tz(), AggregateMode::Labels);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn disjoint_dates_union(
            left in proptest::collection::vec((0i64..5, 0u8..2), 0..20),
            right in proptest::collection::vec((5i64..10, 0u8..2), 0..20),
        ) {
            let all: Vec<_> = left.iter().chain(&right).copied().collect();
            let posts: Vec<_> = all.iter().enumerate().map(|(i, (d, _))| post(i, *d)).collect();
            let labels: Vec<_> = all.iter().enumerate().map(|(i, (_, l))| label(i, *l)).collect();
            let (whole, _) = daily_aggregate(&posts, &labels, tz(), AggregateMode::Labels);
            let (a, _) = daily_aggregate(&posts[..left.len()], &labels, tz(), AggregateMode::Labels);
            let (b, _) = daily_aggregate(&posts[left.len()..], &labels, tz(), AggregateMode::Labels);
            let mut merged = a.entries.clone();
            merged.extend(b.entries);
            prop_assert_eq!(whole.entries, merged);
            for d in whole_values(&posts, &labels) {
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }
    }

    fn whole_values(posts: &[PostRecord], labels: &[SentimentLabel]) -> Vec<f64> {
        daily_aggregate(posts, labels, tz(), AggregateMode::Labels)
            .0
            .entries
            .values()
            .map(|d| d.value)
            .collect()
    }
}

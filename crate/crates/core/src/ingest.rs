//! File-based ingestion of post corpora and daily stock bars.
//!
//! Posts arrive as JSONL with the keys `post_id`, `user_id`, `created_at`,
//! `text`, `comments`, `reposts`, `likes`. Stock bars arrive as CSV with the
//! header `date,open,close,high,low,volume,change_pct`; the `change_pct`
//! column (or any of its cells) may be missing and is then recomputed from
//! consecutive closes.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, Timelike, Utc};
use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One social-media message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostRecord {
    pub post_id: String,
    pub user_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub comments: u64,
    pub reposts: u64,
    pub likes: u64,
}

impl PostRecord {
    /// Calendar date of the post in the given timezone.
    pub fn local_date(&self, tz: FixedOffset) -> NaiveDate {
        self.created_at.with_timezone(&tz).date_naive()
    }
}

pub type PostCollection = Vec<PostRecord>;

/// Inclusive calendar-date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::Invalid(format!("date range {start} > {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Builds a fixed UTC offset from whole hours.
pub fn tz_from_hours(hours: i32) -> Result<FixedOffset> {
    FixedOffset::east_opt(hours * 3600)
        .ok_or_else(|| Error::Invalid(format!("timezone offset {hours}h out of range")))
}

#[derive(Debug, Clone)]
pub struct PostFilter {
    pub keyword: String,
    pub range: DateRange,
    pub tz: FixedOffset,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Non-blank lines seen.
    pub lines: usize,
    /// 1-based line numbers that failed schema validation.
    pub malformed_lines: Vec<usize>,
    pub duplicate_ids: usize,
    pub keyword_rejected: usize,
    pub out_of_range: usize,
    pub accepted: usize,
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Loads posts whose text contains `filter.keyword` (case-insensitively) and
/// whose local date falls inside `filter.range`.
///
/// Lines that fail to parse are skipped and logged with their line number;
/// if more than half of the non-blank lines are malformed the whole file is
/// rejected.
pub fn load_posts(path: &Path, filter: &PostFilter) -> Result<(PostCollection, LoadReport)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let needle = filter.keyword.to_lowercase();
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut posts = Vec::new();

    for (idx, line) in BufReader::new(file).split(b'\n').enumerate() {
        let line_no = idx + 1;
        let bytes = line.map_err(|e| Error::io(path, e))?;
        let line = String::from_utf8_lossy(&bytes);
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let mut post: PostRecord = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                warn!("{}: line {line_no}: skipped: {e}", path.display());
                report.malformed_lines.push(line_no);
                continue;
            }
        };
        post.created_at = post.created_at.with_nanosecond(0).unwrap_or(post.created_at);
        if !seen.insert(post.post_id.clone()) {
            warn!("{}: line {line_no}: duplicate post_id {}", path.display(), post.post_id);
            report.duplicate_ids += 1;
            continue;
        }
        if !post.text.to_lowercase().contains(&needle) {
            report.keyword_rejected += 1;
            continue;
        }
        if !filter.range.contains(post.local_date(filter.tz)) {
            report.out_of_range += 1;
            continue;
        }
        posts.push(post);
    }

    if report.malformed_lines.len() * 2 > report.lines {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.malformed_lines.len(),
            total: report.lines,
        });
    }
    report.accepted = posts.len();
    Ok((posts, report))
}

/// Reads a JSONL post file without filtering. Any malformed line is fatal.
pub fn read_posts(path: &Path) -> Result<PostCollection> {
    read_jsonl(path)
}

pub fn write_posts(path: &Path, posts: &[PostRecord]) -> Result<()> {
    write_jsonl(path, posts)
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::BadLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Canonical form of post text: whitespace mapped to spaces, control
/// characters and replacement characters removed, NFC, runs of spaces
/// collapsed and trimmed.
pub fn normalize_text(text: &str) -> String {
    let stripped: String = text
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|c| !c.is_control() && *c != char::REPLACEMENT_CHARACTER)
        .collect();
    let composed: String = stripped.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub duplicates: usize,
    pub emptied: usize,
}

/// Normalizes post text and removes records that repeat an earlier
/// `(user_id, normalized text)` pair or whose text is empty after cleanup.
/// The first occurrence of a duplicate wins.
pub fn clean_posts(posts: &[PostRecord]) -> (PostCollection, CleanReport) {
    let mut report = CleanReport::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::with_capacity(posts.len());
    for post in posts {
        let text = normalize_text(&post.text);
        if text.is_empty() {
            report.emptied += 1;
            continue;
        }
        if !seen.insert((post.user_id.clone(), text.clone())) {
            report.duplicates += 1;
            continue;
        }
        out.push(PostRecord {
            text,
            ..post.clone()
        });
    }
    (out, report)
}

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StockBar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
    pub high: f64,
    pub low: f64,
    pub volume: f64,
    /// Fractional change of `close` against the previous bar.
    pub change_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceColumn {
    Open,
    Close,
    ChangePct,
}

impl PriceColumn {
    pub fn as_str(self) -> &'static str {
        match self {
            PriceColumn::Open => "open",
            PriceColumn::Close => "close",
            PriceColumn::ChangePct => "change_pct",
        }
    }
}

impl std::str::FromStr for PriceColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(PriceColumn::Open),
            "close" => Ok(PriceColumn::Close),
            "change_pct" => Ok(PriceColumn::ChangePct),
            other => Err(Error::Invalid(format!("unknown price column {other:?}"))),
        }
    }
}

impl StockBar {
    pub fn value(&self, column: PriceColumn) -> f64 {
        match column {
            PriceColumn::Open => self.open,
            PriceColumn::Close => self.close,
            PriceColumn::ChangePct => self.change_pct,
        }
    }
}

/// Chronologically ordered daily bars with unique dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockSeries {
    pub index_name: String,
    bars: Vec<StockBar>,
}

impl StockSeries {
    /// Sorts the bars and rejects duplicate dates or inconsistent prices.
    pub fn new(index_name: impl Into<String>, mut bars: Vec<StockBar>) -> Result<Self> {
        bars.sort_by_key(|b| b.date);
        for pair in bars.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::DuplicateDate(pair[0].date));
            }
        }
        for bar in &bars {
            check_bar(bar)?;
        }
        Ok(Self {
            index_name: index_name.into(),
            bars,
        })
    }

    pub fn bars(&self) -> &[StockBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Index of the bar on `date`, if it is a trading day.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }

    /// Index of the first bar on or after `date`.
    pub fn next_trading_day(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.bars.partition_point(|b| b.date < date);
        (idx < self.bars.len()).then_some(idx)
    }
}

fn check_bar(bar: &StockBar) -> Result<()> {
    let fields = [bar.open, bar.close, bar.high, bar.low, bar.volume, bar.change_pct];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{}: non-finite field", bar.date)));
    }
    let lo = bar.open.min(bar.close);
    let hi = bar.open.max(bar.close);
    if !(bar.low <= lo && hi <= bar.high) {
        return Err(Error::Invalid(format!(
            "{}: low/high {}..{} do not bracket open {} and close {}",
            bar.date, bar.low, bar.high, bar.open, bar.close
        )));
    }
    if bar.volume < 0.0 {
        return Err(Error::Invalid(format!("{}: negative volume", bar.date)));
    }
    Ok(())
}

const STOCK_COLUMNS: [&str; 6] = ["date", "open", "close", "high", "low", "volume"];

/// Loads a stock CSV. Rows may appear in any order; the result is sorted.
pub fn load_stock_bars(path: &Path) -> Result<StockSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Invalid(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(STOCK_COLUMNS) {
        *slot = column(name).ok_or_else(|| Error::BadLine {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column {name}"),
        })?;
    }
    let change_idx = column("change_pct");

    let mut rows: Vec<(StockBar, bool)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let cell = |col: usize, name: &str| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::BadCell {
                path: path.to_path_buf(),
                row,
                field: name.to_string(),
                value: String::new(),
            })
        };
        let num = |col: usize, name: &str| -> Result<f64> {
            let raw = cell(col, name)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    path: path.to_path_buf(),
                    row,
                    field: name.to_string(),
                    value: raw.to_string(),
                })
        };
        let raw_date = cell(idx[0], "date")?;
        let date = parse_date(raw_date).ok_or_else(|| Error::BadCell {
            path: path.to_path_buf(),
            row,
            field: "date".into(),
            value: raw_date.to_string(),
        })?;
        let change = match change_idx {
            Some(c) if record.get(c).is_some_and(|raw| !raw.is_empty()) => {
                Some(num(c, "change_pct")?)
            }
            _ => None,
        };
        let bar = StockBar {
            date,
            open: num(idx[1], "open")?,
            close: num(idx[2], "close")?,
            high: num(idx[3], "high")?,
            low: num(idx[4], "low")?,
            volume: num(idx[5], "volume")?,
            change_pct: change.unwrap_or(0.0),
        };
        rows.push((bar, change.is_none()));
    }

    rows.sort_by_key(|(b, _)| b.date);
    let mut bars: Vec<StockBar> = Vec::with_capacity(rows.len());
    for (i, (mut bar, recompute)) in rows.into_iter().enumerate() {
        if recompute {
            bar.change_pct = match bars.last() {
                Some(prev) if i > 0 => (bar.close - prev.close) / prev.close,
                _ => 0.0,
            };
        }
        bars.push(bar);
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    StockSeries::new(name, bars)
}

pub fn write_stock_bars(path: &Path, series: &StockSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "open", "close", "high", "low", "volume", "change_pct"])?;
    for b in series.bars() {
        w.write_record([
            b.date.to_string(),
            b.open.to_string(),
            b.close.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.volume.to_string(),
            b.change_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(id: &str, user: &str, ts: &str, text: &str) -> String {
        serde_json::json!({
            "post_id": id, "user_id": user, "created_at": ts, "text": text,
            "comments": 0, "reposts": 1, "likes": 2
        })
        .to_string()
    }

    fn filter(keyword: &str) -> PostFilter {
        PostFilter {
            keyword: keyword.into(),
            range: DateRange::new(
                NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2019, 12, 31).unwrap(),
            )
            .unwrap(),
            tz: tz_from_hours(8).unwrap(),
        }
    }

    fn write_file(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn record(id: &str, user: &str, text: &str) -> PostRecord {
        PostRecord {
            post_id: id.into(),
            user_id: user.into(),
            created_at: "2018-03-01T01:00:00Z".parse().unwrap(),
            text: text.into(),
            comments: 0,
            reposts: 0,
            likes: 0,
        }
    }

    #[test]
    fn keyword_filter_is_case_insensitive() {
        let f = write_file(&[
            post("1", "u", "2018-05-01T02:00:00Z", "The HANG SENG INDEX rallied"),
            post("2", "u", "2018-05-01T02:00:00Z", "hang seng index slips"),
            post("3", "u", "2018-05-01T02:00:00Z", "nothing relevant"),
        ]);
        let (posts, report) = load_posts(f.path(), &filter("Hang Seng Index")).unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(report.keyword_rejected, 1);
        assert!(report.malformed_lines.is_empty());
    }

    #[test]
    fn out_of_range_dates_are_excluded() {
        let f = write_file(&[
            post("1", "u", "2017-12-31T10:00:00Z", "hang seng index"),
            post("2", "u", "2020-01-01T10:00:00Z", "hang seng index"),
            post("3", "u", "2019-12-31T10:00:00Z", "hang seng index"),
        ]);
        let (posts, report) = load_posts(f.path(), &filter("hang seng index")).unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].post_id, "3");
        assert_eq!(report.out_of_range, 2);
    }

    #[test]
    fn local_timezone_decides_the_date() {
        // 17:00 UTC on Dec 31 2017 is already Jan 1 2018 in UTC+8.
        let f = write_file(&[post("1", "u", "2017-12-31T17:00:00Z", "hang seng index")]);
        let (posts, _) = load_posts(f.path(), &filter("hang seng index")).unwrap();
        assert_eq!(posts.len(), 1);
    }

    #[test]
    fn empty_file_gives_empty_collection() {
        let f = write_file(&[]);
        let (posts, report) = load_posts(f.path(), &filter("x")).unwrap();
        assert!(posts.is_empty());
        assert_eq!(report, LoadReport::default());
    }

    #[test]
    fn malformed_lines_are_reported() {
        let f = write_file(&[
            post("1", "u", "2018-05-01T02:00:00Z", "hang seng index"),
            post("2", "u", "2018-05-01T02:00:00Z", "hang seng index"),
            "{\"post_id\": 3}".into(),
        ]);
        let (posts, report) = load_posts(f.path(), &filter("hang seng index")).unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(report.malformed_lines, vec![3]);
    }

    #[test]
    fn mostly_malformed_file_is_fatal() {
        let f = write_file(&[
            post("1", "u", "2018-05-01T02:00:00Z", "hang seng index"),
            "garbage".into(),
            "{}".into(),
        ]);
        let err = load_posts(f.path(), &filter("hang seng index")).unwrap_err();
        assert!(matches!(err, Error::TooManyMalformed { malformed: 2, total: 3, .. }));
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = load_posts(Path::new("/nonexistent/posts.jsonl"), &filter("x")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn control_characters_are_stripped() {
        let (out, _) = clean_posts(&[record("1", "u", "涨\u{0000}了")]);
        assert_eq!(out[0].text, "涨了");
    }

    #[test]
    fn whitespace_variants_are_duplicates_per_user() {
        let posts = vec![
            record("1", "u", "hang  seng\tup"),
            record("2", "u", " hang seng up "),
            record("3", "v", "hang seng up"),
        ];
        let (out, report) = clean_posts(&posts);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].post_id, "1");
        assert_eq!(out[1].post_id, "3");
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn text_that_cleans_to_empty_is_dropped() {
        let (out, report) = clean_posts(&[record("1", "u", " \u{0007}\n ")]);
        assert!(out.is_empty());
        assert_eq!(report.emptied, 1);
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn change_pct_recomputed_when_column_absent() {
        let f = csv_file(
            "date,open,close,high,low,volume\n\
             2018-01-02,100,100,101,99,10\n\
             2018-01-03,100,102,103,99,10\n",
        );
        let s = load_stock_bars(f.path()).unwrap();
        assert_eq!(s.bars()[0].change_pct, 0.0);
        assert!((s.bars()[1].change_pct - 0.02).abs() < 1e-12);
    }

    #[test]
    fn rows_are_sorted_by_date() {
        let f = csv_file(
            "date,open,close,high,low,volume,change_pct\n\
             2018-01-04,1,1,1,1,0,0.0\n\
             2018-01-02,1,1,1,1,0,0.0\n\
             2018-01-03,1,1,1,1,0,0.0\n",
        );
        let s = load_stock_bars(f.path()).unwrap();
        let days: Vec<u32> = s.bars().iter().map(|b| chrono::Datelike::day(&b.date)).collect();
        assert_eq!(days, vec![2, 3, 4]);
    }

    #[test]
    fn duplicate_dates_are_fatal() {
        let f = csv_file(
            "date,open,close,high,low,volume,change_pct\n\
             2018-01-02,1,1,1,1,0,0\n\
             2018-01-02,1,1,1,1,0,0\n",
        );
        assert!(matches!(load_stock_bars(f.path()), Err(Error::DuplicateDate(_))));
    }

    #[test]
    fn bad_numeric_cell_reports_row() {
        let f = csv_file(
            "date,open,close,high,low,volume,change_pct\n\
             2018-01-02,1,1,1,1,0,0\n\
             2018-01-03,abc,1,1,1,0,0\n",
        );
        match load_stock_bars(f.path()) {
            Err(Error::BadCell { row, field, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(field, "open");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn six_hundred_two_rows_load() {
        let mut body = String::from("date,open,close,high,low,volume,change_pct\n");
        let mut d = NaiveDate::from_ymd_opt(2018, 1, 2).unwrap();
        for _ in 0..602 {
            body.push_str(&format!("{d},30000,30100,30200,29900,1e9,\n"));
            d = d.succ_opt().unwrap();
        }
        let f = csv_file(&body);
        assert_eq!(load_stock_bars(f.path()).unwrap().len(), 602);
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(texts in proptest::collection::vec(
            prop_oneof![
                "[a-c \\t\\n\\u{0}\\u{7}]{0,8}",
                "[涨跌了 e\\u{301}\\u{fffd}]{0,6}",
            ],
            0..12,
        ), users in proptest::collection::vec(0u8..3, 12)) {
            let posts: Vec<PostRecord> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| record(&i.to_string(), &users[i].to_string(), t))
                .collect();
            let (once, _) = clean_posts(&posts);
            let (twice, _) = clean_posts(&once);
            prop_assert!(once.len() <= posts.len());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn keyword_case_does_not_matter(upper in proptest::collection::vec(any::<bool>(), 15)) {
            let f = write_file(&[
                post("1", "u", "2018-05-01T02:00:00Z", "Hang Seng Index up"),
                post("2", "u", "2018-05-01T02:00:00Z", "down"),
            ]);
            let kw: String = "hang seng index"
                .chars()
                .zip(upper)
                .map(|(c, up)| if up { c.to_ascii_uppercase() } else { c })
                .collect();
            let (a, _) = load_posts(f.path(), &filter(&kw)).unwrap();
            let (b, _) = load_posts(f.path(), &filter("hang seng index")).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn loaded_series_is_ordered(
            offsets in proptest::collection::hash_set(0i64..400, 1..30),
            prices in proptest::collection::vec(1.0f64..1000.0, 30),
        ) {
            let base = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
            let mut body = String::from("date,open,close,high,low,volume\n");
            for (i, off) in offsets.iter().enumerate() {
                let p = prices[i];
                let d = base + chrono::Duration::days(*off);
                body.push_str(&format!("{d},{p},{p},{},{},1\n", p + 1.0, p - 1.0));
            }
            let f = csv_file(&body);
            let s = load_stock_bars(f.path()).unwrap();
            prop_assert_eq!(s.len(), offsets.len());
            for w in s.bars().windows(2) {
                prop_assert!(w[0].date < w[1].date);
            }
            for b in s.bars() {
                prop_assert!(b.low <= b.open.min(b.close) && b.open.max(b.close) <= b.high);
            }
        }
    }
}

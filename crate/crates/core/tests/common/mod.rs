//! Synthetic data shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use sentilag::grouping::UserProfile;
use sentilag::ingest::{write_posts, write_stock_bars, PostRecord, StockBar, StockSeries};
use sentilag::sentiment::DailySentimentSeries;

pub fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
}

/// Bars whose close equals the next day's open, so `change_pct` of day `d`
/// is the move from `open_d` to `open_{d+1}`.
pub fn bars_from_opens(dates: &[NaiveDate], opens: &[f64]) -> StockSeries {
    let n = opens.len();
    let closes: Vec<f64> = (0..n).map(|i| if i + 1 < n { opens[i + 1] } else { opens[i] }).collect();
    let bars = (0..n)
        .map(|i| StockBar {
            date: dates[i],
            open: opens[i],
            close: closes[i],
            high: opens[i].max(closes[i]) + 0.5,
            low: opens[i].min(closes[i]) - 0.5,
            volume: 1.0e6,
            change_pct: if i == 0 { 0.0 } else { closes[i] / closes[i - 1] - 1.0 },
        })
        .collect();
    StockSeries::new("SYN", bars).unwrap()
}

/// Random-walk market with independent daily returns.
pub fn random_walk(rng: &mut impl Rng, n: usize) -> StockSeries {
    let dates = weekdays(start_date(), n);
    let mut opens = Vec::with_capacity(n);
    let mut p = 100.0;
    for _ in 0..n {
        opens.push(p);
        p *= 1.0 + rng.gen_range(-0.02..0.02);
    }
    bars_from_opens(&dates, &opens)
}

/// Sentiment that tracks the sign of the change `lag` trading days later,
/// plus uniform noise of the given amplitude, clamped to [0, 1].
pub fn planted_sentiment(
    rng: &mut impl Rng,
    stock: &StockSeries,
    lag: usize,
    noise: f64,
) -> DailySentimentSeries {
    let bars = stock.bars();
    let mut s = DailySentimentSeries::default();
    for d in 0..bars.len() - lag {
        let up = if bars[d + lag].change_pct >= 0.0 { 1.0 } else { 0.0 };
        let v: f64 = up + rng.gen_range(-noise..=noise);
        s.insert(bars[d].date, v.clamp(0.0, 1.0), 1).unwrap();
    }
    s
}

const POSITIVE: &[&str] = &["看涨", "利好", "大涨", "牛市来了", "反弹有力", "买入"];
const NEGATIVE: &[&str] = &["看跌", "利空", "大跌", "熊市来了", "破位下行", "卖出"];
const FILLER: &[&str] = &["今天", "明天", "感觉", "大盘", "指数", "行情"];

fn sentence(rng: &mut impl Rng, positive: bool) -> String {
    let words = if positive { POSITIVE } else { NEGATIVE };
    format!(
        "{}上证{}，{}",
        FILLER[rng.gen_range(0..FILLER.len())],
        words[rng.gen_range(0..words.len())],
        FILLER[rng.gen_range(0..FILLER.len())]
    )
}

#[derive(Debug, Clone, Copy)]
pub struct FixtureOptions {
    pub trading_days: usize,
    /// Trading days by which the informative group's sentiment leads price.
    pub lag: usize,
    /// Probability an informative post carries the wrong sentiment.
    pub flip: f64,
    pub posts_per_day: usize,
    pub hidden: usize,
    pub lookback: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            trading_days: 500,
            lag: 12,
            flip: 0.1,
            posts_per_day: 3,
            hidden: 8,
            lookback: 20,
            epochs: 80,
            learning_rate: 1e-2,
        }
    }
}

pub struct Fixture {
    pub dir: TempDir,
    pub config: PathBuf,
}

impl Fixture {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

/// Prices step ±2 inside [90, 110]; moves are a fair coin except at the
/// walls, where they reflect.
fn bounded_opens(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut opens = Vec::with_capacity(n);
    let mut p: f64 = 100.0;
    for _ in 0..n {
        opens.push(p);
        let mut step = if rng.gen_bool(0.5) { 2.0 } else { -2.0 };
        if !(90.0..=110.0).contains(&(p + step)) {
            step = -step;
        }
        p += step;
    }
    opens
}

/// Writes a complete two-group input set and a pipeline config.
///
/// Certified analysts post sentiment matching the price move `lag` trading
/// days ahead (with `flip` errors); everybody else posts coin flips.
pub fn two_group_fixture(seed: u64, opts: FixtureOptions) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let dates = weekdays(start_date(), opts.trading_days);
    let opens = bounded_opens(&mut rng, opts.trading_days);
    let stock = bars_from_opens(&dates, &opens);
    write_stock_bars(&root.join("stock.csv"), &stock).unwrap();

    let afa_users: Vec<String> = (0..10).map(|i| format!("a{i}")).collect();
    let ufa_users: Vec<String> = (0..40).map(|i| format!("u{i}")).collect();
    let mut profiles = String::new();
    for u in &afa_users {
        let p = UserProfile {
            user_id: u.clone(),
            certified: true,
            verify_description: "某证券公司分析师".into(),
        };
        profiles.push_str(&serde_json::to_string(&p).unwrap());
        profiles.push('\n');
    }
    for (i, u) in ufa_users.iter().enumerate() {
        let p = UserProfile {
            user_id: u.clone(),
            certified: i % 4 == 0,
            verify_description: if i % 4 == 0 { "美食博主".into() } else { String::new() },
        };
        profiles.push_str(&serde_json::to_string(&p).unwrap());
        profiles.push('\n');
    }
    fs::write(root.join("profiles.jsonl"), profiles).unwrap();

    let bars = stock.bars();
    let mut posts = Vec::new();
    let mut next_id = 0u64;
    // Posts stop `lag` days before the end, where the future is unknown.
    for d in 0..bars.len() - opts.lag {
        let up = bars[d + opts.lag].change_pct >= 0.0;
        let noon = Utc
            .from_utc_datetime(&bars[d].date.and_hms_opt(2, 0, 0).unwrap());
        for k in 0..opts.posts_per_day {
            let positive = if rng.gen_bool(opts.flip) { !up } else { up };
            let user = &afa_users[rng.gen_range(0..afa_users.len())];
            posts.push(post(&mut next_id, user, noon + Duration::minutes(k as i64), sentence(&mut rng, positive)));
            let user = &ufa_users[rng.gen_range(0..ufa_users.len())];
            let coin = rng.gen_bool(0.5);
            posts.push(post(&mut next_id, user, noon + Duration::minutes(30 + k as i64), sentence(&mut rng, coin)));
        }
    }
    // Off-topic posts the keyword filter must drop.
    for i in 0..20 {
        let when = Utc.from_utc_datetime(&bars[i].date.and_hms_opt(3, 0, 0).unwrap());
        posts.push(post(&mut next_id, &ufa_users[0], when, "午饭吃什么".into()));
    }
    write_posts(&root.join("posts.jsonl"), &posts).unwrap();

    let mut corpus = String::from("label,text\n");
    for _ in 0..200 {
        let positive = rng.gen_bool(0.5);
        corpus.push_str(&format!("{},{}\n", u8::from(positive), sentence(&mut rng, positive)));
    }
    fs::write(root.join("corpus.csv"), corpus).unwrap();

    let from = dates[0];
    let to = *dates.last().unwrap();
    let config = format!(
        r#"posts = "posts.jsonl"
profiles = "profiles.jsonl"
stock = "stock.csv"
out = "out"
keyword = "上证"
from = "{from}"
to = "{to}"

[sentiment]
corpus = "corpus.csv"
hash_dims = 4096

[sentiment.classifier]
epochs = 60

[lag]
t_min = 3
t_max = 30

[train]
hidden_size = {hidden}
lookback = {lookback}
epochs = {epochs}
learning_rate = {lr}
seed = {seed}
"#,
        hidden = opts.hidden,
        lookback = opts.lookback,
        epochs = opts.epochs,
        lr = opts.learning_rate,
    );
    let config_path = root.join("pipeline.toml");
    fs::write(&config_path, config).unwrap();
    Fixture {
        dir,
        config: config_path,
    }
}

fn post(next_id: &mut u64, user: &str, at: chrono::DateTime<Utc>, text: String) -> PostRecord {
    *next_id += 1;
    PostRecord {
        post_id: format!("p{next_id}"),
        user_id: user.into(),
        created_at: at,
        text,
        comments: 0,
        reposts: 0,
        likes: 0,
    }
}

//! File-in, file-out stage functions shared by the CLI and the full run.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    confusion, metrics, mse, prior_opens, trend_labels, ConfusionMatrix, MetricsReport,
    TrendLabels, TrendMode,
};
use crate::grouping::{load_profiles, partition_posts, GroupLabel, PartitionReport, UnknownUserPolicy};
use crate::ingest::{
    clean_posts, load_posts, load_stock_bars, read_posts, write_posts, write_stock_bars,
    CleanReport, LoadReport, PostFilter, StockSeries,
};
use crate::lagsearch::{search_lag, write_lag_csv, AlignOptions, LagSearchConfig, LagSearchResult};
use crate::lstm::{
    build_dataset, predict_series, train, Checkpoint, LossHistory, Prediction, Split, TrainConfig,
};
use crate::plot::{emit_plot, LineChart};
use crate::sentiment::{
    daily_aggregate, ingest_labels, load_corpus, load_daily_series, train_classifier,
    write_daily_series, write_labels, AggregateMode, ClassifierHyper, JoinReport, SentimentLabel,
    SentimentModel, DEFAULT_NGRAM_ORDERS,
};

pub const POSTS_FILE: &str = "posts.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const STOCK_FILE: &str = "stock.csv";
pub const SENTIMENT_FILE: &str = "sentiment.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CHECKPOINT_FILE: &str = "model.json";
pub const CLASSIFIER_FILE: &str = "sentiment_model.json";

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Group subdirectories of `dir` that hold a posts file, or `dir` itself
/// (with an empty name) when it holds one directly.
pub fn group_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    if dir.join(POSTS_FILE).is_file() {
        return Ok(vec![(String::new(), dir.to_path_buf())]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join(POSTS_FILE).is_file() {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    if out.is_empty() {
        return Err(Error::Invalid(format!("no {POSTS_FILE} found under {}", dir.display())));
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub load: LoadReport,
    pub clean: CleanReport,
    pub posts: usize,
    pub trading_days: usize,
    pub first_trading_day: NaiveDate,
    pub last_trading_day: NaiveDate,
}

/// Filters and cleans posts, validates the stock file, and writes both in
/// canonical form plus a report.
pub fn run_ingest(posts: &Path, stock: &Path, filter: &PostFilter, out: &Path) -> Result<IngestSummary> {
    create_dir(out)?;
    let (raw, load) = load_posts(posts, filter)?;
    let (clean, clean_report) = clean_posts(&raw);
    if clean.is_empty() {
        return Err(Error::Empty("posts after filtering"));
    }
    let series = load_stock_bars(stock)?;
    let bars = series.bars();
    let (Some(first), Some(last)) = (bars.first(), bars.last()) else {
        return Err(Error::Empty("stock bars"));
    };
    let summary = IngestSummary {
        load,
        clean: clean_report,
        posts: clean.len(),
        trading_days: bars.len(),
        first_trading_day: first.date,
        last_trading_day: last.date,
    };
    write_posts(&out.join(POSTS_FILE), &clean)?;
    write_stock_bars(&out.join(STOCK_FILE), &series)?;
    write_json(&out.join(REPORT_FILE), &summary)?;
    log::info!(
        "ingest: {} posts kept of {} lines, {} trading days",
        summary.posts,
        summary.load.lines,
        summary.trading_days
    );
    Ok(summary)
}

/// Splits posts into `out/afa` and `out/ufa` by author certification.
pub fn run_group(
    posts: &Path,
    profiles: &Path,
    keywords: &[String],
    policy: UnknownUserPolicy,
    out: &Path,
) -> Result<PartitionReport> {
    let posts = read_posts(posts)?;
    let profiles = load_profiles(profiles)?;
    let partition = partition_posts(&posts, &profiles, keywords, policy)?;
    for label in GroupLabel::ALL {
        let dir = out.join(label.dir_name());
        create_dir(&dir)?;
        write_posts(&dir.join(POSTS_FILE), partition.group(label))?;
    }
    write_json(&out.join(REPORT_FILE), &partition.report)?;
    log::info!(
        "group: {} AFA posts from {} users, {} UFA posts from {} users",
        partition.report.afa_posts,
        partition.report.afa_users,
        partition.report.ufa_posts,
        partition.report.ufa_users
    );
    Ok(partition.report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    /// Pre-computed labels, e.g. from an external transformer scorer.
    Labels(PathBuf),
    Model(PathBuf),
    Corpus {
        path: PathBuf,
        hyper: ClassifierHyper,
        hash_dims: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub corpus_size: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    /// Labelled post count per group directory.
    pub groups: BTreeMap<String, usize>,
    pub classifier: Option<ClassifierSummary>,
}

/// Trains the built-in classifier on a `label,text` corpus and saves it.
pub fn run_train_sentiment(
    corpus: &Path,
    hyper: &ClassifierHyper,
    hash_dims: usize,
    out: &Path,
) -> Result<(SentimentModel, ClassifierSummary)> {
    let rows = load_corpus(corpus)?;
    let trained = train_classifier(&rows, hyper, hash_dims, &DEFAULT_NGRAM_ORDERS)?;
    trained.model.save(out)?;
    let h = &trained.loss_history;
    let summary = ClassifierSummary {
        corpus_size: rows.len(),
        initial_loss: h[0],
        final_loss: h[h.len() - 1],
    };
    log::info!(
        "sentiment classifier: {} examples, loss {:.4} -> {:.4}",
        summary.corpus_size,
        summary.initial_loss,
        summary.final_loss
    );
    Ok((trained.model, summary))
}

/// Labels every post under `grouped` and mirrors the group layout in `out`,
/// each group getting its posts and a `labels.jsonl`.
pub fn run_score(source: &LabelSource, grouped: &Path, out: &Path) -> Result<ScoreSummary> {
    create_dir(out)?;
    let mut summary = ScoreSummary::default();
    let mut model = None;
    let mut external = None;
    match source {
        LabelSource::Labels(p) => external = Some(ingest_labels(p)?),
        LabelSource::Model(p) => model = Some(SentimentModel::load(p)?),
        LabelSource::Corpus { path, hyper, hash_dims } => {
            let (m, s) = run_train_sentiment(path, hyper, *hash_dims, &out.join(CLASSIFIER_FILE))?;
            model = Some(m);
            summary.classifier = Some(s);
        }
    }
    for (name, dir) in group_dirs(grouped)? {
        let posts = read_posts(&dir.join(POSTS_FILE))?;
        let labels: Vec<SentimentLabel> = match (&model, &external) {
            (Some(m), _) => posts
                .iter()
                .map(|p| m.score(&p.post_id, &p.text))
                .collect::<Result<_>>()?,
            (None, Some(all)) => {
                let ids: HashSet<&str> = posts.iter().map(|p| p.post_id.as_str()).collect();
                all.iter().filter(|l| ids.contains(l.post_id.as_str())).cloned().collect()
            }
            (None, None) => unreachable!("one label source is always loaded"),
        };
        let target = out.join(&name);
        create_dir(&target)?;
        write_posts(&target.join(POSTS_FILE), &posts)?;
        write_labels(&target.join(LABELS_FILE), &labels)?;
        summary.groups.insert(name, labels.len());
    }
    write_json(&out.join(REPORT_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub join: JoinReport,
    pub days: usize,
}

/// Writes one `sentiment.csv` per scored group.
pub fn run_aggregate(
    scored: &Path,
    tz: FixedOffset,
    mode: AggregateMode,
    out: &Path,
) -> Result<BTreeMap<String, AggregateSummary>> {
    let mut all = BTreeMap::new();
    for (name, dir) in group_dirs(scored)? {
        let posts = read_posts(&dir.join(POSTS_FILE))?;
        let labels = ingest_labels(&dir.join(LABELS_FILE))?;
        let (series, join) = daily_aggregate(&posts, &labels, tz, mode);
        if join.unlabeled_posts > 0 || join.orphan_labels > 0 {
            log::warn!(
                "aggregate {name}: {} posts without labels, {} labels without posts",
                join.unlabeled_posts,
                join.orphan_labels
            );
        }
        let target = out.join(&name);
        create_dir(&target)?;
        write_daily_series(&target.join(SENTIMENT_FILE), &series)?;
        all.insert(
            name,
            AggregateSummary {
                join,
                days: series.len(),
            },
        );
    }
    create_dir(out)?;
    write_json(&out.join(REPORT_FILE), &all)?;
    Ok(all)
}

/// Correlation curve over the configured lags, as CSV, JSON and SVG.
pub fn run_lagsearch(
    sentiment: &Path,
    stock: &Path,
    config: &LagSearchConfig,
    out: &Path,
) -> Result<LagSearchResult> {
    create_dir(out)?;
    let series = load_daily_series(sentiment)?;
    let stock = load_stock_bars(stock)?;
    let result = search_lag(&series, &stock, config)?;
    write_lag_csv(&out.join("lag.csv"), &result)?;
    write_json(&out.join("lag.json"), &result)?;
    let (ts, rs): (Vec<f64>, Vec<f64>) = result.correlations.iter().map(|(t, r)| (*t as f64, *r)).unzip();
    let chart = LineChart::new("Sentiment lead correlation", "T", "r", ts).with_series("r", rs);
    emit_plot(out, "lag_curve", &chart)?;
    log::info!("lagsearch: best T = {} (r = {:.4})", result.best_t, result.best_r);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastOptions {
    pub lag: usize,
    pub split: f64,
    pub align: AlignOptions,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub lag: usize,
    pub rows: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub final_train_loss: f64,
    /// Normalized-scale MSE on the test windows.
    pub test_mse: f64,
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in predictions {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn write_loss_csv(path: &Path, history: &LossHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train", "validation"])?;
    for (i, t) in history.train.iter().enumerate() {
        let v = history.validation.get(i).map(f64::to_string).unwrap_or_default();
        w.write_record([(i + 1).to_string(), t.to_string(), v])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fits the LSTM on the training split and predicts the test split.
pub fn run_train(stock: &Path, sentiment: &Path, opts: &ForecastOptions, out: &Path) -> Result<TrainSummary> {
    create_dir(out)?;
    let stock = load_stock_bars(stock)?;
    let series = load_daily_series(sentiment)?;
    let dataset = build_dataset(&stock, &series, opts.lag, opts.train.lookback, opts.split, opts.align)?;
    let (model, history) = train(opts.train.init_model(), &dataset, &opts.train)?;
    let predictions = predict_series(&model, &dataset, Split::Test)?;
    let (pn, an): (Vec<f64>, Vec<f64>) = predictions.iter().map(|p| (p.predicted_norm, p.actual_norm)).unzip();
    let summary = TrainSummary {
        lag: opts.lag,
        rows: dataset.rows.len(),
        train_windows: dataset.split(Split::Train).len(),
        test_windows: predictions.len(),
        final_train_loss: history.train.last().copied().unwrap_or(f64::NAN),
        test_mse: mse(&pn, &an)?,
    };

    Checkpoint::new(model, dataset.normalization, opts.train, opts.lag).save(&out.join(CHECKPOINT_FILE))?;
    write_loss_csv(&out.join("loss.csv"), &history)?;
    write_predictions(&out.join(PREDICTIONS_FILE), &predictions)?;
    write_json(&out.join(REPORT_FILE), &summary)?;
    let mut chart = LineChart::new(
        "Next-day open, test split",
        "date",
        "open",
        (0..predictions.len()).map(|i| i as f64).collect(),
    )
    .with_series("predicted", predictions.iter().map(|p| p.predicted).collect())
    .with_series("actual", predictions.iter().map(|p| p.actual).collect());
    chart.x_text = Some(predictions.iter().map(|p| p.date.to_string()).collect());
    emit_plot(out, "forecast", &chart)?;
    log::info!(
        "train: {} train / {} test windows, test MSE {:.6}",
        summary.train_windows,
        summary.test_windows,
        summary.test_mse
    );
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub trend_mode: TrendMode,
    pub matrix: ConfusionMatrix,
    /// `mse` is on the normalized scale the model was trained on.
    pub metrics: MetricsReport,
    /// MSE in price units.
    pub price_mse: f64,
    pub days: usize,
    /// Predictions skipped for lack of a prior trading day.
    pub dropped: usize,
}

/// Trend confusion matrix, metrics and MSE for a prediction series.
pub fn evaluate_predictions(
    predictions: &[Prediction],
    stock: &StockSeries,
    mode: TrendMode,
) -> Result<(EvaluationReport, TrendLabels)> {
    let trends = trend_labels(predictions, &prior_opens(predictions, stock), mode)?;
    let matrix = confusion(&trends.predicted(), &trends.actual())?;
    let mut report = metrics(&matrix)?;
    let (pn, an): (Vec<f64>, Vec<f64>) = predictions.iter().map(|p| (p.predicted_norm, p.actual_norm)).unzip();
    report.mse = Some(mse(&pn, &an)?);
    let (pr, ar): (Vec<f64>, Vec<f64>) = predictions.iter().map(|p| (p.predicted, p.actual)).unzip();
    Ok((
        EvaluationReport {
            trend_mode: mode,
            matrix,
            metrics: report,
            price_mse: mse(&pr, &ar)?,
            days: trends.days.len(),
            dropped: trends.dropped,
        },
        trends,
    ))
}

pub fn run_evaluate(predictions: &Path, stock: &Path, mode: TrendMode, out: &Path) -> Result<EvaluationReport> {
    create_dir(out)?;
    let predictions = read_predictions(predictions)?;
    let stock = load_stock_bars(stock)?;
    let (report, trends) = evaluate_predictions(&predictions, &stock, mode)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    let days = out.join("days.csv");
    let mut w = csv::Writer::from_path(&days)?;
    for d in &trends.days {
        w.serialize(d)?;
    }
    w.flush().map_err(|e| Error::io(&days, e))?;
    log::info!(
        "evaluate: precision {:.4}, accuracy {:.4} over {} days",
        report.metrics.precision,
        report.metrics.accuracy,
        report.days
    );
    Ok(report)
}

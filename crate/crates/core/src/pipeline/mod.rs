//! End-to-end run: ingest, group, score, aggregate, then lag search,
//! training and evaluation for the AFA and UFA branches side by side.
//!
//! Output layout under `out/`:
//!
//! ```text
//! config.json
//! ingest/{posts.jsonl, stock.csv, report.json}
//! group/{afa,ufa}/posts.jsonl, group/report.json
//! score/{afa,ufa}/{posts.jsonl, labels.jsonl}
//! aggregate/{afa,ufa}/sentiment.csv
//! afa/ and ufa/ with lagsearch/, train/, evaluate/
//! comparison.json
//! ```

mod config;
mod stages;

use std::fmt;
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, SentimentConfig};
pub use stages::{
    evaluate_predictions, group_dirs, read_predictions, run_aggregate, run_evaluate, run_group,
    run_ingest, run_lagsearch, run_score, run_train, run_train_sentiment, write_predictions,
    AggregateSummary, ClassifierSummary, EvaluationReport, ForecastOptions, IngestSummary,
    LabelSource, ScoreSummary, TrainSummary, CHECKPOINT_FILE, CLASSIFIER_FILE, LABELS_FILE,
    POSTS_FILE, PREDICTIONS_FILE, REPORT_FILE, SENTIMENT_FILE, STOCK_FILE,
};

use crate::error::Error;
use crate::eval::precision_gap;
use crate::grouping::{default_keywords, load_keywords, GroupLabel, PartitionReport};
use crate::ingest::{tz_from_hours, DateRange, PostFilter};
use crate::lagsearch::LagSearchResult;
use stages::write_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Group,
    Score,
    Aggregate,
    Lagsearch,
    Train,
    Evaluate,
    Report,
}

impl Stage {
    /// Process exit status for a failure in this stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 10,
            Stage::Group => 11,
            Stage::Score => 12,
            Stage::Aggregate => 13,
            Stage::Lagsearch => 14,
            Stage::Train => 15,
            Stage::Evaluate => 16,
            Stage::Report => 17,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Group => "group",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Lagsearch => "lagsearch",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed{}: {source}", .group.map(|g| format!(" ({g})")).unwrap_or_default())]
pub struct PipelineError {
    pub stage: Stage,
    pub group: Option<GroupLabel>,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
    fn at_group(self, stage: Stage, group: GroupLabel) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for crate::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError {
            stage,
            group: None,
            source,
        })
    }

    fn at_group(self, stage: Stage, group: GroupLabel) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError {
            stage,
            group: Some(group),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub group: GroupLabel,
    pub posts: usize,
    pub sentiment_days: usize,
    pub lag: LagSearchResult,
    pub train: TrainSummary,
    pub evaluation: EvaluationReport,
}

/// Final side-by-side summary. Contains no paths or timestamps so reruns
/// with the same inputs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ingest: IngestSummary,
    pub partition: PartitionReport,
    pub afa: BranchReport,
    pub ufa: BranchReport,
    /// `precision_afa / precision_ufa − 1`.
    pub precision_gap: Option<f64>,
    pub accuracy_difference: f64,
}

pub fn compare(
    ingest: IngestSummary,
    partition: PartitionReport,
    afa: BranchReport,
    ufa: BranchReport,
) -> ComparisonReport {
    ComparisonReport {
        precision_gap: precision_gap(&afa.evaluation.metrics, &ufa.evaluation.metrics),
        accuracy_difference: afa.evaluation.metrics.accuracy - ufa.evaluation.metrics.accuracy,
        ingest,
        partition,
        afa,
        ufa,
    }
}

fn run_branch(
    cfg: &PipelineConfig,
    group: GroupLabel,
    posts: usize,
    aggregate: &AggregateSummary,
) -> Result<BranchReport, PipelineError> {
    let out = cfg.out.join(group.dir_name());
    let stock = cfg.out.join("ingest").join(STOCK_FILE);
    let sentiment = cfg.out.join("aggregate").join(group.dir_name()).join(SENTIMENT_FILE);

    let lag = run_lagsearch(&sentiment, &stock, &cfg.lag, &out.join("lagsearch"))
        .at_group(Stage::Lagsearch, group)?;
    let opts = ForecastOptions {
        lag: lag.best_t,
        split: cfg.split,
        align: cfg.lag.align,
        train: cfg.train,
    };
    let train_dir = out.join("train");
    let train = run_train(&stock, &sentiment, &opts, &train_dir).at_group(Stage::Train, group)?;
    let evaluation = run_evaluate(
        &train_dir.join(PREDICTIONS_FILE),
        &stock,
        cfg.trend,
        &out.join("evaluate"),
    )
    .at_group(Stage::Evaluate, group)?;
    Ok(BranchReport {
        group,
        posts,
        sentiment_days: aggregate.days,
        lag,
        train,
        evaluation,
    })
}

/// Runs every stage for a validated config. Outputs written before a
/// failure are left in place.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ComparisonReport, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let (from, to) = cfg.range().at(Stage::Config)?;
    let filter = PostFilter {
        keyword: cfg.keyword.clone(),
        range: DateRange::new(from, to).at(Stage::Config)?,
        tz: tz_from_hours(cfg.tz_offset_hours).at(Stage::Config)?,
    };
    let keywords = match &cfg.keywords {
        Some(p) => load_keywords(p).at(Stage::Config)?,
        None => default_keywords(),
    };
    stages::create_dir(&cfg.out).at(Stage::Config)?;
    write_json(&cfg.out.join("config.json"), cfg).at(Stage::Config)?;

    let ingest_dir = cfg.out.join("ingest");
    let ingest = run_ingest(&cfg.posts, &cfg.stock, &filter, &ingest_dir).at(Stage::Ingest)?;

    let group_dir = cfg.out.join("group");
    let partition = run_group(
        &ingest_dir.join(POSTS_FILE),
        &cfg.profiles,
        &keywords,
        cfg.unknown_users,
        &group_dir,
    )
    .at(Stage::Group)?;

    let s = &cfg.sentiment;
    let source = match (&s.labels, &s.model, &s.corpus) {
        (Some(p), _, _) => LabelSource::Labels(p.clone()),
        (_, Some(p), _) => LabelSource::Model(p.clone()),
        (_, _, Some(p)) => LabelSource::Corpus {
            path: p.clone(),
            hyper: s.classifier,
            hash_dims: s.hash_dims,
        },
        _ => unreachable!("validate() requires one sentiment source"),
    };
    let score_dir = cfg.out.join("score");
    run_score(&source, &group_dir, &score_dir).at(Stage::Score)?;

    let aggregates = run_aggregate(
        &score_dir,
        filter.tz,
        cfg.aggregate,
        &cfg.out.join("aggregate"),
    )
    .at(Stage::Aggregate)?;
    let summary_for = |g: GroupLabel| {
        aggregates
            .get(g.dir_name())
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("no aggregate output for {g}")))
            .at(Stage::Aggregate)
    };
    let (afa_agg, ufa_agg) = (summary_for(GroupLabel::Afa)?, summary_for(GroupLabel::Ufa)?);

    let (afa, ufa) = thread::scope(|scope| {
        let a = scope.spawn(|| run_branch(cfg, GroupLabel::Afa, partition.afa_posts, &afa_agg));
        let u = run_branch(cfg, GroupLabel::Ufa, partition.ufa_posts, &ufa_agg);
        (a.join().expect("AFA branch panicked"), u)
    });
    let report = compare(ingest, partition, afa?, ufa?);
    write_json(&cfg.out.join("comparison.json"), &report).at(Stage::Report)?;
    log_summary(&report, &cfg.out);
    Ok(report)
}

fn log_summary(report: &ComparisonReport, out: &Path) {
    for b in [&report.afa, &report.ufa] {
        let m = &b.evaluation.metrics;
        log::info!(
            "{}: T = {}, precision {:.4}, recall {:.4}, F1 {:.4}, accuracy {:.4}",
            b.group,
            b.lag.best_t,
            m.precision,
            m.recall,
            m.f1,
            m.accuracy
        );
    }
    if let Some(gap) = report.precision_gap {
        log::info!("AFA precision exceeds UFA by {:.2}%", gap * 100.0);
    }
    log::info!("reports written to {}", out.display());
}

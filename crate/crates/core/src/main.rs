use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use sentilag::eval::TrendMode;
use sentilag::grouping::{default_keywords, load_keywords, UnknownUserPolicy};
use sentilag::ingest::{parse_date, tz_from_hours, DateRange, PostFilter, PriceColumn};
use sentilag::lagsearch::{AlignOptions, FillPolicy, LagSearchConfig, LagSelection, MergePolicy};
use sentilag::lstm::{Optimizer, TrainConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN, DEFAULT_SPLIT};
use sentilag::pipeline::{self, ForecastOptions, LabelSource, PipelineConfig, Stage};
use sentilag::sentiment::{AggregateMode, ClassifierHyper, DEFAULT_HASH_DIMS};

#[derive(Parser)]
#[command(name = "sentilag", version, about = "Sentiment-lagged stock trend forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter posts by keyword and date, clean them, and validate stock bars.
    Ingest {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        stock: PathBuf,
        #[arg(long)]
        keyword: String,
        #[arg(long, value_parser = date_arg)]
        from: NaiveDate,
        #[arg(long, value_parser = date_arg)]
        to: NaiveDate,
        #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
        tz_offset: i32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split posts into AFA and UFA groups by author certification.
    Group {
        /// Ingest output directory or posts file.
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        /// One keyword per line; built-in list when omitted.
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ufa")]
        unknown: Unknown,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the built-in sentiment classifier on a label,text CSV.
    TrainSentiment {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
        #[arg(long, default_value_t = DEFAULT_HASH_DIMS)]
        hash_dims: usize,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach a sentiment label to every grouped post.
    Score {
        #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
        model: Option<PathBuf>,
        /// Externally produced label JSONL.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Group output directory.
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average labels into a daily sentiment series per group.
    Aggregate {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
        tz_offset: i32,
        /// Average probabilities instead of hard labels.
        #[arg(long)]
        probability: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the sentiment lead T with the highest correlation.
    Lagsearch {
        #[arg(long)]
        sentiment: PathBuf,
        #[arg(long)]
        stock: PathBuf,
        #[arg(long, default_value_t = 3)]
        tmin: usize,
        #[arg(long, default_value_t = 30)]
        tmax: usize,
        #[arg(long, default_value = "change_pct")]
        target: PriceColumn,
        /// Rank lags by |r| instead of signed r.
        #[arg(long)]
        absolute: bool,
        #[command(flatten)]
        align: AlignArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the LSTM forecaster for a given lag and predict the test split.
    Train {
        #[arg(long)]
        stock: PathBuf,
        #[arg(long)]
        sentiment: PathBuf,
        #[arg(long = "T")]
        lag: usize,
        #[arg(long, default_value_t = 20)]
        lookback: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_HIDDEN)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = DEFAULT_DROPOUT)]
        dropout: f64,
        #[arg(long)]
        sgd: bool,
        #[arg(long, default_value_t = DEFAULT_SPLIT)]
        split: f64,
        #[command(flatten)]
        align: AlignArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions as rising-or-steady vs falling calls.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        stock: PathBuf,
        /// Count only strict rises as positive.
        #[arg(long)]
        strict_rise: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage for both groups from a TOML config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Unknown {
    Ufa,
    Afa,
}

#[derive(Args)]
struct AlignArgs {
    /// Drop posts dated on non-trading days instead of moving them forward.
    #[arg(long)]
    drop_non_trading: bool,
    /// Trading days without posts: neutral, drop or carry.
    #[arg(long, default_value = "neutral")]
    fill: String,
}

impl AlignArgs {
    fn options(&self) -> sentilag::Result<AlignOptions> {
        let fill = match self.fill.as_str() {
            "neutral" => FillPolicy::Neutral,
            "drop" => FillPolicy::Drop,
            "carry" => FillPolicy::CarryForward,
            other => return Err(sentilag::Error::Invalid(format!("unknown fill policy {other:?}"))),
        };
        let merge = if self.drop_non_trading {
            MergePolicy::Drop
        } else {
            MergePolicy::NextTradingDay
        };
        Ok(AlignOptions { merge, fill })
    }
}

fn date_arg(s: &str) -> Result<NaiveDate, String> {
    parse_date(s).ok_or_else(|| format!("expected YYYY-MM-DD, got {s:?}"))
}

fn fail(stage: Stage, err: impl std::fmt::Display) -> ExitCode {
    log::error!("{stage}: {err}");
    eprintln!("error: {stage}: {err}");
    ExitCode::from(stage.exit_code() as u8)
}

fn print_json<T: serde::Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => log::warn!("could not print summary: {e}"),
    }
}

macro_rules! stage {
    ($stage:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail($stage, err),
        }
    };
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Ingest { posts, stock, keyword, from, to, tz_offset, out } => {
            let range = stage!(Stage::Config, DateRange::new(from, to));
            let tz = stage!(Stage::Config, tz_from_hours(tz_offset));
            let filter = PostFilter { keyword, range, tz };
            print_json(&stage!(Stage::Ingest, pipeline::run_ingest(&posts, &stock, &filter, &out)));
        }
        Command::Group { posts, profiles, keywords, unknown, out } => {
            let posts = if posts.is_dir() { posts.join(pipeline::POSTS_FILE) } else { posts };
            let keywords = match keywords {
                Some(p) => stage!(Stage::Config, load_keywords(&p)),
                None => default_keywords(),
            };
            let policy = match unknown {
                Unknown::Ufa => UnknownUserPolicy::Ufa,
                Unknown::Afa => UnknownUserPolicy::Afa,
            };
            print_json(&stage!(Stage::Group, pipeline::run_group(&posts, &profiles, &keywords, policy, &out)));
        }
        Command::TrainSentiment { corpus, epochs, lr, l2, hash_dims, out } => {
            let hyper = ClassifierHyper { learning_rate: lr, epochs, l2 };
            let (_, summary) = stage!(Stage::Score, pipeline::run_train_sentiment(&corpus, &hyper, hash_dims, &out));
            print_json(&summary);
        }
        Command::Score { model, labels, posts, out } => {
            let source = match (model, labels) {
                (Some(m), _) => LabelSource::Model(m),
                (None, Some(l)) => LabelSource::Labels(l),
                (None, None) => unreachable!("clap requires one source"),
            };
            print_json(&stage!(Stage::Score, pipeline::run_score(&source, &posts, &out)));
        }
        Command::Aggregate { scored, tz_offset, probability, out } => {
            let tz = stage!(Stage::Config, tz_from_hours(tz_offset));
            let mode = if probability { AggregateMode::Probability } else { AggregateMode::Labels };
            print_json(&stage!(Stage::Aggregate, pipeline::run_aggregate(&scored, tz, mode, &out)));
        }
        Command::Lagsearch { sentiment, stock, tmin, tmax, target, absolute, align, out } => {
            let config = LagSearchConfig {
                t_min: tmin,
                t_max: tmax,
                target,
                selection: if absolute { LagSelection::Absolute } else { LagSelection::Signed },
                align: stage!(Stage::Config, align.options()),
            };
            let result = stage!(Stage::Lagsearch, pipeline::run_lagsearch(&sentiment, &stock, &config, &out));
            println!("T={} r={}", result.best_t, result.best_r);
        }
        Command::Train {
            stock, sentiment, lag, lookback, epochs, seed, hidden, lr, batch_size, dropout, sgd, split, align, out,
        } => {
            let opts = ForecastOptions {
                lag,
                split,
                align: stage!(Stage::Config, align.options()),
                train: TrainConfig {
                    batch_size,
                    epochs,
                    learning_rate: lr,
                    seed,
                    lookback,
                    optimizer: if sgd { Optimizer::Sgd } else { Optimizer::Adam },
                    hidden_size: hidden,
                    dropout,
                },
            };
            print_json(&stage!(Stage::Train, pipeline::run_train(&stock, &sentiment, &opts, &out)));
        }
        Command::Evaluate { predictions, stock, strict_rise, out } => {
            let mode = if strict_rise { TrendMode::StrictRise } else { TrendMode::RisingOrSteady };
            print_json(&stage!(Stage::Evaluate, pipeline::run_evaluate(&predictions, &stock, mode, &out)));
        }
        Command::Pipeline { config, seed, out } => {
            let mut cfg = stage!(Stage::Config, PipelineConfig::load(&config));
            if let Some(seed) = seed {
                cfg.train.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            match pipeline::run_pipeline(&cfg) {
                Ok(report) => print_json(&report),
                Err(e) => return fail(e.stage, e),
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run(Cli::parse())
}

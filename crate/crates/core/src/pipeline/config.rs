use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::TrendMode;
use crate::grouping::UnknownUserPolicy;
use crate::lagsearch::LagSearchConfig;
use crate::lstm::{TrainConfig, DEFAULT_SPLIT};
use crate::sentiment::{AggregateMode, ClassifierHyper, DEFAULT_HASH_DIMS};

/// Where per-post labels come from. Exactly one source must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    /// JSONL `{post_id, label, probability}` from an external scorer.
    pub labels: Option<PathBuf>,
    /// A saved classifier.
    pub model: Option<PathBuf>,
    /// `label,text` CSV to train the built-in classifier on.
    pub corpus: Option<PathBuf>,
    pub hash_dims: usize,
    pub classifier: ClassifierHyper,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        Self {
            labels: None,
            model: None,
            corpus: None,
            hash_dims: DEFAULT_HASH_DIMS,
            classifier: ClassifierHyper::default(),
        }
    }
}

/// Everything one pipeline run needs, read from TOML.
///
/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub posts: PathBuf,
    pub profiles: PathBuf,
    pub stock: PathBuf,
    /// Certification keyword list; the built-in list when absent.
    pub keywords: Option<PathBuf>,
    pub out: PathBuf,
    /// Posts must mention this (case-insensitive).
    pub keyword: String,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub tz_offset_hours: i32,
    pub unknown_users: UnknownUserPolicy,
    pub aggregate: AggregateMode,
    /// Fraction of rows used for training.
    pub split: f64,
    pub trend: TrendMode,
    pub sentiment: SentimentConfig,
    pub lag: LagSearchConfig,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            posts: PathBuf::new(),
            profiles: PathBuf::new(),
            stock: PathBuf::new(),
            keywords: None,
            out: PathBuf::from("out"),
            keyword: String::new(),
            from: None,
            to: None,
            tz_offset_hours: 8,
            unknown_users: UnknownUserPolicy::default(),
            aggregate: AggregateMode::default(),
            split: DEFAULT_SPLIT,
            trend: TrendMode::default(),
            sentiment: SentimentConfig::default(),
            lag: LagSearchConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() && !p.as_os_str().is_empty() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.posts, &mut self.profiles, &mut self.stock, &mut self.out] {
            resolve(base, p);
        }
        let s = &mut self.sentiment;
        for p in [&mut self.keywords, &mut s.labels, &mut s.model, &mut s.corpus]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
    }

    /// Start and end of the post window.
    pub fn range(&self) -> Result<(NaiveDate, NaiveDate)> {
        match (self.from, self.to) {
            (Some(f), Some(t)) => Ok((f, t)),
            _ => Err(Error::Config("`from` and `to` dates are required".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let required = [("posts", &self.posts), ("profiles", &self.profiles), ("stock", &self.stock)];
        for (name, p) in required {
            if p.as_os_str().is_empty() {
                return Err(Error::Config(format!("`{name}` path is required")));
            }
            if !p.exists() {
                return Err(Error::Config(format!("{name} file {} does not exist", p.display())));
            }
        }
        if self.keyword.trim().is_empty() {
            return Err(Error::Config("`keyword` must not be empty".into()));
        }
        let (from, to) = self.range()?;
        if from > to {
            return Err(Error::Config(format!("`from` {from} is after `to` {to}")));
        }
        let s = &self.sentiment;
        let sources = [&s.labels, &s.model, &s.corpus].iter().filter(|p| p.is_some()).count();
        if sources != 1 {
            return Err(Error::Config(
                "set exactly one of sentiment.labels, sentiment.model, sentiment.corpus".into(),
            ));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} outside (0, 1)", self.split)));
        }
        if self.lag.t_min == 0 || self.lag.t_min > self.lag.t_max {
            return Err(Error::Config(format!(
                "lag range {}..={} is invalid",
                self.lag.t_min, self.lag.t_max
            )));
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_tables() {
        let cfg = PipelineConfig::from_toml(
            r#"
            posts = "p.jsonl"
            profiles = "u.jsonl"
            stock = "s.csv"
            keyword = "上证"
            from = "2018-01-01"
            to = "2019-12-31"
            [sentiment]
            labels = "labels.jsonl"
            [train]
            epochs = 5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.lag.t_min, 3);
        assert_eq!(cfg.lag.t_max, 30);
        assert_eq!(cfg.split, 0.6);
        assert_eq!(cfg.tz_offset_hours, 8);
    }

    #[test]
    fn every_documented_key_parses() {
        let cfg = PipelineConfig::from_toml(
            r#"
            posts = "p"
            profiles = "u"
            stock = "s"
            keywords = "k.txt"
            out = "o"
            keyword = "恒生指数"
            from = "2019-01-01"
            to = "2020-12-31"
            tz_offset_hours = 8
            split = 0.6
            trend = "strict_rise"
            aggregate = "probability"
            unknown_users = "afa"
            [sentiment]
            corpus = "c.csv"
            hash_dims = 1024
            [sentiment.classifier]
            learning_rate = 0.5
            epochs = 10
            l2 = 0.0
            [lag]
            t_min = 2
            t_max = 9
            target = "close"
            selection = "absolute"
            [lag.align]
            merge = "drop"
            fill = "carry_forward"
            [train]
            hidden_size = 32
            lookback = 10
            epochs = 5
            batch_size = 16
            learning_rate = 0.01
            dropout = 0.0
            optimizer = "sgd"
            seed = 1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.trend, TrendMode::StrictRise);
        assert_eq!(cfg.lag.target, crate::ingest::PriceColumn::Close);
        assert_eq!(cfg.lag.align.fill, crate::lagsearch::FillPolicy::CarryForward);
        assert_eq!(cfg.train.optimizer, crate::lstm::Optimizer::Sgd);
        assert_eq!(cfg.sentiment.classifier.epochs, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_toml("postz = 'x'").is_err());
        assert!(PipelineConfig::from_toml("[train]\nepoch = 3").is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg = PipelineConfig::from_toml("posts = 'a.jsonl'\nstock = '/abs/s.csv'").unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.posts, PathBuf::from("/data/run/a.jsonl"));
        assert_eq!(cfg.stock, PathBuf::from("/abs/s.csv"));
        assert_eq!(cfg.out, PathBuf::from("/data/run/out"));
    }

    #[test]
    fn validation_catches_missing_pieces() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x");
        fs::write(&f, "").unwrap();
        let mut cfg = PipelineConfig {
            posts: f.clone(),
            profiles: f.clone(),
            stock: f.clone(),
            keyword: "k".into(),
            from: NaiveDate::from_ymd_opt(2018, 1, 1),
            to: NaiveDate::from_ymd_opt(2018, 12, 31),
            ..Default::default()
        };
        assert!(cfg.validate().is_err(), "no sentiment source");
        cfg.sentiment.labels = Some(f.clone());
        cfg.validate().unwrap();
        cfg.sentiment.corpus = Some(f);
        assert!(cfg.validate().is_err(), "two sentiment sources");
        cfg.sentiment.corpus = None;
        cfg.lag.t_min = 40;
        assert!(cfg.validate().is_err());
    }
}

//! Splits authors into the certified-financial group (AFA) and everyone
//! else (UFA), and routes posts accordingly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::ingest::{read_jsonl, PostCollection, PostRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub certified: bool,
    #[serde(default)]
    pub verify_description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupLabel {
    #[serde(rename = "AFA")]
    Afa,
    #[serde(rename = "UFA")]
    Ufa,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 2] = [GroupLabel::Afa, GroupLabel::Ufa];

    /// Lower-case name used for output directories.
    pub fn dir_name(self) -> &'static str {
        match self {
            GroupLabel::Afa => "afa",
            GroupLabel::Ufa => "ufa",
        }
    }
}

impl std::fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupLabel::Afa => "AFA",
            GroupLabel::Ufa => "UFA",
        })
    }
}

/// Default financial keywords. Replaceable through a keywords file.
pub const DEFAULT_KEYWORDS: &[&str] = &[
    "证券",
    "基金",
    "投资顾问",
    "分析师",
    "期货",
    "财经",
    "金融",
    "financial",
    "securities",
    "analyst",
];

pub fn default_keywords() -> Vec<String> {
    DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect()
}

fn normalize(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// AFA iff the account is certified and its description contains at least
/// one keyword (case-insensitive substring after NFC).
pub fn classify_user(profile: &UserProfile, keywords: &[String]) -> GroupLabel {
    if !profile.certified {
        return GroupLabel::Ufa;
    }
    let description = normalize(&profile.verify_description);
    let hit = keywords
        .iter()
        .map(|k| normalize(k))
        .any(|k| !k.is_empty() && description.contains(&k));
    if hit {
        GroupLabel::Afa
    } else {
        GroupLabel::Ufa
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownUserPolicy {
    #[default]
    Ufa,
    Afa,
}

#[derive(Debug, Clone, Default)]
pub struct Partition {
    pub afa: PostCollection,
    pub ufa: PostCollection,
    pub report: PartitionReport,
}

impl Partition {
    pub fn group(&self, label: GroupLabel) -> &[PostRecord] {
        match label {
            GroupLabel::Afa => &self.afa,
            GroupLabel::Ufa => &self.ufa,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub afa_users: usize,
    pub ufa_users: usize,
    pub afa_posts: usize,
    pub ufa_posts: usize,
    /// Posts whose author had no profile.
    pub unknown_user_posts: usize,
}

pub fn partition_posts(
    posts: &[PostRecord],
    profiles: &[UserProfile],
    keywords: &[String],
    policy: UnknownUserPolicy,
) -> Result<Partition> {
    if keywords.is_empty() {
        return Err(Error::Empty("keyword list"));
    }
    let mut labels: HashMap<&str, GroupLabel> = HashMap::with_capacity(profiles.len());
    for p in profiles {
        labels.insert(&p.user_id, classify_user(p, keywords));
    }
    let unknown_label = match policy {
        UnknownUserPolicy::Ufa => GroupLabel::Ufa,
        UnknownUserPolicy::Afa => GroupLabel::Afa,
    };

    let mut out = Partition::default();
    for post in posts {
        let label = match labels.get(post.user_id.as_str()) {
            Some(l) => *l,
            None => {
                out.report.unknown_user_posts += 1;
                unknown_label
            }
        };
        match label {
            GroupLabel::Afa => out.afa.push(post.clone()),
            GroupLabel::Ufa => out.ufa.push(post.clone()),
        }
    }
    out.report.afa_users = labels.values().filter(|l| **l == GroupLabel::Afa).count();
    out.report.ufa_users = labels.len() - out.report.afa_users;
    out.report.afa_posts = out.afa.len();
    out.report.ufa_posts = out.ufa.len();
    Ok(out)
}

/// Profiles JSONL; duplicate user ids are rejected.
pub fn load_profiles(path: &Path) -> Result<Vec<UserProfile>> {
    let profiles: Vec<UserProfile> = read_jsonl(path)?;
    let mut seen = std::collections::HashSet::new();
    for p in &profiles {
        if !seen.insert(p.user_id.as_str()) {
            return Err(Error::Invalid(format!(
                "{}: duplicate user_id {}",
                path.display(),
                p.user_id
            )));
        }
    }
    Ok(profiles)
}

/// One keyword per line; blank lines and `#` comments ignored.
pub fn parse_keywords(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn load_keywords(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kws = parse_keywords(&text);
    if kws.is_empty() {
        return Err(Error::Empty("keyword list"));
    }
    Ok(kws)
}

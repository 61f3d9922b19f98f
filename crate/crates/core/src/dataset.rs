//! Argument corpus, train/validation/test splits and training exports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotate::ScoreRow;
use crate::debate::UtteranceRow;
use crate::jsonl::{write_jsonl, JsonlError};
use crate::strategy::{Condition, StrategyKind, StrategyScoreVector};

pub const DEFAULT_TRAIN_POLITICAL_TOPICS: usize = 101;
pub const DEFAULT_RATIOS: [u32; 3] = [8, 1, 1];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{got} records, at least {need} required")]
    TooFewRecords { got: usize, need: usize },
    #[error("{available} political topics, {requested} requested for training")]
    InsufficientPoliticalTopics { available: usize, requested: usize },
    #[error("record {0} appears twice")]
    DuplicateRecord(String),
    #[error("scores for {0} are outside [0, 1]")]
    InvalidScores(String),
    #[error("utterance {utterance} refers to unknown topic {topic}")]
    UnknownTopic { utterance: String, topic: String },
    #[error("topic {0} has conflicting political labels")]
    InconsistentTopic(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    TestInDomain,
    #[serde(rename = "test_ood")]
    TestOOD,
    TestCrossDomain,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::Val, Split::TestInDomain, Split::TestOOD, Split::TestCrossDomain];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::TestInDomain => "test_in_domain",
            Split::TestOOD => "test_ood",
            Split::TestCrossDomain => "test_cross_domain",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

/// One scored argument. Fields this crate does not know about are kept in
/// `extra` and written back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentRecord {
    pub utterance_id: String,
    pub topic_id: String,
    pub is_political: bool,
    pub strategy: StrategyKind,
    pub condition: Condition,
    pub text: String,
    pub scores: StrategyScoreVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Joins utterances with their aggregated scores and topic labels. Rows
/// without an aggregate (too few valid raters) are left out.
pub fn build_corpus(
    utterances: &[UtteranceRow],
    scores: &[ScoreRow],
    political: &BTreeMap<String, bool>,
) -> Result<Vec<ArgumentRecord>, DatasetError> {
    let by_id: BTreeMap<&str, &ScoreRow> = scores.iter().map(|s| (s.utterance_id.as_str(), s)).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for u in utterances {
        if !seen.insert(u.utterance_id.as_str()) {
            return Err(DatasetError::DuplicateRecord(u.utterance_id.clone()));
        }
        let Some(scores) = by_id.get(u.utterance_id.as_str()).and_then(|s| s.aggregate) else {
            continue;
        };
        if !scores.is_valid() {
            return Err(DatasetError::InvalidScores(u.utterance_id.clone()));
        }
        let is_political = *political.get(&u.topic_id).ok_or_else(|| DatasetError::UnknownTopic {
            utterance: u.utterance_id.clone(),
            topic: u.topic_id.clone(),
        })?;
        out.push(ArgumentRecord {
            utterance_id: u.utterance_id.clone(),
            topic_id: u.topic_id.clone(),
            is_political,
            strategy: u.strategy,
            condition: u.condition,
            text: u.text.clone(),
            scores,
            split: None,
            extra: BTreeMap::new(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Random811,
    TopicTransfer,
}

/// Where a topic's records went under topic transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicBucket {
    TrainPolitical,
    Ood,
    CrossDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub seed: u64,
    pub ratios: [u32; 3],
    pub counts: BTreeMap<Split, usize>,
    /// Present for topic-transfer plans.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub topics: BTreeMap<String, TopicBucket>,
    pub assignments: BTreeMap<String, Split>,
}

impl SplitPlan {
    fn new(mode: SplitMode, seed: u64, assignments: BTreeMap<String, Split>, topics: BTreeMap<String, TopicBucket>) -> Self {
        let mut counts: BTreeMap<Split, usize> = BTreeMap::new();
        for split in assignments.values() {
            *counts.entry(*split).or_default() += 1;
        }
        SplitPlan { mode, seed, ratios: DEFAULT_RATIOS, counts, topics, assignments }
    }

    pub fn count(&self, split: Split) -> usize {
        self.counts.get(&split).copied().unwrap_or(0)
    }

    pub fn topics_in(&self, bucket: TopicBucket) -> BTreeSet<&str> {
        self.topics.iter().filter(|(_, b)| **b == bucket).map(|(t, _)| t.as_str()).collect()
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let text = serde_json::to_string_pretty(self).map_err(JsonlError::from)? + "\n";
        std::fs::write(path, text).map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })
    }
}

fn unique_ids(records: &[ArgumentRecord]) -> Result<Vec<&str>, DatasetError> {
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.utterance_id.as_str()) {
            return Err(DatasetError::DuplicateRecord(r.utterance_id.clone()));
        }
    }
    Ok(ids.into_iter().collect())
}

/// Shuffles ids (sorted first, so input order is irrelevant) and cuts them
/// into validation, test and train: val and test get `floor(n / 10)` each,
/// train keeps the rest.
fn assign_811(ids: &[&str], seed: u64) -> Result<BTreeMap<String, Split>, DatasetError> {
    const MIN_RECORDS: usize = 10;
    if ids.len() < MIN_RECORDS {
        return Err(DatasetError::TooFewRecords { got: ids.len(), need: MIN_RECORDS });
    }
    let total: u32 = DEFAULT_RATIOS.iter().sum();
    let n = ids.len();
    let n_val = n * DEFAULT_RATIOS[1] as usize / total as usize;
    let n_test = n * DEFAULT_RATIOS[2] as usize / total as usize;
    let mut order: Vec<&str> = ids.to_vec();
    order.sort_unstable();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < n_val {
                Split::Val
            } else if i < n_val + n_test {
                Split::TestInDomain
            } else {
                Split::Train
            };
            (id.to_string(), split)
        })
        .collect())
}

pub fn split_random(records: &[ArgumentRecord], seed: u64) -> Result<SplitPlan, DatasetError> {
    let ids = unique_ids(records)?;
    Ok(SplitPlan::new(SplitMode::Random811, seed, assign_811(&ids, seed)?, BTreeMap::new()))
}

/// Samples `n_train_political` political topics whose records are split
/// 8/1/1; the other political topics become the out-of-domain test set and
/// all non-political topics the cross-domain test set.
pub fn split_topic_transfer(
    records: &[ArgumentRecord],
    n_train_political: usize,
    seed: u64,
) -> Result<SplitPlan, DatasetError> {
    unique_ids(records)?;
    let mut political: BTreeMap<&str, bool> = BTreeMap::new();
    for r in records {
        if *political.entry(&r.topic_id).or_insert(r.is_political) != r.is_political {
            return Err(DatasetError::InconsistentTopic(r.topic_id.clone()));
        }
    }
    let mut political_topics: Vec<&str> = political.iter().filter(|(_, p)| **p).map(|(t, _)| *t).collect();
    if political_topics.len() < n_train_political {
        return Err(DatasetError::InsufficientPoliticalTopics {
            available: political_topics.len(),
            requested: n_train_political,
        });
    }
    political_topics.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_topics: BTreeSet<&str> = political_topics[..n_train_political].iter().copied().collect();

    let topics: BTreeMap<String, TopicBucket> = political
        .iter()
        .map(|(t, p)| {
            let bucket = match (p, train_topics.contains(t)) {
                (false, _) => TopicBucket::CrossDomain,
                (true, true) => TopicBucket::TrainPolitical,
                (true, false) => TopicBucket::Ood,
            };
            (t.to_string(), bucket)
        })
        .collect();

    let train_ids: Vec<&str> = records
        .iter()
        .filter(|r| train_topics.contains(r.topic_id.as_str()))
        .map(|r| r.utterance_id.as_str())
        .collect();
    let mut assignments = assign_811(&train_ids, seed)?;
    for r in records {
        match topics[&r.topic_id] {
            TopicBucket::TrainPolitical => {}
            TopicBucket::Ood => {
                assignments.insert(r.utterance_id.clone(), Split::TestOOD);
            }
            TopicBucket::CrossDomain => {
                assignments.insert(r.utterance_id.clone(), Split::TestCrossDomain);
            }
        }
    }
    Ok(SplitPlan::new(SplitMode::TopicTransfer, seed, assignments, topics))
}

/// Returns the records with `split` set from the plan; records the plan does
/// not mention keep their previous value.
pub fn apply_plan(records: &[ArgumentRecord], plan: &SplitPlan) -> Vec<ArgumentRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(split) = plan.assignments.get(&r.utterance_id) {
                r.split = Some(*split);
            }
            r
        })
        .collect()
}

/// Writes one JSONL file per split present in the plan's mode, in corpus
/// order. Returns the written paths.
pub fn export_splits(records: &[ArgumentRecord], plan: &SplitPlan, dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    std::fs::create_dir_all(dir).map_err(|e| DatasetError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let splits: &[Split] = match plan.mode {
        SplitMode::Random811 => &Split::ALL[..3],
        SplitMode::TopicTransfer => &Split::ALL,
    };
    let assigned = apply_plan(records, plan);
    let mut paths = Vec::new();
    for &split in splits {
        let rows: Vec<&ArgumentRecord> = assigned.iter().filter(|r| r.split == Some(split)).collect();
        let path = dir.join(split.file_name());
        write_jsonl(&rows, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

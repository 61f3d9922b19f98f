//! Topic keywords, the two-annotator controversy filter, political labelling
//! and stance-pair generation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::{bindings, Gateway, GatewayError, GENERATION_TEMPERATURE};
use crate::prompts::ids;
use crate::reply::complete_parsed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicKeyword {
    pub topic_id: String,
    pub text: String,
    /// Controversy votes in annotator order.
    #[serde(default)]
    pub controversy_votes: Vec<bool>,
    #[serde(default)]
    pub political_votes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StancePair {
    pub topic_id: String,
    pub stance_pro: String,
    pub stance_con: String,
}

/// A retained topic with its resolved political label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTopic {
    pub topic_id: String,
    pub text: String,
    pub is_political: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum StanceError {
    #[error("topic {0} has fewer than two controversy votes")]
    InsufficientVotes(String),
    #[error("topic {0}: first two political votes disagree and no tie-breaking vote exists")]
    MissingTiebreaker(String),
    #[error("topic {topic_id} has {count} political votes; expected 2 or 3")]
    BadPoliticalVotes { topic_id: String, count: usize },
    #[error("could not parse a stance pair for topic {0}")]
    ParseFailure(String),
    #[error("duplicate topic id {0}")]
    DuplicateTopic(String),
    #[error("unrecognized vote `{value}` for topic {topic_id}")]
    BadVote { topic_id: String, value: String },
    #[error("vote for unknown topic {0}")]
    UnknownTopic(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Keeps topics whose first two controversy votes are both "yes".
pub fn filter_controversial(topics: &[TopicKeyword]) -> Result<Vec<TopicKeyword>, StanceError> {
    let mut kept = Vec::new();
    for topic in topics {
        match topic.controversy_votes.as_slice() {
            [true, true, ..] => kept.push(topic.clone()),
            [_, _, ..] => {}
            _ => return Err(StanceError::InsufficientVotes(topic.topic_id.clone())),
        }
    }
    Ok(kept)
}

/// Unanimous value of the first two political votes, else the third vote.
pub fn label_political(topic: &TopicKeyword) -> Result<bool, StanceError> {
    match topic.political_votes.as_slice() {
        [a, b] | [a, b, _] if a == b => Ok(*a),
        [_, _, tiebreak] => Ok(*tiebreak),
        [_, _] => Err(StanceError::MissingTiebreaker(topic.topic_id.clone())),
        votes => Err(StanceError::BadPoliticalVotes {
            topic_id: topic.topic_id.clone(),
            count: votes.len(),
        }),
    }
}

/// Parses `STANCE_1:` / `STANCE_2:` lines. Both must be present, non-empty
/// and distinct.
pub fn parse_stance_reply(reply: &str) -> Option<(String, String)> {
    let mut pro = None;
    let mut con = None;
    for line in reply.lines().map(str::trim) {
        let line = line.trim_start_matches(['*', '-', ' ']);
        if let Some(rest) = strip_prefix_ci(line, "STANCE_1:") {
            pro.get_or_insert_with(|| rest.trim().to_string());
        } else if let Some(rest) = strip_prefix_ci(line, "STANCE_2:") {
            con.get_or_insert_with(|| rest.trim().to_string());
        }
    }
    match (pro, con) {
        (Some(p), Some(c)) if !p.is_empty() && !c.is_empty() && p != c => Some((p, c)),
        _ => None,
    }
}

fn strip_prefix_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    let head = line.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &line[prefix.len()..])
}

pub fn generate_stance_pair(
    topic: &TopicKeyword,
    gateway: &Gateway,
) -> Result<StancePair, StanceError> {
    let request = gateway.templated(
        ids::STANCE,
        bindings([("topic", topic.text.as_str())]),
        GENERATION_TEMPERATURE,
    )?;
    let expected = "Answer with exactly two lines starting with STANCE_1: and STANCE_2:.";
    match complete_parsed(gateway, &request, expected, parse_stance_reply)? {
        Some((stance_pro, stance_con)) => {
            Ok(StancePair { topic_id: topic.topic_id.clone(), stance_pro, stance_con })
        }
        None => Err(StanceError::ParseFailure(topic.topic_id.clone())),
    }
}

fn parse_vote(topic_id: &str, value: &str) -> Result<bool, StanceError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Ok(true),
        "no" | "n" | "false" | "0" => Ok(false),
        _ => Err(StanceError::BadVote { topic_id: topic_id.to_string(), value: value.to_string() }),
    }
}

#[derive(Deserialize)]
struct TopicRow {
    topic_id: String,
    text: String,
}

#[derive(Deserialize)]
struct VoteRow {
    topic_id: String,
    #[allow(dead_code)]
    annotator_id: String,
    vote: String,
}

fn read_votes(path: &Path) -> Result<Vec<(String, bool)>, StanceError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut votes = Vec::new();
    for row in reader.deserialize::<VoteRow>() {
        let row = row?;
        let vote = parse_vote(&row.topic_id, &row.vote)?;
        votes.push((row.topic_id, vote));
    }
    Ok(votes)
}

/// Loads `topics.csv` plus the two vote files. Votes keep file order per
/// topic, so "first two votes" means the first two rows for that topic.
pub fn load_topics(
    topics_csv: &Path,
    controversy_csv: &Path,
    political_csv: Option<&Path>,
) -> Result<Vec<TopicKeyword>, StanceError> {
    let mut reader = csv::Reader::from_path(topics_csv)?;
    let mut topics = Vec::new();
    let mut index = BTreeMap::new();
    for row in reader.deserialize::<TopicRow>() {
        let row = row?;
        if index.insert(row.topic_id.clone(), topics.len()).is_some() {
            return Err(StanceError::DuplicateTopic(row.topic_id));
        }
        topics.push(TopicKeyword {
            topic_id: row.topic_id,
            text: row.text,
            controversy_votes: Vec::new(),
            political_votes: Vec::new(),
        });
    }
    for (topic_id, vote) in read_votes(controversy_csv)? {
        let i = *index.get(&topic_id).ok_or(StanceError::UnknownTopic(topic_id))?;
        topics[i].controversy_votes.push(vote);
    }
    if let Some(path) = political_csv {
        for (topic_id, vote) in read_votes(path)? {
            let i = *index.get(&topic_id).ok_or(StanceError::UnknownTopic(topic_id))?;
            topics[i].political_votes.push(vote);
        }
    }
    Ok(topics)
}

/// Applies the controversy filter and resolves political labels.
pub fn select_topics(topics: &[TopicKeyword]) -> Result<Vec<LabeledTopic>, StanceError> {
    filter_controversial(topics)?
        .into_iter()
        .map(|t| {
            let is_political = label_political(&t)?;
            Ok(LabeledTopic { topic_id: t.topic_id, text: t.text, is_political })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TopicCounts {
    pub input: usize,
    pub retained: usize,
    pub political: usize,
    pub non_political: usize,
}

pub fn count_topics(input: usize, selected: &[LabeledTopic]) -> TopicCounts {
    let political = selected.iter().filter(|t| t.is_political).count();
    TopicCounts {
        input,
        retained: selected.len(),
        political,
        non_political: selected.len() - political,
    }
}

/// Checks the invariant that every stance pair references a distinct topic.
pub fn check_unique_topics(pairs: &[StancePair]) -> Result<(), StanceError> {
    let mut seen = BTreeSet::new();
    for p in pairs {
        if !seen.insert(p.topic_id.as_str()) {
            return Err(StanceError::DuplicateTopic(p.topic_id.clone()));
        }
    }
    Ok(())
}

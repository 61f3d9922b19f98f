//! Strategy-conditioned two-agent debates.
//!
//! Per round: the Pro agent speaks, its argument goes through the
//! detect-and-revise loop and a redundancy pass, then the Con agent does the
//! same with Pro's argument in view. The finished round is checked for
//! topic drift, repetition and consensus. Off-topic or repetitive rounds are
//! regenerated at most [`MAX_ROUND_REGENERATIONS`] times.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::gateway::{
    bindings, ChatRequest, Gateway, GatewayError, Message, GENERATION_TEMPERATURE,
    JUDGE_TEMPERATURE,
};
use crate::prompts::ids;
use crate::reply::{complete_parsed, parse_yes_no, YES_NO_FORMAT};
use crate::stance::{LabeledTopic, StancePair};
use crate::strategy::{Condition, StrategyKind};

pub const DEFAULT_MAX_ROUNDS: u32 = 5;
pub const DEFAULT_MAX_REVISIONS: u32 = 2;
pub const MAX_ROUND_REGENERATIONS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pro,
    Con,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Pro => "pro",
            Side::Con => "con",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSpec {
    pub topic_id: String,
    pub strategy: StrategyKind,
    pub condition: Condition,
    pub max_rounds: u32,
    pub max_revisions: u32,
}

impl DialogueSpec {
    pub fn new(topic_id: impl Into<String>, strategy: StrategyKind, condition: Condition) -> Self {
        Self {
            topic_id: topic_id.into(),
            strategy,
            condition,
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_revisions: DEFAULT_MAX_REVISIONS,
        }
    }

    pub fn dialogue_id(&self) -> String {
        dialogue_id(&self.topic_id, self.strategy, self.condition)
    }

    pub fn validate(&self) -> Result<(), DebateError> {
        if self.max_rounds == 0 {
            return Err(DebateError::InvalidSpec("max_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn dialogue_id(topic_id: &str, strategy: StrategyKind, condition: Condition) -> String {
    format!("{topic_id}-{strategy}-{condition}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub utterance_id: String,
    pub dialogue_id: String,
    pub round: u32,
    pub side: Side,
    pub text: String,
    pub revision_count: u32,
    pub word_count: usize,
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxRounds,
    Consensus,
    RegenerationExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateDialogue {
    pub dialogue_id: String,
    pub spec: DialogueSpec,
    pub utterances: Vec<Utterance>,
    pub termination: Termination,
}

impl DebateDialogue {
    pub fn rounds(&self) -> u32 {
        self.utterances.iter().map(|u| u.round).max().unwrap_or(0)
    }

    /// Rounds within the cap, contiguous from 1, each exactly Pro then Con,
    /// and revision counts within the dialogue limits.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.rounds() > self.spec.max_rounds {
            return Err(format!("{}: {} rounds exceeds cap", self.dialogue_id, self.rounds()));
        }
        if !self.utterances.len().is_multiple_of(2) {
            return Err(format!("{}: odd number of utterances", self.dialogue_id));
        }
        for (i, pair) in self.utterances.chunks(2).enumerate() {
            let round = i as u32 + 1;
            if pair[0].round != round || pair[1].round != round {
                return Err(format!("{}: rounds not contiguous at {round}", self.dialogue_id));
            }
            if pair[0].side != Side::Pro || pair[1].side != Side::Con {
                return Err(format!("{}: round {round} is not Pro then Con", self.dialogue_id));
            }
        }
        for u in &self.utterances {
            if u.revision_count > self.spec.max_revisions {
                return Err(format!("{}: too many revisions", u.utterance_id));
            }
            if u.word_count != word_count(&u.text) {
                return Err(format!("{}: stale word count", u.utterance_id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundVerdict {
    pub on_topic: bool,
    pub repetitive: bool,
    pub consensus: bool,
}

impl RoundVerdict {
    pub fn accepted(&self) -> bool {
        self.on_topic && !self.repetitive
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DebateError {
    #[error("invalid dialogue spec: {0}")]
    InvalidSpec(String),
    #[error("stance pair is for topic {found}, expected {expected}")]
    StanceMismatch { expected: String, found: String },
    #[error("empty argument from the {0} agent")]
    EmptyUtterance(&'static str),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

fn requirement(condition: Condition) -> &'static str {
    match condition {
        Condition::Use => "use",
        Condition::Avoid => "avoid",
    }
}

fn strategy_bindings(
    text: &str,
    strategy: StrategyKind,
    condition: Condition,
) -> BTreeMap<String, String> {
    bindings([
        ("utterance", text),
        ("strategy", strategy.as_str()),
        ("definition", strategy.definition()),
        ("requirement", requirement(condition)),
        ("condition", condition.as_str()),
    ])
}

/// Asks the detection agent whether `text` follows the strategy instruction.
/// Two unparseable replies count as aligned so the loop always terminates.
pub fn detect_strategy_alignment(
    text: &str,
    strategy: StrategyKind,
    condition: Condition,
    gateway: &Gateway,
) -> Result<bool, GatewayError> {
    let request = gateway.templated(
        ids::DETECT,
        strategy_bindings(text, strategy, condition),
        JUDGE_TEMPERATURE,
    )?;
    match complete_parsed(gateway, &request, YES_NO_FORMAT, parse_yes_no)? {
        Some(aligned) => Ok(aligned),
        None => {
            warn!(%strategy, %condition, "unparseable alignment verdict; treating as aligned");
            Ok(true)
        }
    }
}

fn rewrite(
    template_id: &str,
    text: &str,
    binds: BTreeMap<String, String>,
    gateway: &Gateway,
) -> Result<String, GatewayError> {
    let request = gateway.templated(template_id, binds, GENERATION_TEMPERATURE)?;
    let reply = gateway.complete(&request)?;
    let reply = reply.trim();
    if reply.is_empty() {
        warn!(template_id, "empty rewrite; keeping the original argument");
        Ok(text.to_string())
    } else {
        Ok(reply.to_string())
    }
}

/// Rewrites `text` to follow the strategy instruction. Falls back to the
/// input on an empty reply.
pub fn revise_utterance(
    text: &str,
    strategy: StrategyKind,
    condition: Condition,
    gateway: &Gateway,
) -> Result<String, GatewayError> {
    rewrite(ids::REVISE, text, strategy_bindings(text, strategy, condition), gateway)
}

/// Strips redundancy and filler from `text`.
pub fn refine_redundancy(text: &str, gateway: &Gateway) -> Result<String, GatewayError> {
    rewrite(ids::REFINE, text, bindings([("utterance", text)]), gateway)
}

/// Runs the detect-and-revise loop; returns the final text and the number
/// of revisions applied.
pub fn enforce_strategy(
    text: String,
    strategy: StrategyKind,
    condition: Condition,
    max_revisions: u32,
    gateway: &Gateway,
) -> Result<(String, u32), GatewayError> {
    let mut text = text;
    let mut revisions = 0;
    while revisions < max_revisions && !detect_strategy_alignment(&text, strategy, condition, gateway)? {
        text = revise_utterance(&text, strategy, condition, gateway)?;
        revisions += 1;
    }
    Ok((text, revisions))
}

fn verdict(
    gateway: &Gateway,
    template_id: &str,
    binds: BTreeMap<String, String>,
    default: bool,
) -> Result<bool, GatewayError> {
    let request = gateway.templated(template_id, binds, JUDGE_TEMPERATURE)?;
    Ok(match complete_parsed(gateway, &request, YES_NO_FORMAT, parse_yes_no)? {
        Some(v) => v,
        None => {
            warn!(template_id, default, "unparseable round check; using default");
            default
        }
    })
}

/// Three independent round checks. Unparseable verdicts default to
/// on-topic, not repetitive, no consensus.
pub fn check_round(
    topic: &str,
    pro: &str,
    con: &str,
    history: &str,
    gateway: &Gateway,
) -> Result<RoundVerdict, GatewayError> {
    let on_topic = verdict(
        gateway,
        ids::CHECK_TOPIC,
        bindings([("topic", topic), ("pro", pro), ("con", con)]),
        true,
    )?;
    let repetitive = if history.is_empty() {
        false
    } else {
        verdict(
            gateway,
            ids::CHECK_REPETITION,
            bindings([("history", history), ("pro", pro), ("con", con)]),
            false,
        )?
    };
    let consensus =
        verdict(gateway, ids::CHECK_CONSENSUS, bindings([("pro", pro), ("con", con)]), false)?;
    Ok(RoundVerdict { on_topic, repetitive, consensus })
}

fn render_history(turns: &[(Side, String)]) -> String {
    turns
        .iter()
        .map(|(side, text)| {
            let label = match side {
                Side::Pro => "Debater A",
                Side::Con => "Debater B",
            };
            format!("{label}: {text}")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

struct Debate<'a> {
    spec: &'a DialogueSpec,
    topic: &'a str,
    stances: &'a StancePair,
    gateway: &'a Gateway,
}

impl Debate<'_> {
    fn speak(
        &self,
        side: Side,
        round: u32,
        history: &[(Side, String)],
        attempt: u32,
    ) -> Result<(String, u32), DebateError> {
        let (stance, opponent) = match side {
            Side::Pro => (&self.stances.stance_pro, &self.stances.stance_con),
            Side::Con => (&self.stances.stance_con, &self.stances.stance_pro),
        };
        let template_id = match self.spec.condition {
            Condition::Use => ids::UTTERANCE_USE,
            Condition::Avoid => ids::UTTERANCE_AVOID,
        };
        let history_text = if history.is_empty() {
            "(no arguments yet; you open the debate)".to_string()
        } else {
            render_history(history)
        };
        let retry_note = if attempt == 0 {
            String::new()
        } else {
            format!(
                " (Attempt {}: the previous version of this round was rejected as off-topic or \
                 repetitive; make a new point.)",
                attempt + 1
            )
        };
        let round_text = round.to_string();
        let binds = bindings([
            ("topic", self.topic),
            ("stance", stance.as_str()),
            ("opponent_stance", opponent.as_str()),
            ("strategy", self.spec.strategy.as_str()),
            ("definition", self.spec.strategy.definition()),
            ("condition", self.spec.condition.as_str()),
            ("side", side.as_str()),
            ("history", history_text.as_str()),
            ("round", round_text.as_str()),
            ("retry_note", retry_note.as_str()),
        ]);
        let system = self.gateway.render_prompt(template_id, &binds)?;
        let user = self.gateway.render_prompt(ids::UTTERANCE_TURN, &binds)?;
        let request = ChatRequest::new(
            self.gateway.model_id(),
            vec![Message::system(system), Message::user(user)],
        )
        .with_temperature(GENERATION_TEMPERATURE)
        .tagged(template_id, binds);

        let mut draft = self.gateway.complete(&request)?.trim().to_string();
        if draft.is_empty() {
            let correction = self.gateway.render_prompt(
                ids::REASK,
                &bindings([("expected", "Reply with one argument paragraph.")]),
            )?;
            draft = self.gateway.complete(&request.followed_by("", &correction))?.trim().to_string();
        }
        if draft.is_empty() {
            return Err(DebateError::EmptyUtterance(side.as_str()));
        }
        let (revised, revisions) = enforce_strategy(
            draft,
            self.spec.strategy,
            self.spec.condition,
            self.spec.max_revisions,
            self.gateway,
        )?;
        let refined = refine_redundancy(&revised, self.gateway)?;
        Ok((refined, revisions))
    }

    fn run(&self) -> Result<DebateDialogue, DebateError> {
        let dialogue_id = self.spec.dialogue_id();
        let mut history: Vec<(Side, String)> = Vec::new();
        let mut utterances = Vec::new();
        let mut termination = Termination::MaxRounds;

        'rounds: for round in 1..=self.spec.max_rounds {
            let mut attempt = 0;
            loop {
                let (pro, pro_revisions) = self.speak(Side::Pro, round, &history, attempt)?;
                let mut with_pro = history.clone();
                with_pro.push((Side::Pro, pro.clone()));
                let (con, con_revisions) = self.speak(Side::Con, round, &with_pro, attempt)?;
                let verdict =
                    check_round(self.topic, &pro, &con, &render_history(&history), self.gateway)?;
                if !verdict.accepted() {
                    if attempt == MAX_ROUND_REGENERATIONS {
                        termination = Termination::RegenerationExhausted;
                        break 'rounds;
                    }
                    attempt += 1;
                    continue;
                }
                for (side, text, revision_count) in
                    [(Side::Pro, pro, pro_revisions), (Side::Con, con, con_revisions)]
                {
                    utterances.push(Utterance {
                        utterance_id: format!("{dialogue_id}-r{round}-{}", side.as_str()),
                        dialogue_id: dialogue_id.clone(),
                        round,
                        side,
                        word_count: word_count(&text),
                        text: text.clone(),
                        revision_count,
                    });
                    history.push((side, text));
                }
                if verdict.consensus {
                    termination = Termination::Consensus;
                    break 'rounds;
                }
                break;
            }
        }
        Ok(DebateDialogue { dialogue_id, spec: self.spec.clone(), utterances, termination })
    }
}

pub fn generate_dialogue(
    spec: &DialogueSpec,
    topic_text: &str,
    stances: &StancePair,
    gateway: &Gateway,
) -> Result<DebateDialogue, DebateError> {
    spec.validate()?;
    if stances.topic_id != spec.topic_id {
        return Err(DebateError::StanceMismatch {
            expected: spec.topic_id.clone(),
            found: stances.topic_id.clone(),
        });
    }
    Debate { spec, topic: topic_text, stances, gateway }.run()
}

/// A topic ready for debate generation.
#[derive(Debug, Clone)]
pub struct DebateTopic {
    pub topic: LabeledTopic,
    pub stances: StancePair,
}

#[derive(Debug, Clone, Serialize)]
pub struct DialogueFailure {
    pub dialogue_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub dialogues: Vec<DebateDialogue>,
    pub failures: Vec<DialogueFailure>,
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    pub max_rounds: u32,
    pub max_revisions: u32,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { max_rounds: DEFAULT_MAX_ROUNDS, max_revisions: DEFAULT_MAX_REVISIONS }
    }
}

/// Eight dialogues per topic: every strategy under both conditions.
/// Dialogues run in parallel; output order is topic, strategy, condition.
pub fn generate_corpus(topics: &[DebateTopic], options: CorpusOptions, gateway: &Gateway) -> Corpus {
    let jobs: Vec<(&DebateTopic, DialogueSpec)> = topics
        .iter()
        .flat_map(|t| {
            StrategyKind::ALL.into_iter().flat_map(move |s| {
                Condition::ALL.into_iter().map(move |c| {
                    let mut spec = DialogueSpec::new(t.topic.topic_id.clone(), s, c);
                    spec.max_rounds = options.max_rounds;
                    spec.max_revisions = options.max_revisions;
                    (t, spec)
                })
            })
        })
        .collect();
    let results: Vec<Result<DebateDialogue, DialogueFailure>> = jobs
        .par_iter()
        .map(|(t, spec)| {
            generate_dialogue(spec, &t.topic.text, &t.stances, gateway).map_err(|e| {
                warn!(dialogue = %spec.dialogue_id(), error = %e, "dialogue failed");
                DialogueFailure { dialogue_id: spec.dialogue_id(), error: e.to_string() }
            })
        })
        .collect();
    let mut corpus = Corpus::default();
    for r in results {
        match r {
            Ok(d) => corpus.dialogues.push(d),
            Err(f) => corpus.failures.push(f),
        }
    }
    corpus
}

/// One line of `debates.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceRow {
    pub utterance_id: String,
    pub dialogue_id: String,
    pub topic_id: String,
    pub strategy: StrategyKind,
    pub condition: Condition,
    pub round: u32,
    pub side: Side,
    pub text: String,
    pub revision_count: u32,
    pub word_count: usize,
    pub termination: Termination,
}

pub fn utterance_rows(dialogues: &[DebateDialogue]) -> Vec<UtteranceRow> {
    dialogues
        .iter()
        .flat_map(|d| {
            d.utterances.iter().map(move |u| UtteranceRow {
                utterance_id: u.utterance_id.clone(),
                dialogue_id: d.dialogue_id.clone(),
                topic_id: d.spec.topic_id.clone(),
                strategy: d.spec.strategy,
                condition: d.spec.condition,
                round: u.round,
                side: u.side,
                text: u.text.clone(),
                revision_count: u.revision_count,
                word_count: u.word_count,
                termination: d.termination,
            })
        })
        .collect()
}

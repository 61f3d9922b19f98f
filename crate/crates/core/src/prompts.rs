//! Prompt templates for every LLM call in the pipeline.

use serde::Deserialize;

use crate::gateway::{PromptLibrary, PromptTemplate};
use crate::strategy::StrategyKind;

pub mod ids {
    pub const STANCE: &str = "stance_generation";
    pub const UTTERANCE_USE: &str = "utterance_use";
    pub const UTTERANCE_AVOID: &str = "utterance_avoid";
    pub const UTTERANCE_TURN: &str = "utterance_turn";
    pub const DETECT: &str = "detect_alignment";
    pub const REVISE: &str = "revise_strategy";
    pub const REFINE: &str = "refine_redundancy";
    pub const CHECK_TOPIC: &str = "check_on_topic";
    pub const CHECK_REPETITION: &str = "check_repetition";
    pub const CHECK_CONSENSUS: &str = "check_consensus";
    pub const PERSONA: &str = "annotator_persona";
    pub const ANNOTATE: &str = "annotate_strategies";
    pub const REASK: &str = "reask_format";
}

const STANCE: &str = "\
Given a controversial topic keyword, write two broad and opposing stances on it. \
Each stance is one short declarative sentence beginning with \"We should\". \
The first stance supports the topic and the second opposes it.

Topic: {topic}

Answer with exactly two lines:
STANCE_1: <supporting stance>
STANCE_2: <opposing stance>";

const UTTERANCE_USE: &str = "\
You are a debater in a multi-round debate on the topic \"{topic}\".
Your position: {stance}
Your opponent's position: {opponent_stance}

Build every argument you make on the {strategy} strategy.
{strategy} strategy: {definition}

Answer your opponent's latest point, stay on the topic, and keep each argument to one \
paragraph of at most 100 words. Do not repeat your earlier arguments. If your opponent has \
convinced you, say so plainly.";

const UTTERANCE_AVOID: &str = "\
You are a debater in a multi-round debate on the topic \"{topic}\".
Your position: {stance}
Your opponent's position: {opponent_stance}

Do not use the {strategy} strategy anywhere in your arguments; persuade by other means.
{strategy} strategy: {definition}

Answer your opponent's latest point, stay on the topic, and keep each argument to one \
paragraph of at most 100 words. Do not repeat your earlier arguments. If your opponent has \
convinced you, say so plainly.";

const UTTERANCE_TURN: &str = "\
Debate so far:
{history}

Round {round}. Write your next argument.{retry_note}";

const DETECT: &str = "\
You check whether a debate argument follows its rhetorical instruction.

Strategy: {strategy}
Definition: {definition}
Instruction: the argument must {requirement} this strategy.

Argument:
{utterance}

Does the argument follow the instruction? Answer with a single word on the first line: YES or NO.";

const REVISE: &str = "\
The debate argument below does not follow its rhetorical instruction.

Strategy: {strategy}
Definition: {definition}
Instruction: the argument must {requirement} this strategy.

Argument:
{utterance}

Rewrite the argument so that it follows the instruction while keeping its position and topic. \
Reply with the revised argument only.";

const REFINE: &str = "\
Edit the debate argument below to remove redundancy, filler and trivial wording. Keep its \
position, its rhetorical style and its key points. Reply with the edited argument only.

Argument:
{utterance}";

const CHECK_TOPIC: &str = "\
Debate topic: {topic}

Argument A:
{pro}

Argument B:
{con}

Do both arguments stay on the debate topic? Answer with a single word on the first line: YES or NO.";

const CHECK_REPETITION: &str = "\
Earlier rounds:
{history}

Latest round:
Argument A:
{pro}

Argument B:
{con}

Does the latest round mostly repeat points already made in earlier rounds? Answer with a \
single word on the first line: YES or NO.";

const CHECK_CONSENSUS: &str = "\
Argument A:
{pro}

Argument B:
{con}

Have the two debaters reached agreement, so that the debate should end? Answer with a single \
word on the first line: YES or NO.";

const PERSONA: &str = "\
You are a {age_group} year old {race} {gender}. Your highest level of education is \
{education}, and politically you identify as {leaning}. Read arguments from this point of \
view.";

const ANNOTATE: &str = "\
Rate how strongly the argument below uses each of four rhetorical strategies.

{definitions}

Examples of each strategy:
{exemplars}

Argument:
{argument}

Rate each strategy on a five-point scale: 1 = definitely not using, 2 = probably not using, \
3 = uncertain, 4 = probably using, 5 = definitely using.
Answer on one line in exactly this format:
causal=<1-5> empirical=<1-5> emotional=<1-5> moral=<1-5>";

const REASK: &str = "\
Your previous reply did not follow the required format. {expected}";

/// The default template set.
pub fn library() -> PromptLibrary {
    [
        (ids::STANCE, STANCE),
        (ids::UTTERANCE_USE, UTTERANCE_USE),
        (ids::UTTERANCE_AVOID, UTTERANCE_AVOID),
        (ids::UTTERANCE_TURN, UTTERANCE_TURN),
        (ids::DETECT, DETECT),
        (ids::REVISE, REVISE),
        (ids::REFINE, REFINE),
        (ids::CHECK_TOPIC, CHECK_TOPIC),
        (ids::CHECK_REPETITION, CHECK_REPETITION),
        (ids::CHECK_CONSENSUS, CHECK_CONSENSUS),
        (ids::PERSONA, PERSONA),
        (ids::ANNOTATE, ANNOTATE),
        (ids::REASK, REASK),
    ]
    .into_iter()
    .map(|(id, body)| PromptTemplate::new(id, body))
    .collect()
}

#[derive(Debug, Clone, Deserialize)]
pub struct Exemplar {
    pub strategy: StrategyKind,
    pub text: String,
}

const EXEMPLARS_JSON: &str = include_str!("../assets/exemplars.json");

/// The few-shot exemplars bundled with the crate, two per strategy.
pub fn exemplars() -> Vec<Exemplar> {
    serde_json::from_str(EXEMPLARS_JSON).expect("bundled exemplars file is valid JSON")
}

/// Definitions block for the annotation prompt.
pub fn definitions_block() -> String {
    StrategyKind::ALL
        .iter()
        .map(|s| format!("{}: {}", capitalize(s.as_str()), s.definition()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Exemplar block for the annotation prompt, grouped by strategy.
pub fn exemplar_block(exemplars: &[Exemplar]) -> String {
    let mut lines = Vec::new();
    for s in StrategyKind::ALL {
        for ex in exemplars.iter().filter(|e| e.strategy == s) {
            lines.push(format!("[{}] {}", capitalize(s.as_str()), ex.text));
        }
    }
    lines.join("\n")
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exemplars_cover_each_strategy_twice() {
        let ex = exemplars();
        assert_eq!(ex.len(), 8);
        for s in StrategyKind::ALL {
            assert_eq!(ex.iter().filter(|e| e.strategy == s).count(), 2, "{s}");
        }
    }

    #[test]
    fn every_template_has_a_known_placeholder_set() {
        let lib = library();
        let annotate = lib.get(ids::ANNOTATE).unwrap().placeholders();
        assert_eq!(
            annotate.into_iter().collect::<Vec<_>>(),
            vec!["argument", "definitions", "exemplars"]
        );
        // the reply format line is literal text, not a placeholder
        assert!(lib.get(ids::STANCE).unwrap().placeholders().contains("topic"));
        assert_eq!(lib.ids().count(), 13);
    }
}

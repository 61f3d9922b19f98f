use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{mock_fingerprint, Backend, ChatRequest, GatewayError, RequestTag};
use crate::prompts::ids;
use crate::strategy::StrategyKind;

/// Scripted replies for the mock backend.
///
/// Lookup order for a request: the fingerprint table, then the front of the
/// fallback queue for the request's template id, then (when `synthesize` is
/// set) a deterministic template-aware reply derived from the fingerprint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub replies: BTreeMap<String, String>,
    pub queues: BTreeMap<String, Vec<String>>,
    pub synthesize: bool,
}

impl MockScript {
    pub fn synthesizing() -> Self {
        Self { synthesize: true, ..Self::default() }
    }

    pub fn with_reply(mut self, fingerprint: impl Into<String>, reply: impl Into<String>) -> Self {
        self.replies.insert(fingerprint.into(), reply.into());
        self
    }

    pub fn with_queue<S: Into<String>>(
        mut self,
        template_id: &str,
        replies: impl IntoIterator<Item = S>,
    ) -> Self {
        self.queues
            .entry(template_id.to_string())
            .or_default()
            .extend(replies.into_iter().map(Into::into));
        self
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug)]
pub struct MockBackend {
    replies: BTreeMap<String, String>,
    queues: Mutex<BTreeMap<String, VecDeque<String>>>,
    synthesize: bool,
    calls: Mutex<BTreeMap<String, usize>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self {
            replies: script.replies,
            queues: Mutex::new(
                script.queues.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
            ),
            synthesize: script.synthesize,
            calls: Mutex::new(BTreeMap::new()),
        }
    }

    /// Number of calls seen per template id (`""` for untagged requests).
    pub fn calls(&self) -> BTreeMap<String, usize> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn remaining_queue(&self, template_id: &str) -> usize {
        self.queues
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(template_id)
            .map_or(0, VecDeque::len)
    }
}

impl Backend for MockBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let template_id = request.template_id().unwrap_or("").to_string();
        *self.calls.lock().unwrap_or_else(|e| e.into_inner()).entry(template_id.clone()).or_default() += 1;

        let fingerprint = mock_fingerprint(request);
        if let Some(reply) = self.replies.get(&fingerprint) {
            return Ok(reply.clone());
        }
        if let Some(reply) = self
            .queues
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get_mut(&template_id)
            .and_then(VecDeque::pop_front)
        {
            return Ok(reply);
        }
        if self.synthesize {
            if let Some(reply) = request.tag.as_ref().and_then(|tag| synthesize(tag, &fingerprint)) {
                return Ok(reply);
            }
        }
        Err(GatewayError::Unscripted {
            fingerprint,
            template_id: request.template_id().map(str::to_string),
        })
    }
}

const CAUSAL: &[&str] = &[
    "This change would lead to lower costs for households, and as a result more families could plan ahead.",
    "If we follow this path, the consequence is fewer delays, which in turn leads to better outcomes.",
    "Because the incentives shift, businesses respond, and as a result the whole system adjusts.",
    "Over time this policy leads to measurable gains, since each step causes the next improvement.",
];
const EMPIRICAL: &[&str] = &[
    "A 2019 study of twelve states found that 42 percent of participants reported improvement.",
    "Data from the national survey shows a 17 percent decline over the last decade.",
    "For example, a report by an independent research group documented 3,000 cases in one year.",
    "Statistics published by the census bureau show that 61 percent of respondents agreed.",
];
const EMOTIONAL: &[&str] = &[
    "Imagine the fear in a parent's eyes when everything they love is suddenly at risk!",
    "It is heartbreaking to watch people lose hope while we stand by and do nothing.",
    "Picture the joy on a child's face when that burden is finally lifted.",
    "The frustration and sadness people feel is overwhelming, and they deserve to be heard.",
];
const MORAL: &[&str] = &[
    "It is our moral duty to protect the vulnerable, because justice demands nothing less.",
    "Fairness and basic decency require that we treat every person with equal dignity.",
    "Doing what is ethical matters more than convenience; integrity is a virtue we must uphold.",
    "We have an obligation to serve the greater good and to honor our shared principles of justice.",
];
const NEUTRAL: &[&str] = &[
    "People hold different views on this question, and the debate deserves a careful look.",
    "My position is straightforward and I will state it plainly for everyone here.",
    "There are several parts of this proposal worth discussing in more detail today.",
    "Let me restate the core point so that our disagreement is clear to the audience.",
];

fn bank(strategy: StrategyKind) -> &'static [&'static str] {
    match strategy {
        StrategyKind::Causal => CAUSAL,
        StrategyKind::Empirical => EMPIRICAL,
        StrategyKind::Emotional => EMOTIONAL,
        StrategyKind::Moral => MORAL,
    }
}

fn markers(strategy: StrategyKind) -> &'static [&'static str] {
    match strategy {
        StrategyKind::Causal => &["lead to", "leads to", "as a result", "consequence", "causes"],
        StrategyKind::Empirical => &["study", "percent", "data from", "report by", "statistics"],
        StrategyKind::Emotional => &["imagine", "heartbreaking", "picture the", "fear", "frustration"],
        StrategyKind::Moral => &["duty", "justice", "fairness", "ethical", "obligation"],
    }
}

/// Deterministic byte stream derived from a fingerprint.
struct Entropy {
    seed: String,
    block: Vec<u8>,
    counter: u64,
    pos: usize,
}

impl Entropy {
    fn new(fingerprint: &str) -> Self {
        Self { seed: fingerprint.to_string(), block: Vec::new(), counter: 0, pos: 0 }
    }

    fn byte(&mut self) -> u8 {
        if self.pos >= self.block.len() {
            let mut h = Sha256::new();
            h.update(self.seed.as_bytes());
            h.update(self.counter.to_le_bytes());
            self.block = h.finalize().to_vec();
            self.counter += 1;
            self.pos = 0;
        }
        let b = self.block[self.pos];
        self.pos += 1;
        b
    }

    fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.byte() as usize % items.len()]
    }
}

fn binding<'a>(tag: &'a RequestTag, key: &str) -> &'a str {
    tag.bindings.get(key).map(String::as_str).unwrap_or("")
}

fn synth_argument(tag: &RequestTag, e: &mut Entropy) -> String {
    let strategy = binding(tag, "strategy").parse::<StrategyKind>().ok();
    let avoid = binding(tag, "condition") == "avoid";
    let stance = binding(tag, "stance").trim_end_matches('.');
    let mut sentences = vec![if stance.is_empty() {
        e.pick(NEUTRAL).to_string()
    } else {
        format!("I maintain that {}.", lowercase_first(stance))
    }];
    match strategy {
        Some(s) if !avoid => {
            let first = e.pick(bank(s));
            sentences.push(first.to_string());
            let second = e.pick(bank(s));
            if second != first {
                sentences.push(second.to_string());
            }
        }
        Some(s) => {
            sentences.push(e.pick(NEUTRAL).to_string());
            let others: Vec<StrategyKind> =
                StrategyKind::ALL.into_iter().filter(|o| *o != s).collect();
            let other = others[e.byte() as usize % others.len()];
            sentences.push(e.pick(bank(other)).to_string());
        }
        None => sentences.push(e.pick(NEUTRAL).to_string()),
    }
    sentences.join(" ")
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn synth_likert(text: &str, e: &mut Entropy) -> String {
    let lower = text.to_lowercase();
    let parts: Vec<String> = StrategyKind::ALL
        .iter()
        .map(|&s| {
            let present = markers(s).iter().any(|m| lower.contains(m));
            let jitter = e.byte() % 8;
            let value = match (present, jitter) {
                (true, 0) => 3,
                (true, 1..=3) => 4,
                (true, _) => 5,
                (false, 0) => 3,
                (false, 1..=3) => 2,
                (false, _) => 1,
            };
            format!("{}={}", s.as_str(), value)
        })
        .collect();
    parts.join(" ")
}

fn synthesize(tag: &RequestTag, fingerprint: &str) -> Option<String> {
    let mut e = Entropy::new(fingerprint);
    let reply = match tag.template_id.as_str() {
        ids::STANCE => {
            let topic = binding(tag, "topic");
            format!("STANCE_1: We should support {topic}.\nSTANCE_2: We should oppose {topic}.")
        }
        ids::UTTERANCE_USE | ids::UTTERANCE_AVOID | ids::REVISE => synth_argument(tag, &mut e),
        ids::DETECT => (if e.byte() < 64 { "NO" } else { "YES" }).to_string(),
        ids::REFINE => binding(tag, "utterance").to_string(),
        ids::CHECK_TOPIC => "YES".to_string(),
        ids::CHECK_REPETITION => (if e.byte() < 13 { "YES" } else { "NO" }).to_string(),
        ids::CHECK_CONSENSUS => (if e.byte() < 30 { "YES" } else { "NO" }).to_string(),
        ids::ANNOTATE => synth_likert(binding(tag, "argument"), &mut e),
        _ => return None,
    };
    Some(reply)
}

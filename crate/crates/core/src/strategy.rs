//! The four rhetorical strategies and the per-strategy containers shared by
//! every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A rhetorical strategy. Causal and empirical are the cognitive pair,
/// emotional and moral the affective pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Causal,
    Empirical,
    Emotional,
    Moral,
}

impl StrategyKind {
    /// Canonical order used for vectors, CSV columns and reply grammars.
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Causal,
        StrategyKind::Empirical,
        StrategyKind::Emotional,
        StrategyKind::Moral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Causal => "causal",
            StrategyKind::Empirical => "empirical",
            StrategyKind::Emotional => "emotional",
            StrategyKind::Moral => "moral",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_affective(self) -> bool {
        matches!(self, StrategyKind::Emotional | StrategyKind::Moral)
    }

    /// Operational definition embedded in generation, detection and
    /// annotation prompts.
    pub fn definition(self) -> &'static str {
        match self {
            StrategyKind::Causal => {
                "A causal argument relies on cause-and-effect reasoning to explain or predict the \
                 positive or negative consequences of an action that are measurable or observable, \
                 with or without evidence."
            }
            StrategyKind::Empirical => {
                "An empirical argument relies on evidence such as statistics, examples, \
                 illustrations, anecdotes, and/or citations to sources that support the argument."
            }
            StrategyKind::Emotional => {
                "An emotional argument relies on impassioned, arousing, or provocative language to \
                 express or evoke feelings (such as frustration, fear, hope, joy, desire, sadness, \
                 hurt, and/or surprise)."
            }
            StrategyKind::Moral => {
                "A moral argument relies on concepts of right and wrong, justice, virtue, duty, or \
                 the greater good in order to persuade others about the ethical merit of a \
                 position, decision, or behavior."
            }
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}`")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "causal" => Ok(StrategyKind::Causal),
            "empirical" => Ok(StrategyKind::Empirical),
            "emotional" => Ok(StrategyKind::Emotional),
            "moral" => Ok(StrategyKind::Moral),
            _ => Err(UnknownStrategy(s.to_string())),
        }
    }
}

/// Whether a debate agent was told to adopt or to suppress its target strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Use,
    Avoid,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Use, Condition::Avoid];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Use => "use",
            Condition::Avoid => "avoid",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Four values in canonical strategy order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerStrategy<T> {
    pub causal: T,
    pub empirical: T,
    pub emotional: T,
    pub moral: T,
}

impl<T: Copy> PerStrategy<T> {
    pub fn splat(value: T) -> Self {
        Self { causal: value, empirical: value, emotional: value, moral: value }
    }

    pub fn from_array(values: [T; 4]) -> Self {
        let [causal, empirical, emotional, moral] = values;
        Self { causal, empirical, emotional, moral }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.causal, self.empirical, self.emotional, self.moral]
    }

    pub fn get(&self, strategy: StrategyKind) -> T {
        match strategy {
            StrategyKind::Causal => self.causal,
            StrategyKind::Empirical => self.empirical,
            StrategyKind::Emotional => self.emotional,
            StrategyKind::Moral => self.moral,
        }
    }

    pub fn map<U: Copy>(self, mut f: impl FnMut(StrategyKind, T) -> U) -> PerStrategy<U> {
        PerStrategy {
            causal: f(StrategyKind::Causal, self.causal),
            empirical: f(StrategyKind::Empirical, self.empirical),
            emotional: f(StrategyKind::Emotional, self.emotional),
            moral: f(StrategyKind::Moral, self.moral),
        }
    }
}

impl<T> PerStrategy<T> {
    pub fn get_mut(&mut self, strategy: StrategyKind) -> &mut T {
        match strategy {
            StrategyKind::Causal => &mut self.causal,
            StrategyKind::Empirical => &mut self.empirical,
            StrategyKind::Emotional => &mut self.emotional,
            StrategyKind::Moral => &mut self.moral,
        }
    }
}

/// Normalized strategy scores, each in `[0, 1]`.
pub type StrategyScoreVector = PerStrategy<f64>;

impl StrategyScoreVector {
    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }
}

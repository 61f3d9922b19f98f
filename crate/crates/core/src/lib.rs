//! Rhetorical-strategy data pipeline: strategy-conditioned debate
//! generation, persona-conditioned LLM annotation, agreement and validity
//! statistics, dataset splits, and debate-transcript trend analysis.

pub mod analysis;
pub mod annotate;
pub mod dataset;
pub mod debate;
pub mod gateway;
pub mod jsonl;
pub mod metrics;
pub mod prompts;
pub mod reply;
pub mod stance;
pub mod stats;
pub mod strategy;

pub use gateway::{BackendConfig, ChatRequest, Gateway, GatewayError, MockScript};
pub use strategy::{Condition, PerStrategy, StrategyKind, StrategyScoreVector};

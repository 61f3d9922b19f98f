use std::path::{Path, PathBuf};

use rhetoric_core::annotate::{DEFAULT_MIN_RATERS_HUMAN, DEFAULT_PERSONA_COUNT};
use rhetoric_core::analysis::DEFAULT_BATCH_SIZE;
use rhetoric_core::dataset::DEFAULT_TRAIN_POLITICAL_TOPICS;
use rhetoric_core::debate::{DEFAULT_MAX_REVISIONS, DEFAULT_MAX_ROUNDS};
use rhetoric_core::BackendConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub out: PathBuf,
    pub topics: PathBuf,
    pub controversy_votes: PathBuf,
    pub political_votes: PathBuf,
    pub demographics: PathBuf,
    pub human_scores: PathBuf,
    pub transcripts: PathBuf,
    pub external: PathBuf,
    pub mock_script: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out: "out".into(),
            topics: "fixtures/topics/topics.csv".into(),
            controversy_votes: "fixtures/topics/controversy_votes.csv".into(),
            political_votes: "fixtures/topics/political_votes.csv".into(),
            demographics: "config/demographics.json".into(),
            human_scores: "fixtures/human_scores.csv".into(),
            transcripts: "fixtures/transcripts/sample.csv".into(),
            external: "fixtures/external_validity.csv".into(),
            mock_script: None,
        }
    }
}

/// Everything a run depends on. Loaded from TOML; command-line flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub backend_kind: BackendKind,
    pub backend: BackendConfig,
    pub paths: Paths,
    pub max_rounds: u32,
    pub max_revisions: u32,
    pub persona_count: usize,
    pub min_raters: usize,
    pub min_overlap: usize,
    pub n_train_political: usize,
    pub batch_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            backend_kind: BackendKind::Mock,
            backend: BackendConfig::default(),
            paths: Paths::default(),
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_revisions: DEFAULT_MAX_REVISIONS,
            persona_count: DEFAULT_PERSONA_COUNT,
            min_raters: DEFAULT_MIN_RATERS_HUMAN,
            min_overlap: 10,
            n_train_political: DEFAULT_TRAIN_POLITICAL_TOPICS,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.backend.validate().map_err(|e| e.to_string())?;
        if self.max_rounds == 0 {
            return Err("max_rounds must be at least 1".into());
        }
        if self.persona_count == 0 {
            return Err("persona_count must be at least 1".into());
        }
        if self.min_raters == 0 || self.min_raters > self.persona_count {
            return Err(format!("min_raters must be in 1..={}", self.persona_count));
        }
        if self.batch_size == 0 {
            return Err("batch_size must be at least 1".into());
        }
        Ok(())
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.out.join(name)
    }
}

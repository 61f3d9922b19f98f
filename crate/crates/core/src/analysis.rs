//! Transcript segmentation, scoring, affect-gap trend and partisan contrasts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{aggregate_scores, score_argument, AnnotateError, Persona};
use crate::debate::word_count;
use crate::gateway::Gateway;
use crate::metrics::{welch_t_test, TTestResult};
use crate::stats::{ci95_half_width, mean, t_two_sided_p};
use crate::strategy::{StrategyKind, StrategyScoreVector};

pub const MIN_ARGUMENT_WORDS: usize = 5;
pub const MAX_MISSING_FRACTION: f64 = 0.10;
pub const DEFAULT_BATCH_SIZE: usize = 32;
const YEAR_RANGE: std::ops::RangeInclusive<u16> = 1960..=2100;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("transcript row {row}: {message}")]
    InvalidTurn { row: usize, message: String },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no arguments from the {0:?} party")]
    MissingParty(Party),
    #[error("scorer unavailable: {failed} of {total} arguments could not be scored")]
    ScorerUnavailable { failed: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer transport: {0}")]
    Transport(String),
    #[error("scorer contract violation: {0}")]
    Contract(String),
    #[error("scorer failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
    Moderator,
    Other,
}

impl Party {
    pub fn is_candidate(self) -> bool {
        matches!(self, Party::Democrat | Party::Republican)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub year: u16,
    pub debate_id: String,
    pub speaker: String,
    pub party: Party,
    pub text: String,
}

/// Reads `year,debate_id,speaker,party,text` rows in spoken order.
pub fn read_transcripts(path: &Path) -> Result<Vec<TranscriptTurn>, AnalysisError> {
    let io = |message: String| AnalysisError::Io { path: path.display().to_string(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| io(e.to_string()))?;
    let mut turns = Vec::new();
    for (i, row) in reader.deserialize::<TranscriptTurn>().enumerate() {
        let row_no = i + 1;
        let turn = row.map_err(|e| AnalysisError::InvalidTurn { row: row_no, message: e.to_string() })?;
        if !YEAR_RANGE.contains(&turn.year) {
            return Err(AnalysisError::InvalidTurn { row: row_no, message: format!("year {} out of range", turn.year) });
        }
        turns.push(turn);
    }
    Ok(turns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisArgument {
    pub year: u16,
    pub debate_id: String,
    pub speaker: String,
    pub party: Party,
    pub text: String,
    pub word_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<StrategyScoreVector>,
}

/// Each candidate turn of at least five words becomes one argument.
pub fn segment_arguments(turns: &[TranscriptTurn]) -> Vec<AnalysisArgument> {
    turns
        .iter()
        .filter(|t| t.party.is_candidate())
        .filter_map(|t| {
            let text = t.text.trim();
            let words = word_count(text);
            (words >= MIN_ARGUMENT_WORDS).then(|| AnalysisArgument {
                year: t.year,
                debate_id: t.debate_id.clone(),
                speaker: t.speaker.clone(),
                party: t.party,
                text: text.to_string(),
                word_count: words,
                scores: None,
            })
        })
        .collect()
}

/// Anything that maps texts to strategy scores in `[0, 1]`.
pub trait Scorer: Send + Sync {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<StrategyScoreVector>, ScorerError>;
}

/// Returns the same vector for every text.
pub struct ConstantScorer(pub StrategyScoreVector);

impl Scorer for ConstantScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<StrategyScoreVector>, ScorerError> {
        Ok(vec![self.0; texts.len()])
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<[f64; 4]>,
}

/// Client for a model server exposing `POST {base_url}/score`.
pub struct HttpScorer {
    agent: ureq::Agent,
    endpoint: String,
}

impl HttpScorer {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpScorer { agent, endpoint: format!("{}/score", base_url.trim_end_matches('/')) }
    }
}

/// Checks a `/score` response against the request it answers.
pub fn check_score_response(n_texts: usize, scores: &[[f64; 4]]) -> Result<Vec<StrategyScoreVector>, ScorerError> {
    if scores.len() != n_texts {
        return Err(ScorerError::Contract(format!("{} scores for {n_texts} texts", scores.len())));
    }
    scores
        .iter()
        .map(|s| {
            let v = StrategyScoreVector::from_array(*s);
            if v.is_valid() {
                Ok(v)
            } else {
                Err(ScorerError::Contract(format!("score {s:?} outside [0, 1]")))
            }
        })
        .collect()
}

impl Scorer for HttpScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<StrategyScoreVector>, ScorerError> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&ScoreRequest { texts })
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(ScorerError::Transport(format!("HTTP {status}")));
        }
        let parsed: ScoreResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ScorerError::Contract(format!("malformed body: {e}")))?;
        check_score_response(texts.len(), &parsed.scores)
    }
}

/// Scores each text with a persona panel and aggregates the ratings.
pub struct PanelScorer<'a> {
    pub gateway: &'a Gateway,
    pub panel: Vec<Persona>,
    pub min_raters: usize,
}

impl Scorer for PanelScorer<'_> {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<StrategyScoreVector>, ScorerError> {
        texts
            .iter()
            .map(|text| {
                let mut vectors = Vec::new();
                for persona in &self.panel {
                    match score_argument(text, persona, self.gateway) {
                        Ok(v) => vectors.push(v),
                        Err(AnnotateError::ParseFailure) => {}
                        Err(e) => return Err(ScorerError::Failed(e.to_string())),
                    }
                }
                aggregate_scores(&vectors, self.min_raters).map_err(|e| ScorerError::Failed(e.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringSummary {
    pub total: usize,
    pub scored: usize,
    pub missing: usize,
}

/// Scores arguments in batches. A failed batch is retried item by item;
/// items that still fail are left unscored. More than 10% unscored is fatal.
pub fn score_corpus(
    args: &[AnalysisArgument],
    scorer: &dyn Scorer,
    batch_size: usize,
) -> Result<(Vec<AnalysisArgument>, ScoringSummary), AnalysisError> {
    let batch_size = batch_size.max(1);
    let texts: Vec<String> = args.iter().map(|a| a.text.clone()).collect();
    let scores: Vec<Option<StrategyScoreVector>> = texts
        .par_chunks(batch_size)
        .flat_map_iter(|batch| match scorer.score_batch(batch) {
            Ok(scores) => scores.into_iter().map(Some).collect::<Vec<_>>(),
            Err(err) => {
                tracing::warn!(error = %err, size = batch.len(), "batch failed, scoring items singly");
                batch
                    .iter()
                    .map(|t| {
                        scorer
                            .score_batch(std::slice::from_ref(t))
                            .ok()
                            .and_then(|mut v| v.pop())
                    })
                    .collect()
            }
        })
        .collect();
    let missing = scores.iter().filter(|s| s.is_none()).count();
    if missing as f64 > MAX_MISSING_FRACTION * args.len() as f64 {
        return Err(AnalysisError::ScorerUnavailable { failed: missing, total: args.len() });
    }
    let scored: Vec<AnalysisArgument> = args
        .iter()
        .zip(scores)
        .map(|(a, s)| AnalysisArgument { scores: s, ..a.clone() })
        .collect();
    let summary = ScoringSummary { total: args.len(), scored: args.len() - missing, missing };
    Ok((scored, summary))
}

/// Affective minus cognitive: `(emotional + moral) / 2 - (causal + empirical) / 2`.
pub fn affect_gap(s: &StrategyScoreVector) -> f64 {
    (s.emotional + s.moral) / 2.0 - (s.causal + s.empirical) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

/// Ordinary least squares of value on year, with a two-sided t-test on the
/// slope.
pub fn ols_trend(points: &[(f64, f64)]) -> Result<TrendResult, AnalysisError> {
    let n = points.len();
    if n < 3 {
        return Err(AnalysisError::DegenerateInput(format!("{n} points, at least 3 required")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(AnalysisError::DegenerateInput("non-finite point".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateInput("fewer than 2 distinct years".into()));
    }
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let df = (n - 2) as f64;
    let stderr = (sse / df / sxx).sqrt();
    let (t, p) = if stderr > 0.0 {
        let t = slope / stderr;
        (t, t_two_sided_p(t, df))
    } else if slope == 0.0 {
        (0.0, 1.0)
    } else {
        (slope.signum() * f64::INFINITY, 0.0)
    };
    Ok(TrendResult { slope, intercept, stderr, t, p, n })
}

fn scored(args: &[AnalysisArgument]) -> impl Iterator<Item = (&AnalysisArgument, StrategyScoreVector)> {
    args.iter().filter_map(|a| a.scores.map(|s| (a, s)))
}

/// Argument-level trend of the affect gap over election years.
pub fn affect_gap_trend(args: &[AnalysisArgument]) -> Result<TrendResult, AnalysisError> {
    let points: Vec<(f64, f64)> = scored(args).map(|(a, s)| (a.year as f64, affect_gap(&s))).collect();
    ols_trend(&points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartisanDelta {
    pub n_dem: usize,
    pub n_rep: usize,
    pub mean_dem: f64,
    pub mean_rep: f64,
    pub delta_dem_minus_rep: f64,
    /// `None` when the Welch test is undefined (both groups constant or a
    /// group with fewer than two arguments).
    pub test: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithinPartyContrast {
    pub n: usize,
    pub emotional_minus_empirical: f64,
    pub test: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartisanReport {
    pub per_strategy: BTreeMap<StrategyKind, PartisanDelta>,
    pub within_party: BTreeMap<Party, WithinPartyContrast>,
    /// Per election year, only years where both parties spoke.
    pub per_year: BTreeMap<u16, BTreeMap<StrategyKind, PartisanDelta>>,
}

fn column(scores: &[StrategyScoreVector], s: StrategyKind) -> Vec<f64> {
    scores.iter().map(|v| v.get(s)).collect()
}

fn welch_or_symmetric(a: &[f64], b: &[f64]) -> Option<TTestResult> {
    match welch_t_test(a, b) {
        Ok(t) => Some(t),
        // two constant groups with the same value: no difference at all
        Err(_) if a.len() >= 2 && b.len() >= 2 && mean(a) == mean(b) => {
            Some(TTestResult { mean_diff: 0.0, t: 0.0, df: (a.len() + b.len() - 2) as f64, p: 1.0 })
        }
        Err(_) => None,
    }
}

fn deltas(dem: &[StrategyScoreVector], rep: &[StrategyScoreVector]) -> BTreeMap<StrategyKind, PartisanDelta> {
    StrategyKind::ALL
        .iter()
        .map(|&s| {
            let (d, r) = (column(dem, s), column(rep, s));
            let (mean_dem, mean_rep) = (mean(&d), mean(&r));
            let delta = PartisanDelta {
                n_dem: d.len(),
                n_rep: r.len(),
                mean_dem,
                mean_rep,
                delta_dem_minus_rep: mean_dem - mean_rep,
                test: welch_or_symmetric(&d, &r),
            };
            (s, delta)
        })
        .collect()
}

fn party_scores(args: &[AnalysisArgument], party: Party, year: Option<u16>) -> Vec<StrategyScoreVector> {
    scored(args)
        .filter(|(a, _)| a.party == party && year.is_none_or(|y| a.year == y))
        .map(|(_, s)| s)
        .collect()
}

/// Democrat-minus-Republican differences per strategy with Welch tests, and
/// emotional-minus-empirical contrasts within each party.
pub fn partisan_report(args: &[AnalysisArgument]) -> Result<PartisanReport, AnalysisError> {
    let dem = party_scores(args, Party::Democrat, None);
    let rep = party_scores(args, Party::Republican, None);
    if dem.is_empty() {
        return Err(AnalysisError::MissingParty(Party::Democrat));
    }
    if rep.is_empty() {
        return Err(AnalysisError::MissingParty(Party::Republican));
    }
    let within_party = [(Party::Democrat, &dem), (Party::Republican, &rep)]
        .into_iter()
        .map(|(party, scores)| {
            let emo = column(scores, StrategyKind::Emotional);
            let emp = column(scores, StrategyKind::Empirical);
            let contrast = WithinPartyContrast {
                n: scores.len(),
                emotional_minus_empirical: mean(&emo) - mean(&emp),
                test: welch_or_symmetric(&emo, &emp),
            };
            (party, contrast)
        })
        .collect();
    let years: std::collections::BTreeSet<u16> = scored(args).map(|(a, _)| a.year).collect();
    let per_year = years
        .into_iter()
        .filter_map(|y| {
            let d = party_scores(args, Party::Democrat, Some(y));
            let r = party_scores(args, Party::Republican, Some(y));
            (!d.is_empty() && !r.is_empty()).then(|| (y, deltas(&d, &r)))
        })
        .collect();
    Ok(PartisanReport { per_strategy: deltas(&dem, &rep), within_party, per_year })
}

pub const AFFECT_GAP_COLUMN: &str = "affect_gap_affective_minus_cognitive_mean";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `trend.csv` body: one row per year with per-strategy means and CI95
/// half-widths, plus the affect-gap mean. A CI cell backed by one argument
/// is left empty.
pub fn trend_csv(args: &[AnalysisArgument]) -> Result<Vec<u8>, AnalysisError> {
    let mut by_year: BTreeMap<u16, Vec<StrategyScoreVector>> = BTreeMap::new();
    for (a, s) in scored(args) {
        by_year.entry(a.year).or_default().push(s);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["year".to_string(), "n".to_string()];
    for s in StrategyKind::ALL {
        header.push(format!("{}_mean", s.as_str()));
        header.push(format!("{}_ci95", s.as_str()));
    }
    header.push(AFFECT_GAP_COLUMN.to_string());
    header.push("affect_gap_ci95".to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (year, scores) in by_year {
        let mut row = vec![year.to_string(), scores.len().to_string()];
        for s in StrategyKind::ALL {
            let col = column(&scores, s);
            row.push(mean(&col).to_string());
            row.push(fmt_opt(ci95_half_width(&col)));
        }
        let gaps: Vec<f64> = scores.iter().map(affect_gap).collect();
        row.push(mean(&gaps).to_string());
        row.push(fmt_opt(ci95_half_width(&gaps)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

/// `partisan.csv` body: strategy, party, n, mean, CI95 half-width.
pub fn partisan_csv(args: &[AnalysisArgument]) -> Result<Vec<u8>, AnalysisError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["strategy", "party", "n", "mean", "ci95"]).map_err(csv_err)?;
    for s in StrategyKind::ALL {
        for party in [Party::Democrat, Party::Republican] {
            let col = column(&party_scores(args, party, None), s);
            if col.is_empty() {
                continue;
            }
            w.write_record([
                s.as_str().to_string(),
                format!("{party:?}"),
                col.len().to_string(),
                mean(&col).to_string(),
                fmt_opt(ci95_half_width(&col)),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

fn csv_err(e: csv::Error) -> AnalysisError {
    AnalysisError::Io { path: "<csv>".into(), message: e.to_string() }
}

/// Writes `trend.csv` and `partisan.csv` into `dir`.
pub fn emit_plot_data(args: &[AnalysisArgument], dir: &Path) -> Result<(), AnalysisError> {
    let write = |name: &str, bytes: Vec<u8>| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| AnalysisError::Io { path: path.display().to_string(), message: e.to_string() })
    };
    std::fs::create_dir_all(dir).map_err(|e| AnalysisError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    write("trend.csv", trend_csv(args)?)?;
    write("partisan.csv", partisan_csv(args)?)
}

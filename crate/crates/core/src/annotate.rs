//! Persona sampling, persona-conditioned Likert scoring and aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::debate::UtteranceRow;
use crate::gateway::{Gateway, GatewayError, Message, ChatRequest, JUDGE_TEMPERATURE};
use crate::prompts::{self, ids};
use crate::reply::complete_parsed;
use crate::strategy::{PerStrategy, StrategyKind, StrategyScoreVector};

pub const DEFAULT_PERSONA_COUNT: usize = 5;
pub const DEFAULT_MIN_RATERS_HUMAN: usize = 3;

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("Likert value {0} outside 1..=5")]
    OutOfRange(i64),
    #[error("{got} rating vectors, at least {need} required")]
    TooFewRaters { got: usize, need: usize },
    #[error("invalid demographic tables: {0}")]
    InvalidTables(String),
    #[error("no parseable rating after one re-ask")]
    ParseFailure,
    #[error("argument text is empty")]
    EmptyArgument,
    #[error("persona count must be positive")]
    NoPersonas,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    fn noun(self) -> &'static str {
        match self {
            Gender::Male => "man",
            Gender::Female => "woman",
        }
    }
}

/// A five-year age bracket, identified by its lower bound (15, 20, ..., 85).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgeGroup(u8);

impl AgeGroup {
    pub const YOUNGEST: u8 = 15;
    pub const OLDEST: u8 = 85;

    pub fn new(lower: u8) -> Option<Self> {
        ((Self::YOUNGEST..=Self::OLDEST).contains(&lower) && lower.is_multiple_of(5)).then_some(AgeGroup(lower))
    }

    pub fn all() -> Vec<AgeGroup> {
        (Self::YOUNGEST..=Self::OLDEST).step_by(5).map(AgeGroup).collect()
    }

    pub fn lower(self) -> u8 {
        self.0
    }

    pub fn upper(self) -> u8 {
        self.0 + 4
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lower(), self.upper())
    }
}

impl FromStr for AgeGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once('-').ok_or_else(|| format!("age group `{s}` is not `lo-hi`"))?;
        let lo: u8 = lo.trim().parse().map_err(|_| format!("bad age group `{s}`"))?;
        let hi: u8 = hi.trim().parse().map_err(|_| format!("bad age group `{s}`"))?;
        match AgeGroup::new(lo) {
            Some(g) if g.upper() == hi => Ok(g),
            _ => Err(format!("age group `{s}` is not a bracket between 15-19 and 85-89")),
        }
    }
}

impl Serialize for AgeGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgeGroup {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Race {
    Black,
    White,
    Asian,
    #[serde(rename = "AIAN")]
    Aian,
    #[serde(rename = "NHPI")]
    Nhpi,
}

impl Race {
    pub const ALL: [Race; 5] = [Race::Black, Race::White, Race::Asian, Race::Aian, Race::Nhpi];

    fn adjective(self) -> &'static str {
        match self {
            Race::Black => "Black",
            Race::White => "White",
            Race::Asian => "Asian",
            Race::Aian => "American Indian or Alaska Native",
            Race::Nhpi => "Native Hawaiian or Pacific Islander",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Education {
    #[serde(rename = "Less than High School")]
    LessThanHighSchool,
    #[serde(rename = "High School Graduate")]
    HighSchool,
    #[serde(rename = "Some College but No Degree")]
    SomeCollege,
    #[serde(rename = "Associate Degree")]
    Associate,
    #[serde(rename = "Bachelor's Degree")]
    Bachelor,
    #[serde(rename = "Master's Degree")]
    Master,
    #[serde(rename = "Professional Degree")]
    Professional,
    #[serde(rename = "Doctoral Degree")]
    Doctoral,
}

impl Education {
    pub const ALL: [Education; 8] = [
        Education::LessThanHighSchool,
        Education::HighSchool,
        Education::SomeCollege,
        Education::Associate,
        Education::Bachelor,
        Education::Master,
        Education::Professional,
        Education::Doctoral,
    ];

    fn phrase(self) -> &'static str {
        match self {
            Education::LessThanHighSchool => "less than high school",
            Education::HighSchool => "a high school diploma",
            Education::SomeCollege => "some college but no degree",
            Education::Associate => "an associate degree",
            Education::Bachelor => "a bachelor's degree",
            Education::Master => "a master's degree",
            Education::Professional => "a professional degree",
            Education::Doctoral => "a doctoral degree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Leaning {
    Democrat,
    Republican,
    Independent,
}

impl Leaning {
    pub const ALL: [Leaning; 3] = [Leaning::Democrat, Leaning::Republican, Leaning::Independent];

    fn phrase(self) -> &'static str {
        match self {
            Leaning::Democrat => "a Democrat",
            Leaning::Republican => "a Republican",
            Leaning::Independent => "an Independent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Persona {
    pub gender: Gender,
    pub age_group: AgeGroup,
    pub race: Race,
    pub education: Education,
    pub leaning: Leaning,
}

impl Persona {
    /// Template bindings for the persona system prompt.
    pub fn bindings(&self) -> BTreeMap<String, String> {
        crate::gateway::bindings([
            ("age_group", self.age_group.to_string()),
            ("race", self.race.adjective().to_string()),
            ("gender", self.gender.noun().to_string()),
            ("education", self.education.phrase().to_string()),
            ("leaning", self.leaning.phrase().to_string()),
        ])
    }
}

/// `P(education | age_group, gender)` for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EducationRow {
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub probs: BTreeMap<Education, f64>,
}

/// Marginals for gender, age and race, plus the education and leaning
/// conditionals. Categories absent from a map have probability zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicTables {
    pub gender: BTreeMap<Gender, f64>,
    pub age_group: BTreeMap<AgeGroup, f64>,
    pub race: BTreeMap<Race, f64>,
    pub education: Vec<EducationRow>,
    pub leaning: BTreeMap<Education, BTreeMap<Leaning, f64>>,
}

fn check_distribution<K: fmt::Debug>(name: &str, dist: &BTreeMap<K, f64>) -> Result<(), AnnotateError> {
    if let Some((k, p)) = dist.iter().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(AnnotateError::InvalidTables(format!("{name}: probability {p} for {k:?}")));
    }
    let total: f64 = dist.values().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(AnnotateError::InvalidTables(format!("{name} sums to {total}")));
    }
    Ok(())
}

impl DemographicTables {
    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let io = |message: String| AnnotateError::Io { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let tables: DemographicTables = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        tables.validate()?;
        Ok(tables)
    }

    pub fn validate(&self) -> Result<(), AnnotateError> {
        check_distribution("gender", &self.gender)?;
        check_distribution("age_group", &self.age_group)?;
        check_distribution("race", &self.race)?;
        let mut seen = BTreeMap::new();
        for row in &self.education {
            let name = format!("education | {}, {:?}", row.age_group, row.gender);
            check_distribution(&name, &row.probs)?;
            if seen.insert((row.age_group, row.gender), ()).is_some() {
                return Err(AnnotateError::InvalidTables(format!("duplicate row {name}")));
            }
        }
        for (&age, &pa) in &self.age_group {
            for (&gender, &pg) in &self.gender {
                if pa > 0.0 && pg > 0.0 && !seen.contains_key(&(age, gender)) {
                    return Err(AnnotateError::InvalidTables(format!(
                        "missing education row for {age}, {gender:?}"
                    )));
                }
            }
        }
        for (education, row) in &self.leaning {
            check_distribution(&format!("leaning | {education:?}"), row)?;
        }
        for row in &self.education {
            for (education, p) in &row.probs {
                if *p > 0.0 && !self.leaning.contains_key(education) {
                    return Err(AnnotateError::InvalidTables(format!("missing leaning row for {education:?}")));
                }
            }
        }
        Ok(())
    }
}

struct Categorical<T> {
    values: Vec<T>,
    index: WeightedIndex<f64>,
}

impl<T: Copy + fmt::Debug> Categorical<T> {
    fn new(name: &str, dist: &BTreeMap<T, f64>) -> Result<Self, AnnotateError> {
        let index = WeightedIndex::new(dist.values().copied())
            .map_err(|e| AnnotateError::InvalidTables(format!("{name}: {e}")))?;
        Ok(Categorical { values: dist.keys().copied().collect(), index })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> T {
        self.values[self.index.sample(rng)]
    }
}

/// Draws gender, age and race independently, then education given
/// (age, gender) and leaning given education.
pub struct PersonaSampler {
    gender: Categorical<Gender>,
    age: Categorical<AgeGroup>,
    race: Categorical<Race>,
    education: BTreeMap<(AgeGroup, Gender), Categorical<Education>>,
    leaning: BTreeMap<Education, Categorical<Leaning>>,
}

impl PersonaSampler {
    pub fn new(tables: &DemographicTables) -> Result<Self, AnnotateError> {
        tables.validate()?;
        Ok(PersonaSampler {
            gender: Categorical::new("gender", &tables.gender)?,
            age: Categorical::new("age_group", &tables.age_group)?,
            race: Categorical::new("race", &tables.race)?,
            education: tables
                .education
                .iter()
                .map(|row| Ok(((row.age_group, row.gender), Categorical::new("education", &row.probs)?)))
                .collect::<Result<_, AnnotateError>>()?,
            leaning: tables
                .leaning
                .iter()
                .map(|(e, row)| Ok((*e, Categorical::new("leaning", row)?)))
                .collect::<Result<_, AnnotateError>>()?,
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Persona {
        let gender = self.gender.sample(rng);
        let age_group = self.age.sample(rng);
        let race = self.race.sample(rng);
        // rows exist for every drawable cell, checked by validate()
        let education = self.education[&(age_group, gender)].sample(rng);
        let leaning = self.leaning[&education].sample(rng);
        Persona { gender, age_group, race, education, leaning }
    }
}

pub fn sample_personas(n: usize, tables: &DemographicTables, seed: u64) -> Result<Vec<Persona>, AnnotateError> {
    if n == 0 {
        return Err(AnnotateError::NoPersonas);
    }
    let sampler = PersonaSampler::new(tables)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

/// Four Likert ratings, each in 1..=5.
pub type LikertVector = PerStrategy<u8>;

pub fn is_valid_likert(v: &LikertVector) -> bool {
    v.to_array().iter().all(|x| (1..=5).contains(x))
}

/// `(x - 1) / 4`.
pub fn normalize_likert(x: i64) -> Result<f64, AnnotateError> {
    if !(1..=5).contains(&x) {
        return Err(AnnotateError::OutOfRange(x));
    }
    Ok((x - 1) as f64 / 4.0)
}

pub const LIKERT_FORMAT: &str =
    "Reply with one line of the form: causal=<1-5> empirical=<1-5> emotional=<1-5> moral=<1-5>";

/// Reads `name=value` pairs for all four strategies. Every value must be a
/// single integer in 1..=5 and no strategy may be given twice.
pub fn parse_likert_reply(reply: &str) -> Option<LikertVector> {
    let mut found: PerStrategy<Option<u8>> = PerStrategy::splat(None);
    let tokens = reply.split(|c: char| c.is_whitespace() || c == ',' || c == ';');
    for token in tokens {
        let token = token.trim_matches(|c: char| c == '*' || c == '`' || c == '.');
        let Some((name, value)) = token.split_once('=') else { continue };
        let Ok(strategy) = name.trim().to_ascii_lowercase().parse::<StrategyKind>() else { continue };
        let value: u8 = value.trim().parse().ok()?;
        if !(1..=5).contains(&value) {
            return None;
        }
        let slot = found.get_mut(strategy);
        if slot.is_some_and(|v| v != value) {
            return None;
        }
        *slot = Some(value);
    }
    Some(PerStrategy::from_array([found.causal?, found.empirical?, found.emotional?, found.moral?]))
}

struct AnnotationBlocks {
    definitions: String,
    exemplars: String,
}

static BLOCKS: LazyLock<AnnotationBlocks> = LazyLock::new(|| AnnotationBlocks {
    definitions: prompts::definitions_block(),
    exemplars: prompts::exemplar_block(&prompts::exemplars()),
});

/// The annotation request for one (argument, persona) pair: persona in the
/// system message, definitions, exemplars and argument in the user message.
pub fn annotation_request(text: &str, persona: &Persona, gateway: &Gateway) -> Result<ChatRequest, GatewayError> {
    let system = gateway.render_prompt(ids::PERSONA, &persona.bindings())?;
    let mut bindings = crate::gateway::bindings([
        ("definitions", BLOCKS.definitions.as_str()),
        ("exemplars", BLOCKS.exemplars.as_str()),
        ("argument", text),
    ]);
    let user = gateway.render_prompt(ids::ANNOTATE, &bindings)?;
    bindings.extend(persona.bindings());
    Ok(ChatRequest::new(gateway.model_id(), vec![Message::system(system), Message::user(user)])
        .with_temperature(JUDGE_TEMPERATURE)
        .tagged(ids::ANNOTATE, bindings))
}

pub fn score_argument(text: &str, persona: &Persona, gateway: &Gateway) -> Result<LikertVector, AnnotateError> {
    if text.trim().is_empty() {
        return Err(AnnotateError::EmptyArgument);
    }
    let request = annotation_request(text, persona, gateway)?;
    complete_parsed(gateway, &request, LIKERT_FORMAT, parse_likert_reply)?.ok_or(AnnotateError::ParseFailure)
}

/// Per-strategy mean of normalized ratings.
pub fn aggregate_scores(vectors: &[LikertVector], min_raters: usize) -> Result<StrategyScoreVector, AnnotateError> {
    if vectors.len() < min_raters.max(1) {
        return Err(AnnotateError::TooFewRaters { got: vectors.len(), need: min_raters.max(1) });
    }
    let mut sums = StrategyScoreVector::splat(0.0);
    for v in vectors {
        for s in StrategyKind::ALL {
            *sums.get_mut(s) += normalize_likert(v.get(s) as i64)?;
        }
    }
    let n = vectors.len() as f64;
    Ok(sums.map(|_, total| total / n))
}

/// One line of `scores.jsonl`. `ratings` is keyed by persona index; a
/// `null` rating is a cell whose reply never parsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub utterance_id: String,
    pub ratings: BTreeMap<usize, Option<LikertVector>>,
    pub aggregate: Option<StrategyScoreVector>,
}

/// Scores every utterance with every persona of the panel. Cells run
/// concurrently; output order follows `rows`.
pub fn annotate_corpus(
    rows: &[UtteranceRow],
    panel: &[Persona],
    min_raters: usize,
    gateway: &Gateway,
) -> Result<Vec<ScoreRow>, AnnotateError> {
    if panel.is_empty() {
        return Err(AnnotateError::NoPersonas);
    }
    let cells: Vec<(usize, usize)> =
        (0..rows.len()).flat_map(|r| (0..panel.len()).map(move |p| (r, p))).collect();
    let results: Vec<Option<LikertVector>> = cells
        .par_iter()
        .map(|&(r, p)| match score_argument(&rows[r].text, &panel[p], gateway) {
            Ok(v) => Ok(Some(v)),
            Err(AnnotateError::ParseFailure) => {
                tracing::warn!(utterance = %rows[r].utterance_id, persona = p, "rating missing after re-ask");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;
    Ok(rows
        .iter()
        .zip(results.chunks(panel.len()))
        .map(|(row, ratings)| {
            let valid: Vec<LikertVector> = ratings.iter().flatten().copied().collect();
            ScoreRow {
                utterance_id: row.utterance_id.clone(),
                ratings: ratings.iter().copied().enumerate().collect(),
                aggregate: aggregate_scores(&valid, min_raters).ok(),
            }
        })
        .collect())
}

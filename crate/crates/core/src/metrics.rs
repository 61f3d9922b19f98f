//! Agreement, correlation and significance statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::normalize_likert;
use crate::stats::{mean, sample_variance, t_two_sided_p};
use crate::strategy::{Condition, StrategyKind, StrategyScoreVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("Likert value {0} outside 1..=5")]
    OutOfRange(i64),
    #[error("no rater pair shares enough items for {0}")]
    NoQualifyingPairs(StrategyKind),
    #[error("rater {0} has too few items with at least two other raters")]
    InsufficientOverlap(String),
    #[error("both conditions are required for {0}")]
    MissingCondition(StrategyKind),
    #[error("annotation matrix needs at least two raters")]
    TooFewRaters,
    #[error("duplicate rating for item {item}, rater {rater}, {strategy}")]
    DuplicateCell { item: String, rater: String, strategy: StrategyKind },
    #[error("unknown external label `{0}`; add a strategy column")]
    UnknownLabel(String),
    #[error("input: {0}")]
    Input(String),
}

fn check_lengths(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j hold equal values, ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(xs.len(), ys.len())?;
    if xs.len() < 3 {
        return Err(MetricsError::DegenerateInput(format!("need at least 3 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(MetricsError::DegenerateInput("non-finite value".into()));
    }
    if is_constant(xs) || is_constant(ys) {
        return Err(MetricsError::DegenerateInput("constant input".into()));
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(preds.len(), targets.len())?;
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mse = preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / preds.len() as f64;
    Ok(mse.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassScheme {
    FiveClass,
    ThreeClass,
    TwoClass,
}

impl ClassScheme {
    pub const ALL: [ClassScheme; 3] = [ClassScheme::FiveClass, ClassScheme::ThreeClass, ClassScheme::TwoClass];

    pub fn from_classes(n: u8) -> Option<Self> {
        match n {
            5 => Some(ClassScheme::FiveClass),
            3 => Some(ClassScheme::ThreeClass),
            2 => Some(ClassScheme::TwoClass),
            _ => None,
        }
    }
}

/// A Likert rating after coarsening. Within one scheme the derived order
/// follows the Likert order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Likert(u8),
    No,
    Uncertain,
    NoOrUncertain,
    Yes,
}

pub fn collapse(x: u8, scheme: ClassScheme) -> Result<ClassLabel, MetricsError> {
    if !(1..=5).contains(&x) {
        return Err(MetricsError::OutOfRange(x as i64));
    }
    Ok(match scheme {
        ClassScheme::FiveClass => ClassLabel::Likert(x),
        ClassScheme::ThreeClass => match x {
            1 | 2 => ClassLabel::No,
            3 => ClassLabel::Uncertain,
            _ => ClassLabel::Yes,
        },
        ClassScheme::TwoClass => {
            if x >= 4 {
                ClassLabel::Yes
            } else {
                ClassLabel::NoOrUncertain
            }
        }
    })
}

/// Unweighted Cohen's kappa. Returns 1.0 when both raters use one and the
/// same label throughout (`p_e = p_o = 1`).
pub fn cohen_kappa<L: Ord + Clone>(a: &[L], b: &[L]) -> Result<f64, MetricsError> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = a.len() as f64;
    let mut count_a: BTreeMap<&L, f64> = BTreeMap::new();
    let mut count_b: BTreeMap<&L, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in a.iter().zip(b) {
        *count_a.entry(x).or_default() += 1.0;
        *count_b.entry(y).or_default() += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = count_a
        .iter()
        .map(|(label, ca)| ca * count_b.get(label).copied().unwrap_or(0.0))
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(if (p_o - 1.0).abs() < 1e-15 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub item: usize,
    pub rater: usize,
}

/// Sparse per-strategy Likert ratings by item and rater.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationMatrix {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    cells: BTreeMap<StrategyKind, BTreeMap<Cell, u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanRating {
    pub item_id: String,
    pub rater_id: String,
    pub strategy: StrategyKind,
    pub likert: u8,
}

impl AnnotationMatrix {
    pub fn from_ratings(ratings: &[HumanRating]) -> Result<Self, MetricsError> {
        let mut m = AnnotationMatrix::default();
        let mut item_index = BTreeMap::new();
        let mut rater_index = BTreeMap::new();
        for r in ratings {
            if !(1..=5).contains(&r.likert) {
                return Err(MetricsError::OutOfRange(r.likert as i64));
            }
            let item = *item_index.entry(r.item_id.clone()).or_insert_with(|| {
                m.items.push(r.item_id.clone());
                m.items.len() - 1
            });
            let rater = *rater_index.entry(r.rater_id.clone()).or_insert_with(|| {
                m.raters.push(r.rater_id.clone());
                m.raters.len() - 1
            });
            let previous = m.cells.entry(r.strategy).or_default().insert(Cell { item, rater }, r.likert);
            if previous.is_some() {
                return Err(MetricsError::DuplicateCell {
                    item: r.item_id.clone(),
                    rater: r.rater_id.clone(),
                    strategy: r.strategy,
                });
            }
        }
        if m.raters.len() < 2 {
            return Err(MetricsError::TooFewRaters);
        }
        Ok(m)
    }

    pub fn read_csv(path: &Path) -> Result<Self, MetricsError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| MetricsError::Input(e.to_string()))?;
        let ratings = reader
            .deserialize::<HumanRating>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| MetricsError::Input(e.to_string()))?;
        Self::from_ratings(&ratings)
    }

    pub fn strategies(&self) -> impl Iterator<Item = StrategyKind> + '_ {
        self.cells.keys().copied()
    }

    pub fn cells(&self, strategy: StrategyKind) -> impl Iterator<Item = (Cell, u8)> + '_ {
        self.cells.get(&strategy).into_iter().flat_map(|m| m.iter().map(|(c, v)| (*c, *v)))
    }

    pub fn get(&self, strategy: StrategyKind, item: usize, rater: usize) -> Option<u8> {
        self.cells.get(&strategy)?.get(&Cell { item, rater }).copied()
    }

    /// Ratings per item as `rater -> likert`.
    pub fn by_item(&self, strategy: StrategyKind) -> BTreeMap<usize, BTreeMap<usize, u8>> {
        let mut out: BTreeMap<usize, BTreeMap<usize, u8>> = BTreeMap::new();
        for (cell, v) in self.cells(strategy) {
            out.entry(cell.item).or_default().insert(cell.rater, v);
        }
        out
    }

    /// Ratings per rater as `item -> likert`.
    pub fn by_rater(&self, strategy: StrategyKind) -> BTreeMap<usize, BTreeMap<usize, u8>> {
        let mut out: BTreeMap<usize, BTreeMap<usize, u8>> = BTreeMap::new();
        for (cell, v) in self.cells(strategy) {
            out.entry(cell.rater).or_default().insert(cell.item, v);
        }
        out
    }

    /// Mean normalized score per item, keeping items rated by at least
    /// `min_raters` raters.
    pub fn aggregate_items(&self, strategy: StrategyKind, min_raters: usize) -> BTreeMap<String, f64> {
        self.by_item(strategy)
            .into_iter()
            .filter(|(_, raters)| raters.len() >= min_raters)
            .map(|(item, raters)| {
                let values: Vec<f64> = raters.values().map(|&v| normalize_unchecked(v)).collect();
                (self.items[item].clone(), mean(&values))
            })
            .collect()
    }
}

fn normalize_unchecked(v: u8) -> f64 {
    normalize_likert(v as i64).expect("matrix cells are validated on construction")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaSummary {
    pub mean: f64,
    pub pairs: usize,
    pub min_overlap: usize,
}

/// Mean Cohen's kappa over rater pairs sharing at least `min_overlap` items,
/// labels collapsed by `scheme` first.
pub fn pairwise_average_kappa(
    m: &AnnotationMatrix,
    scheme: ClassScheme,
    min_overlap: usize,
) -> Result<BTreeMap<StrategyKind, KappaSummary>, MetricsError> {
    let mut out = BTreeMap::new();
    for strategy in m.strategies() {
        let by_rater = m.by_rater(strategy);
        let raters: Vec<&usize> = by_rater.keys().collect();
        let mut kappas = Vec::new();
        for (i, ra) in raters.iter().enumerate() {
            for rb in &raters[i + 1..] {
                let a_items = &by_rater[*ra];
                let b_items = &by_rater[*rb];
                let mut la = Vec::new();
                let mut lb = Vec::new();
                for (item, va) in a_items {
                    if let Some(vb) = b_items.get(item) {
                        la.push(collapse(*va, scheme)?);
                        lb.push(collapse(*vb, scheme)?);
                    }
                }
                if la.len() >= min_overlap.max(1) {
                    kappas.push(cohen_kappa(&la, &lb)?);
                }
            }
        }
        if kappas.is_empty() {
            return Err(MetricsError::NoQualifyingPairs(strategy));
        }
        out.insert(strategy, KappaSummary { mean: mean(&kappas), pairs: kappas.len(), min_overlap });
    }
    Ok(out)
}

/// Equal-weight mean of per-strategy values.
pub fn strategy_average(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    mean(&v)
}

/// Items a rater shares with at least two other raters, paired with the
/// mean normalized score of those others.
fn loo_pairs(
    by_item: &BTreeMap<usize, BTreeMap<usize, u8>>,
    rater: usize,
) -> Vec<(usize, u8, f64)> {
    by_item
        .iter()
        .filter_map(|(item, raters)| {
            let own = *raters.get(&rater)?;
            let others: Vec<f64> = raters
                .iter()
                .filter(|(r, _)| **r != rater)
                .map(|(_, v)| normalize_unchecked(*v))
                .collect();
            (others.len() >= 2).then(|| (*item, own, mean(&others)))
        })
        .collect()
}

/// Spearman between one rater and the leave-one-out mean of the others.
pub fn loo_rater(m: &AnnotationMatrix, strategy: StrategyKind, rater: usize) -> Result<f64, MetricsError> {
    let pairs = loo_pairs(&m.by_item(strategy), rater);
    if pairs.len() < 3 {
        return Err(MetricsError::InsufficientOverlap(m.raters[rater].clone()));
    }
    let own: Vec<f64> = pairs.iter().map(|p| normalize_unchecked(p.1)).collect();
    let consensus: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    spearman(&own, &consensus)
}

/// The external scorer takes the left-out rater's place: it is compared
/// with the same leave-one-out consensus, over that rater's items which the
/// scorer also covers.
pub fn loo_external(
    m: &AnnotationMatrix,
    strategy: StrategyKind,
    rater: usize,
    external: &BTreeMap<String, f64>,
) -> Result<f64, MetricsError> {
    let pairs: Vec<(f64, f64)> = loo_pairs(&m.by_item(strategy), rater)
        .into_iter()
        .filter_map(|(item, _, consensus)| external.get(&m.items[item]).map(|s| (*s, consensus)))
        .collect();
    if pairs.len() < 3 {
        return Err(MetricsError::InsufficientOverlap(m.raters[rater].clone()));
    }
    let (ext, cons): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    spearman(&ext, &cons)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooSummary {
    pub per_rater: BTreeMap<String, f64>,
    pub average: Option<f64>,
    /// Raters that could not be evaluated, with the reason.
    pub skipped: BTreeMap<String, String>,
}

fn summarize(results: Vec<(String, Result<f64, MetricsError>)>) -> LooSummary {
    let mut per_rater = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for (rater, r) in results {
        match r {
            Ok(v) => {
                per_rater.insert(rater, v);
            }
            Err(e) => {
                skipped.insert(rater, e.to_string());
            }
        }
    }
    let average = (!per_rater.is_empty()).then(|| mean(&per_rater.values().copied().collect::<Vec<_>>()));
    LooSummary { per_rater, average, skipped }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub human: LooSummary,
    pub external: Option<LooSummary>,
}

/// Leave-one-out consensus agreement for every rater, and optionally for an
/// external scorer evaluated against each rater's leave-one-out consensus.
pub fn loo_consensus(
    m: &AnnotationMatrix,
    strategy: StrategyKind,
    external: Option<&BTreeMap<String, f64>>,
) -> LooReport {
    let raters: Vec<usize> = m.by_rater(strategy).keys().copied().collect();
    let human = summarize(
        raters.iter().map(|&r| (m.raters[r].clone(), loo_rater(m, strategy, r))).collect(),
    );
    let external = external.map(|ext| {
        summarize(
            raters
                .iter()
                .map(|&r| (m.raters[r].clone(), loo_external(m, strategy, r, ext)))
                .collect(),
        )
    });
    LooReport { human, external }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test of `g1` against `g2`, two-sided.
pub fn welch_t_test(g1: &[f64], g2: &[f64]) -> Result<TTestResult, MetricsError> {
    if g1.len() < 2 || g2.len() < 2 {
        return Err(MetricsError::DegenerateInput("each group needs at least 2 values".into()));
    }
    if g1.iter().chain(g2).any(|v| !v.is_finite()) {
        return Err(MetricsError::DegenerateInput("non-finite value".into()));
    }
    let (n1, n2) = (g1.len() as f64, g2.len() as f64);
    let (v1, v2) = (sample_variance(g1) / n1, sample_variance(g2) / n2);
    if v1 + v2 == 0.0 {
        return Err(MetricsError::DegenerateInput("both groups are constant".into()));
    }
    let mean_diff = mean(g1) - mean(g2);
    let t = mean_diff / (v1 + v2).sqrt();
    let df = (v1 + v2).powi(2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    Ok(TTestResult { mean_diff, t, df, p: t_two_sided_p(t, df) })
}

/// A scored argument with the instruction it was generated under.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedScore {
    pub target: StrategyKind,
    pub condition: Condition,
    pub scores: StrategyScoreVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionValidity {
    pub n_use: usize,
    pub n_avoid: usize,
    pub spearman: f64,
    pub mean_use: f64,
    pub mean_avoid: f64,
    /// Mean score on arguments generated for one of the other strategies.
    pub mean_others: Option<f64>,
    pub ttest: Option<TTestResult>,
}

/// Spearman between the Use=1/Avoid=0 indicator and the strategy's own score,
/// over arguments generated for that strategy.
pub fn condition_validity(
    records: &[ConditionedScore],
    strategy: StrategyKind,
) -> Result<ConditionValidity, MetricsError> {
    let mut use_scores = Vec::new();
    let mut avoid_scores = Vec::new();
    let mut others = Vec::new();
    for r in records {
        let s = r.scores.get(strategy);
        if r.target != strategy {
            others.push(s);
            continue;
        }
        match r.condition {
            Condition::Use => use_scores.push(s),
            Condition::Avoid => avoid_scores.push(s),
        }
    }
    if use_scores.is_empty() || avoid_scores.is_empty() {
        return Err(MetricsError::MissingCondition(strategy));
    }
    let indicator: Vec<f64> = use_scores
        .iter()
        .map(|_| 1.0)
        .chain(avoid_scores.iter().map(|_| 0.0))
        .collect();
    let scores: Vec<f64> = use_scores.iter().chain(&avoid_scores).copied().collect();
    Ok(ConditionValidity {
        n_use: use_scores.len(),
        n_avoid: avoid_scores.len(),
        spearman: spearman(&indicator, &scores)?,
        mean_use: mean(&use_scores),
        mean_avoid: mean(&avoid_scores),
        mean_others: (!others.is_empty()).then(|| mean(&others)),
        ttest: welch_t_test(&use_scores, &avoid_scores).ok(),
    })
}

/// Known external-corpus labels and the strategy each one probes.
pub fn external_label_strategy(label: &str) -> Option<StrategyKind> {
    let key: String = label.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    Some(match key.as_str() {
        "slipperyslope" | "falsecause" | "logicalappeal" => StrategyKind::Causal,
        "credibility" | "evidence" | "appealtoauthority" => StrategyKind::Empirical,
        "appealtoemotion" | "personalstory" => StrategyKind::Emotional,
        "moralemotion" => StrategyKind::Moral,
        _ => return None,
    })
}

/// One row of an external-validity file: a scored text with a binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRow {
    pub dataset: String,
    pub label: String,
    #[serde(default)]
    pub strategy: Option<StrategyKind>,
    pub positive: u8,
    pub causal: f64,
    pub empirical: f64,
    pub emotional: f64,
    pub moral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalValidity {
    pub dataset: String,
    pub label: String,
    pub strategy: StrategyKind,
    pub n_pos: usize,
    pub n_neg: usize,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub ttest: TTestResult,
}

/// Strategy plus positive and negative scores for one (dataset, label).
type LabelGroup = (StrategyKind, Vec<f64>, Vec<f64>);

/// Mean score difference between positively and negatively labelled texts,
/// with a Welch test, per (dataset, label).
pub fn external_validity(rows: &[ExternalRow]) -> Result<Vec<ExternalValidity>, MetricsError> {
    let mut groups: BTreeMap<(String, String), LabelGroup> = BTreeMap::new();
    for row in rows {
        let strategy = match row.strategy {
            Some(s) => s,
            None => external_label_strategy(&row.label)
                .ok_or_else(|| MetricsError::UnknownLabel(row.label.clone()))?,
        };
        let score = StrategyScoreVector::from_array([row.causal, row.empirical, row.emotional, row.moral])
            .get(strategy);
        let entry = groups
            .entry((row.dataset.clone(), row.label.clone()))
            .or_insert_with(|| (strategy, Vec::new(), Vec::new()));
        match row.positive {
            0 => entry.2.push(score),
            1 => entry.1.push(score),
            v => return Err(MetricsError::Input(format!("positive must be 0 or 1, got {v}"))),
        }
    }
    groups
        .into_iter()
        .map(|((dataset, label), (strategy, pos, neg))| {
            let ttest = welch_t_test(&pos, &neg)?;
            Ok(ExternalValidity {
                dataset,
                label,
                strategy,
                n_pos: pos.len(),
                n_neg: neg.len(),
                mean_pos: mean(&pos),
                mean_neg: mean(&neg),
                ttest,
            })
        })
        .collect()
}

/// Distinct values, for fixture sanity checks.
pub fn distinct<T: Ord + Clone>(xs: &[T]) -> BTreeSet<T> {
    xs.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn spearman_identity_and_reversal() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(spearman(&xs, &xs).unwrap(), 1.0, epsilon = 1e-12);
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        assert_abs_diff_eq!(spearman(&xs, &rev).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn spearman_hand_value() {
        // d = (0, -1, 1), sum d^2 = 2, rho = 1 - 6*2/(3*8) = 0.5
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spearman_degenerate_inputs() {
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(MetricsError::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(MetricsError::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 2.0, 3.0], &[1.0]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn rmse_hand_values() {
        assert_eq!(rmse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(rmse(&[0.5], &[0.0]).unwrap(), 0.5);
        assert_eq!(rmse(&[], &[]), Err(MetricsError::EmptyInput));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn collapse_schemes() {
        assert_eq!(collapse(3, ClassScheme::ThreeClass).unwrap(), ClassLabel::Uncertain);
        assert_eq!(collapse(4, ClassScheme::TwoClass).unwrap(), ClassLabel::Yes);
        assert_eq!(collapse(2, ClassScheme::TwoClass).unwrap(), ClassLabel::NoOrUncertain);
        assert_eq!(collapse(3, ClassScheme::TwoClass).unwrap(), ClassLabel::NoOrUncertain);
        assert_eq!(collapse(1, ClassScheme::ThreeClass).unwrap(), ClassLabel::No);
        assert_eq!(collapse(5, ClassScheme::FiveClass).unwrap(), ClassLabel::Likert(5));
        assert_eq!(collapse(0, ClassScheme::FiveClass), Err(MetricsError::OutOfRange(0)));
        assert_eq!(collapse(6, ClassScheme::TwoClass), Err(MetricsError::OutOfRange(6)));
    }

    #[test]
    fn collapse_is_monotone() {
        for scheme in ClassScheme::ALL {
            for x in 1..5u8 {
                assert!(collapse(x, scheme).unwrap() <= collapse(x + 1, scheme).unwrap());
            }
        }
    }

    #[test]
    fn kappa_hand_values() {
        assert_eq!(cohen_kappa(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_abs_diff_eq!(cohen_kappa(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap(), 0.0, epsilon = 1e-15);
        // p_o = 3/4, p_e = (4*3)/16 = 3/4 -> 0
        assert_abs_diff_eq!(cohen_kappa(&[1, 1, 1, 1], &[1, 1, 1, 2]).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(cohen_kappa(&[7, 7], &[7, 7]).unwrap(), 1.0);
    }

    #[test]
    fn welch_symmetric_groups() {
        let g = [1.0, 2.0, 4.0];
        let r = welch_t_test(&g, &g).unwrap();
        assert_eq!((r.mean_diff, r.t, r.p), (0.0, 0.0, 1.0));
    }

    #[test]
    fn welch_one_constant_group() {
        // s1^2 = 1, s2^2 = 0: t = -3 / sqrt(1/3), df = (1/3)^2 / ((1/3)^2 / 2) = 2
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_abs_diff_eq!(r.t, -3.0 / (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.df, 2.0, epsilon = 1e-12);
        assert!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(welch_t_test(&[1.0], &[2.0, 3.0]).is_err());
    }

    fn matrix(rows: &[(&str, &str, u8)]) -> AnnotationMatrix {
        let ratings: Vec<HumanRating> = rows
            .iter()
            .map(|(i, r, v)| HumanRating {
                item_id: i.to_string(),
                rater_id: r.to_string(),
                strategy: StrategyKind::Moral,
                likert: *v,
            })
            .collect();
        AnnotationMatrix::from_ratings(&ratings).unwrap()
    }

    #[test]
    fn identical_raters_have_unit_kappa_under_every_scheme() {
        let mut rows = Vec::new();
        for (i, v) in [1u8, 2, 3, 4, 5, 4, 3, 2, 1, 5, 5, 1].iter().enumerate() {
            let item = format!("i{i}");
            for r in ["a", "b", "c"] {
                rows.push((item.clone(), r, *v));
            }
        }
        let rows: Vec<(&str, &str, u8)> = rows.iter().map(|(i, r, v)| (i.as_str(), *r, *v)).collect();
        let m = matrix(&rows);
        for scheme in ClassScheme::ALL {
            let k = pairwise_average_kappa(&m, scheme, 10).unwrap();
            assert_eq!(k[&StrategyKind::Moral].mean, 1.0);
            assert_eq!(k[&StrategyKind::Moral].pairs, 3);
        }
    }

    #[test]
    fn disjoint_raters_have_no_qualifying_pairs() {
        let m = matrix(&[("i1", "a", 1), ("i2", "a", 2), ("i3", "b", 3), ("i4", "b", 4)]);
        assert_eq!(
            pairwise_average_kappa(&m, ClassScheme::FiveClass, 1),
            Err(MetricsError::NoQualifyingPairs(StrategyKind::Moral))
        );
    }

    #[test]
    fn matrix_rejects_bad_input() {
        let dup = [
            HumanRating { item_id: "i".into(), rater_id: "a".into(), strategy: StrategyKind::Moral, likert: 3 },
            HumanRating { item_id: "i".into(), rater_id: "a".into(), strategy: StrategyKind::Moral, likert: 4 },
        ];
        assert!(matches!(AnnotationMatrix::from_ratings(&dup), Err(MetricsError::DuplicateCell { .. })));
        let single = [dup[0].clone()];
        assert_eq!(AnnotationMatrix::from_ratings(&single), Err(MetricsError::TooFewRaters));
    }

    #[test]
    fn loo_rater_matching_consensus_is_one() {
        // rater a equals the mean of b and c on every item
        let mut rows = Vec::new();
        for (i, (b, c)) in [(1u8, 1u8), (2, 4), (5, 5), (4, 4)].iter().enumerate() {
            let item = format!("i{i}");
            rows.push((item.clone(), "a", (b + c) / 2));
            rows.push((item.clone(), "b", *b));
            rows.push((item, "c", *c));
        }
        let rows: Vec<(&str, &str, u8)> = rows.iter().map(|(i, r, v)| (i.as_str(), *r, *v)).collect();
        let m = matrix(&rows);
        assert_abs_diff_eq!(loo_rater(&m, StrategyKind::Moral, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn loo_needs_three_shared_items() {
        let m = matrix(&[
            ("i1", "a", 1), ("i1", "b", 2), ("i1", "c", 3),
            ("i2", "a", 2), ("i2", "b", 3), ("i2", "c", 4),
        ]);
        assert_eq!(
            loo_rater(&m, StrategyKind::Moral, 0),
            Err(MetricsError::InsufficientOverlap("a".into()))
        );
        let report = loo_consensus(&m, StrategyKind::Moral, None);
        assert!(report.human.average.is_none());
        assert_eq!(report.human.skipped.len(), 3);
    }

    fn scored(target: StrategyKind, condition: Condition, moral: f64) -> ConditionedScore {
        ConditionedScore {
            target,
            condition,
            scores: StrategyScoreVector::from_array([0.5, 0.5, 0.5, moral]),
        }
    }

    #[test]
    fn condition_validity_separated_groups() {
        let records = vec![
            scored(StrategyKind::Moral, Condition::Use, 0.9),
            scored(StrategyKind::Moral, Condition::Use, 0.8),
            scored(StrategyKind::Moral, Condition::Avoid, 0.1),
            scored(StrategyKind::Moral, Condition::Avoid, 0.2),
            scored(StrategyKind::Causal, Condition::Use, 0.4),
        ];
        let v = condition_validity(&records, StrategyKind::Moral).unwrap();
        assert_eq!((v.n_use, v.n_avoid), (2, 2));
        // indicator ranks (3.5,3.5,1.5,1.5) vs score ranks (4,3,1,2): r = 2/sqrt(5)
        assert_abs_diff_eq!(v.spearman, 2.0 / 5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(v.mean_others, Some(0.4));
    }

    #[test]
    fn condition_validity_needs_both_conditions() {
        let records = vec![scored(StrategyKind::Moral, Condition::Use, 0.9)];
        assert_eq!(
            condition_validity(&records, StrategyKind::Moral),
            Err(MetricsError::MissingCondition(StrategyKind::Moral))
        );
    }

    #[test]
    fn external_labels_map_to_strategies() {
        assert_eq!(external_label_strategy("Slippery Slope"), Some(StrategyKind::Causal));
        assert_eq!(external_label_strategy("appeal_to_authority"), Some(StrategyKind::Empirical));
        assert_eq!(external_label_strategy("Personal Story"), Some(StrategyKind::Emotional));
        assert_eq!(external_label_strategy("Moral Emotion"), Some(StrategyKind::Moral));
        assert_eq!(external_label_strategy("ad hominem"), None);
    }

    #[test]
    fn external_validity_mean_difference() {
        let row = |positive, emotional| ExternalRow {
            dataset: "d".into(),
            label: "Appeal to Emotion".into(),
            strategy: None,
            positive,
            causal: 0.0,
            empirical: 0.0,
            emotional,
            moral: 0.0,
        };
        let rows = vec![row(1, 0.8), row(1, 0.6), row(0, 0.2), row(0, 0.3)];
        let out = external_validity(&rows).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].strategy, StrategyKind::Emotional);
        assert_abs_diff_eq!(out[0].ttest.mean_diff, 0.45, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_is_rank_invariant(
            pairs in prop::collection::vec((-100i32..100, -100i32..100), 3..30)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            prop_assume!(!is_constant(&xs) && !is_constant(&ys));
            let base = spearman(&xs, &ys).unwrap();
            let transformed: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp() + 3.0).collect();
            prop_assert!((spearman(&transformed, &ys).unwrap() - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }

        #[test]
        fn kappa_is_symmetric_and_bounded(
            pairs in prop::collection::vec((1u8..=5, 1u8..=5), 1..40)
        ) {
            let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let k1 = cohen_kappa(&a, &b).unwrap();
            let k2 = cohen_kappa(&b, &a).unwrap();
            prop_assert!((k1 - k2).abs() < 1e-12);
            prop_assert!(k1 <= 1.0 + 1e-12);
        }
    }
}

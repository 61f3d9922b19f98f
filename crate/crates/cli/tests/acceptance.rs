//! Acceptance suite for the pipeline. Runs every offline criterion, prints
//! one PASS/FAIL line each and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use rhetoric_core::analysis::{self, AnalysisArgument, Party};
use rhetoric_core::annotate::{self, DemographicTables, Persona};
use rhetoric_core::dataset::{self, ArgumentRecord, Split, TopicBucket};
use rhetoric_core::metrics::{self, AnnotationMatrix, ClassScheme};
use rhetoric_core::stance;
use rhetoric_core::{Condition, StrategyKind, StrategyScoreVector};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, ours: f64, oracle: f64, tol: f64) -> Result<(), String> {
    ensure((ours - oracle).abs() <= tol, || format!("{name}: {ours} vs oracle {oracle} (tol {tol})"))
}

// ---------------------------------------------------------------- 1

fn likert_normalization() -> Outcome {
    let expected = [0.0, 0.25, 0.5, 0.75, 1.0];
    for (x, want) in (1..=5).zip(expected) {
        let got = annotate::normalize_likert(x).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("x={x}: {got} != {want}"))?;
    }
    for bad in [0, 6, -1] {
        ensure(annotate::normalize_likert(bad).is_err(), || format!("{bad} accepted"))?;
    }
    Ok("x in 1..=5 maps to 0, 0.25, 0.5, 0.75, 1 exactly".into())
}

// ---------------------------------------------------------------- 2

fn oracle_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let below = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (oracle_ranks(xs), oracle_ranks(ys));
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (rx.iter().sum(), ry.iter().sum());
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let sxx: f64 = rx.iter().map(|a| a * a).sum();
    let syy: f64 = ry.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

fn oracle_kappa(a: &[usize], b: &[usize], k: usize) -> f64 {
    let mut table = vec![vec![0.0; k]; k];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1.0;
    }
    let n = a.len() as f64;
    let po = (0..k).map(|i| table[i][i]).sum::<f64>() / n;
    let pe = (0..k)
        .map(|i| {
            let row: f64 = table[i].iter().sum();
            let col: f64 = table.iter().map(|r| r[i]).sum();
            row * col / (n * n)
        })
        .sum::<f64>();
    if pe == 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

fn oracle_variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch statistic, degrees of freedom and p-value from statrs.
fn oracle_welch(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (oracle_variance(a) / na, oracle_variance(b) / nb);
    let diff = a.iter().sum::<f64>() / na - b.iter().sum::<f64>() / nb;
    let t = diff / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa.powi(2) / (na - 1.0) + qb.powi(2) / (nb - 1.0));
    let p = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().cdf(-t.abs());
    (t, df, p)
}

/// Least-squares slope through nalgebra's SVD, with its two-sided p-value.
fn oracle_ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let y = DVector::from_column_slice(ys);
    let beta = x.clone().svd(true, true).solve(&y, 1e-14).unwrap();
    let resid = &y - &x * &beta;
    let sigma2 = resid.norm_squared() / (n - 2) as f64;
    let cov = (x.transpose() * &x).try_inverse().unwrap() * sigma2;
    let t = beta[1] / cov[(1, 1)].sqrt();
    let p = 2.0 * StudentsT::new(0.0, 1.0, (n - 2) as f64).unwrap().cdf(-t.abs());
    (beta[1], p)
}

fn metric_oracles() -> Outcome {
    const INSTANCES: usize = 250;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0usize; 5];
    while counts.iter().any(|c| *c < INSTANCES) {
        let n = rng.random_range(3..=20);
        // Likert-like integers produce ties; uniform floats do not
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            if rng.random_bool(0.5) {
                rng.random_range(1..=5) as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        };
        let xs: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();

        match metrics::spearman(&xs, &ys) {
            Ok(rho) => {
                close("spearman", rho, oracle_spearman(&xs, &ys), 1e-9)?;
                counts[0] += 1;
            }
            Err(_) => {
                let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
                ensure(constant(&xs) || constant(&ys), || format!("spearman rejected {xs:?} / {ys:?}"))?;
            }
        }

        let k = rng.random_range(2..=5);
        let la: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let lb: Vec<usize> = la
            .iter()
            .map(|&l| if rng.random_bool(0.6) { l } else { rng.random_range(0..k) })
            .collect();
        let kappa = metrics::cohen_kappa(&la, &lb).map_err(|e| e.to_string())?;
        close("kappa", kappa, oracle_kappa(&la, &lb, k), 1e-9)?;
        counts[1] += 1;

        if n >= 4 {
            let (a, b) = xs.split_at(rng.random_range(2..=n - 2));
            // two constant groups have no statistic
            if let Ok(res) = metrics::welch_t_test(a, b) {
                let (t, df, p) = oracle_welch(a, b);
                close("welch t", res.t, t, 1e-9)?;
                close("welch df", res.df, df, 1e-9)?;
                close("welch p", res.p, p, 1e-6)?;
                counts[2] += 1;
            }
        }

        let rmse = metrics::rmse(&xs, &ys).map_err(|e| e.to_string())?;
        let oracle = (xs.iter().zip(&ys).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n as f64).sqrt();
        close("rmse", rmse, oracle, 1e-9)?;
        counts[3] += 1;

        let years: Vec<f64> = (0..n).map(|_| 1960.0 + 4.0 * rng.random_range(0..17) as f64).collect();
        if years.iter().any(|y| *y != years[0]) {
            let points: Vec<(f64, f64)> = years.iter().copied().zip(ys.iter().copied()).collect();
            let trend = analysis::ols_trend(&points).map_err(|e| e.to_string())?;
            let (slope, p) = oracle_ols(&years, &ys);
            close("ols slope", trend.slope, slope, 1e-9)?;
            close("ols p", trend.p, p, 1e-6)?;
            counts[4] += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "spearman/kappa/welch/rmse/ols matched on {counts:?} instances in {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 3

fn run_pipeline(out: &Path) -> Result<(), String> {
    let steps: [&[&str]; 3] = [&["stances", "gen"], &["debates", "gen", "--topics", "2"], &["annotate", "run"]];
    for step in steps {
        let output = Command::new(env!("CARGO_BIN_EXE_rhetoric"))
            .current_dir(root())
            .args(["--seed", "7", "--mock-script", "fixtures/mock_script.json", "--out"])
            .arg(out)
            .args(step)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(output.status.success(), || {
            format!("{step:?} exited {:?}: {}", output.status, String::from_utf8_lossy(&output.stderr))
        })?;
    }
    Ok(())
}

fn jsonl_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name()?.to_str()?.to_string();
            name.ends_with(".jsonl").then(|| (name, std::fs::read(&path).unwrap()))
        })
        .collect()
}

fn rows(bytes: &[u8]) -> Vec<Value> {
    std::str::from_utf8(bytes).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn mock_determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a)?;
    run_pipeline(&b)?;
    let (fa, fb) = (jsonl_files(&a), jsonl_files(&b));
    for name in ["stances.jsonl", "debates.jsonl", "scores.jsonl"] {
        ensure(fa.contains_key(name), || format!("{name} missing"))?;
    }
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
    }

    let debates = rows(&fa["debates.jsonl"]);
    let mut dialogues: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &debates {
        let round = r["round"].as_u64().unwrap();
        let revisions = r["revision_count"].as_u64().unwrap();
        ensure((1..=5).contains(&round), || format!("round {round}"))?;
        ensure(revisions <= 2, || format!("revision_count {revisions}"))?;
        dialogues
            .entry(r["topic_id"].as_str().unwrap().to_string())
            .or_default()
            .insert(r["dialogue_id"].as_str().unwrap().to_string());
    }
    ensure(dialogues.len() == 2, || format!("{} topics", dialogues.len()))?;
    for (topic, ids) in &dialogues {
        ensure(ids.len() == 8, || format!("topic {topic}: {} dialogues", ids.len()))?;
    }
    let scored = rows(&fa["scores.jsonl"]).len();
    ensure(scored == debates.len(), || format!("{scored} score rows for {} utterances", debates.len()))?;

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} JSONL files identical across two runs; {} utterances in 16 dialogues; {:.2}s",
        fa.len(),
        debates.len(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 4

fn fixture_topics() -> Result<Vec<stance::LabeledTopic>, String> {
    let dir = root().join("fixtures/topics");
    let topics = stance::load_topics(
        &dir.join("topics.csv"),
        &dir.join("controversy_votes.csv"),
        Some(&dir.join("political_votes.csv")),
    )
    .map_err(|e| e.to_string())?;
    ensure(topics.len() == 475, || format!("{} keywords", topics.len()))?;
    stance::select_topics(&topics).map_err(|e| e.to_string())
}

fn fixture_reproduction() -> Outcome {
    let selected = fixture_topics()?;
    let counts = stance::count_topics(475, &selected);
    ensure(
        (counts.retained, counts.political, counts.non_political) == (146, 121, 25),
        || format!("{counts:?}"),
    )?;
    Ok("475 keywords -> 146 retained, 121 political, 25 non-political".into())
}

// ---------------------------------------------------------------- 5

fn frequencies<K: Ord>(items: impl Iterator<Item = K>, n: usize) -> BTreeMap<K, f64> {
    let mut out = BTreeMap::new();
    for k in items {
        *out.entry(k).or_insert(0.0) += 1.0;
    }
    out.values_mut().for_each(|v| *v /= n as f64);
    out
}

fn check_marginal<K: Ord + std::fmt::Debug>(
    name: &str,
    observed: &BTreeMap<K, f64>,
    expected: &BTreeMap<K, f64>,
) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (k, p) in expected {
        let o = observed.get(k).copied().unwrap_or(0.0);
        worst = worst.max((o - p).abs());
        ensure((o - p).abs() <= 0.01, || format!("{name} {k:?}: observed {o}, configured {p}"))?;
    }
    for k in observed.keys() {
        ensure(expected.get(k).copied().unwrap_or(0.0) > 0.0, || format!("{name} {k:?} has zero probability"))?;
    }
    Ok(worst)
}

/// Pearson chi-square test of independence on a contingency table.
fn independence_p<A: Ord + Copy, B: Ord + Copy>(pairs: impl Iterator<Item = (A, B)>) -> f64 {
    let mut table: BTreeMap<(A, B), f64> = BTreeMap::new();
    let mut rows: BTreeMap<A, f64> = BTreeMap::new();
    let mut cols: BTreeMap<B, f64> = BTreeMap::new();
    let mut n = 0.0;
    for (a, b) in pairs {
        *table.entry((a, b)).or_default() += 1.0;
        *rows.entry(a).or_default() += 1.0;
        *cols.entry(b).or_default() += 1.0;
        n += 1.0;
    }
    let mut stat = 0.0;
    for (a, ra) in &rows {
        for (b, cb) in &cols {
            let expected = ra * cb / n;
            let observed = table.get(&(*a, *b)).copied().unwrap_or(0.0);
            stat += (observed - expected).powi(2) / expected;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

fn persona_sampling() -> Outcome {
    const N: usize = 100_000;
    let tables = DemographicTables::load(&root().join("config/demographics.json")).map_err(|e| e.to_string())?;
    let personas: Vec<Persona> = annotate::sample_personas(N, &tables, 11).map_err(|e| e.to_string())?;
    ensure(personas.len() == N, || format!("{} personas", personas.len()))?;
    ensure(personas.iter().all(|p| p.age_group.lower() >= 15 && p.age_group.upper() <= 89), || {
        "persona outside ages 15-89".into()
    })?;

    // implied marginals of the conditional tables
    let mut education = BTreeMap::new();
    for row in &tables.education {
        let weight = tables.age_group[&row.age_group] * tables.gender[&row.gender];
        for (e, p) in &row.probs {
            *education.entry(*e).or_insert(0.0) += weight * p;
        }
    }
    let mut leaning = BTreeMap::new();
    for (e, pe) in &education {
        for (l, p) in &tables.leaning[e] {
            *leaning.entry(*l).or_insert(0.0) += pe * p;
        }
    }

    let worst = [
        check_marginal("gender", &frequencies(personas.iter().map(|p| p.gender), N), &tables.gender)?,
        check_marginal("age", &frequencies(personas.iter().map(|p| p.age_group), N), &tables.age_group)?,
        check_marginal("race", &frequencies(personas.iter().map(|p| p.race), N), &tables.race)?,
        check_marginal("education", &frequencies(personas.iter().map(|p| p.education), N), &education)?,
        check_marginal("leaning", &frequencies(personas.iter().map(|p| p.leaning), N), &leaning)?,
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let tests = [
        ("age/gender", independence_p(personas.iter().map(|p| (p.age_group, p.gender)))),
        ("age/race", independence_p(personas.iter().map(|p| (p.age_group, p.race)))),
        ("gender/race", independence_p(personas.iter().map(|p| (p.gender, p.race)))),
    ];
    for (name, p) in tests {
        ensure(p > 0.01, || format!("{name} independence rejected, p = {p}"))?;
    }
    Ok(format!(
        "max marginal error {worst:.4}; independence p: {}",
        tests.iter().map(|(n, p)| format!("{n} {p:.3}")).collect::<Vec<_>>().join(", ")
    ))
}

// ---------------------------------------------------------------- 6

fn topic_transfer_split() -> Outcome {
    let topics = fixture_topics()?;
    let records: Vec<ArgumentRecord> = topics
        .iter()
        .flat_map(|t| {
            StrategyKind::ALL.into_iter().flat_map(move |s| {
                Condition::ALL.into_iter().map(move |c| ArgumentRecord {
                    utterance_id: format!("{}-{}-{}-r1-pro", t.topic_id, s.as_str(), c.as_str()),
                    topic_id: t.topic_id.clone(),
                    is_political: t.is_political,
                    strategy: s,
                    condition: c,
                    text: format!("An argument about {}.", t.text),
                    scores: StrategyScoreVector::splat(0.5),
                    split: None,
                    extra: BTreeMap::new(),
                })
            })
        })
        .collect();
    let plan = dataset::split_topic_transfer(&records, dataset::DEFAULT_TRAIN_POLITICAL_TOPICS, 3)
        .map_err(|e| e.to_string())?;
    let sizes = [TopicBucket::TrainPolitical, TopicBucket::Ood, TopicBucket::CrossDomain].map(|b| plan.topics_in(b).len());
    ensure(sizes == [101, 20, 25], || format!("bucket sizes {sizes:?}"))?;

    let mut seen: BTreeMap<&str, BTreeSet<TopicBucket>> = BTreeMap::new();
    for r in &records {
        let split = plan.assignments[&r.utterance_id];
        let bucket = match split {
            Split::Train | Split::Val | Split::TestInDomain => TopicBucket::TrainPolitical,
            Split::TestOOD => TopicBucket::Ood,
            Split::TestCrossDomain => TopicBucket::CrossDomain,
        };
        ensure(bucket != TopicBucket::CrossDomain || !r.is_political, || format!("{} political but cross-domain", r.topic_id))?;
        seen.entry(&r.topic_id).or_default().insert(bucket);
    }
    ensure(seen.len() == 146, || format!("{} topics assigned", seen.len()))?;
    let spanning: Vec<&&str> = seen.iter().filter(|(_, b)| b.len() > 1).map(|(t, _)| t).collect();
    ensure(spanning.is_empty(), || format!("topics spanning buckets: {spanning:?}"))?;
    Ok("146 topics -> 101 train-political, 20 OOD, 25 cross-domain; none span buckets".into())
}

// ---------------------------------------------------------------- 7

fn trend_recovery() -> Outcome {
    const N: usize = 3307;
    let years = [1960, 1976, 1980, 1984, 1988, 1992, 1996, 2000, 2004, 2008, 2012, 2016, 2020];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let args: Vec<AnalysisArgument> = (0..N)
        .map(|i| {
            let year = years[i % years.len()];
            let gap = 0.1 + 0.0025 * (year - 1960) as f64 + noise.sample(&mut rng);
            // affective minus cognitive equals `gap`
            let scores = StrategyScoreVector::from_array([0.3, 0.3, 0.3 + gap, 0.3 + gap]);
            AnalysisArgument {
                year,
                debate_id: format!("{year}-1"),
                speaker: "SPEAKER".into(),
                party: if i % 2 == 0 { Party::Democrat } else { Party::Republican },
                text: "a placeholder argument text here".into(),
                word_count: 6,
                scores: Some(scores),
            }
        })
        .collect();
    let trend = analysis::affect_gap_trend(&args).map_err(|e| e.to_string())?;
    ensure(trend.n == N, || format!("n = {}", trend.n))?;
    ensure((trend.slope - 0.0025).abs() <= 0.0005, || format!("slope {}", trend.slope))?;
    ensure(trend.p < 0.001, || format!("p = {}", trend.p))?;
    Ok(format!("slope {:.6} (se {:.6}), p = {:.3e}", trend.slope, trend.stderr, trend.p))
}

// ---------------------------------------------------------------- 8

fn segmentation_goldens() -> Outcome {
    let dir = root().join("fixtures/transcripts");
    let turns = analysis::read_transcripts(&dir.join("sample.csv")).map_err(|e| e.to_string())?;
    ensure(turns.len() == 20, || format!("{} turns", turns.len()))?;
    let got: Vec<Value> = analysis::segment_arguments(&turns)
        .iter()
        .map(|a| serde_json::to_value(a).unwrap())
        .collect();
    let golden: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("golden_arguments.json")).unwrap()).unwrap();
    let fields = ["year", "debate_id", "speaker", "party", "text", "word_count"];
    let project = |v: &Value| fields.map(|f| v[f].clone());
    ensure(got.len() == golden.len(), || format!("{} arguments, golden has {}", got.len(), golden.len()))?;
    for (i, (g, want)) in got.iter().zip(&golden).enumerate() {
        ensure(project(g) == project(want), || format!("argument {i}: {g} != {want}"))?;
    }
    for a in &got {
        ensure(a["party"] != "Moderator", || format!("moderator turn kept: {a}"))?;
        ensure(a["word_count"].as_u64().unwrap() >= 5, || format!("short turn kept: {a}"))?;
    }
    Ok(format!("20 turns -> {} arguments, identical to golden list", got.len()))
}

// ---------------------------------------------------------------- 9

fn oracle_class(x: u8, classes: u8) -> usize {
    match classes {
        5 => (x - 1) as usize,
        3 => [0, 0, 1, 2, 2][(x - 1) as usize],
        _ => usize::from(x >= 4),
    }
}

/// Pairwise-average kappa straight from the CSV, averaged over strategies.
fn oracle_human_kappa(path: &Path, classes: u8, min_overlap: usize) -> f64 {
    let mut by: BTreeMap<String, BTreeMap<String, BTreeMap<String, u8>>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(path).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        by.entry(row[2].to_string())
            .or_default()
            .entry(row[1].to_string())
            .or_default()
            .insert(row[0].to_string(), row[3].parse().unwrap());
    }
    let mut per_strategy = Vec::new();
    for raters in by.values() {
        let ids: Vec<&String> = raters.keys().collect();
        let mut kappas = Vec::new();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let (a, b) = (&raters[ids[i]], &raters[ids[j]]);
                let shared: Vec<&String> = a.keys().filter(|k| b.contains_key(*k)).collect();
                if shared.len() < min_overlap {
                    continue;
                }
                let la: Vec<usize> = shared.iter().map(|k| oracle_class(a[*k], classes)).collect();
                let lb: Vec<usize> = shared.iter().map(|k| oracle_class(b[*k], classes)).collect();
                kappas.push(oracle_kappa(&la, &lb, classes as usize));
            }
        }
        per_strategy.push(kappas.iter().sum::<f64>() / kappas.len() as f64);
    }
    per_strategy.iter().sum::<f64>() / per_strategy.len() as f64
}

fn agreement_ordering() -> Outcome {
    const MIN_OVERLAP: usize = 10;
    let path = root().join("fixtures/human_scores.csv");
    let m = AnnotationMatrix::read_csv(&path).map_err(|e| e.to_string())?;
    let mut averages = Vec::new();
    for (scheme, classes) in ClassScheme::ALL.into_iter().zip([5u8, 3, 2]) {
        let per = metrics::pairwise_average_kappa(&m, scheme, MIN_OVERLAP).map_err(|e| e.to_string())?;
        ensure(per.len() == 4, || format!("{scheme:?}: {} strategies", per.len()))?;
        let avg = metrics::strategy_average(per.values().map(|k| k.mean));
        close(&format!("{scheme:?} kappa"), avg, oracle_human_kappa(&path, classes, MIN_OVERLAP), 1e-12)?;
        averages.push(avg);
    }
    ensure(averages[0] < averages[1] && averages[1] < averages[2], || format!("not increasing: {averages:?}"))?;
    Ok(format!(
        "five {:.4} < three {:.4} < two {:.4}, equal to oracle",
        averages[0], averages[1], averages[2]
    ))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("likert normalization", likert_normalization),
        ("metric oracle equivalence", metric_oracles),
        ("mock end-to-end determinism", mock_determinism),
        ("fixture topic counts", fixture_reproduction),
        ("persona sampling", persona_sampling),
        ("topic-transfer split", topic_transfer_split),
        ("trend recovery", trend_recovery),
        ("segmentation goldens", segmentation_goldens),
        ("human agreement ordering", agreement_ordering),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

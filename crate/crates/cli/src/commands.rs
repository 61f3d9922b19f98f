use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use rhetoric_core::analysis::{
    self, AnalysisArgument, ConstantScorer, HttpScorer, PanelScorer, Scorer,
};
use rhetoric_core::annotate::{self, DemographicTables, Persona, ScoreRow};
use rhetoric_core::dataset::{self, ArgumentRecord, SplitPlan};
use rhetoric_core::debate::{self, CorpusOptions, DebateTopic, UtteranceRow};
use rhetoric_core::gateway::HttpBackend;
use rhetoric_core::jsonl::{read_jsonl, write_jsonl};
use rhetoric_core::metrics::{self, AnnotationMatrix, ClassScheme, ConditionedScore, HumanRating};
use rhetoric_core::stance::{self, LabeledTopic, StanceError, StancePair};
use rhetoric_core::{Gateway, MockScript, StrategyKind, StrategyScoreVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BackendKind, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Operational(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Operational(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Operational(m) => write!(f, "error: {m}"),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn op<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Operational(e.to_string())
}

/// Shared state for one invocation.
pub struct Ctx {
    pub cfg: RunConfig,
    pub command: String,
    pub dry_run: bool,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    backend: BackendKind,
    model_id: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Plan<'a> {
    command: &'a str,
    backend: BackendKind,
    inputs: Vec<String>,
    outputs: Vec<String>,
    details: Value,
}

impl Ctx {
    fn meta(&self) -> Value {
        serde_json::to_value(RunMeta {
            tool: "rhetoric",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed: self.cfg.seed,
            backend: self.cfg.backend_kind,
            model_id: &self.cfg.backend.model_id,
            config: &self.cfg,
        })
        .expect("run metadata serializes")
    }

    /// In dry-run mode prints the plan and returns true; the caller then
    /// stops before any network call or write.
    fn plan(&self, inputs: &[&Path], outputs: &[PathBuf], details: Value) -> bool {
        if !self.dry_run {
            return false;
        }
        let plan = Plan {
            command: &self.command,
            backend: self.cfg.backend_kind,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            details,
        };
        println!("{}", serde_json::to_string_pretty(&plan).expect("plan serializes"));
        true
    }

    fn ensure_out(&self) -> CliResult {
        std::fs::create_dir_all(&self.cfg.paths.out).map_err(|e| op(format!("{}: {e}", self.cfg.paths.out.display())))
    }

    fn sidecar(&self, path: &Path) -> CliResult {
        let name = format!("{}.run_meta.json", path.file_name().and_then(|n| n.to_str()).unwrap_or("output"));
        write_json(&path.with_file_name(name), &self.meta())
    }

    fn write_rows<T: Serialize>(&self, rows: &[T], path: &Path) -> CliResult {
        write_jsonl(rows, path).map_err(op)?;
        self.sidecar(path)
    }

    fn write_bytes(&self, bytes: Vec<u8>, path: &Path) -> CliResult {
        std::fs::write(path, bytes).map_err(|e| op(format!("{}: {e}", path.display())))?;
        self.sidecar(path)
    }

    /// Sets `key` in a JSON report, keeping blocks written by other
    /// subcommands.
    fn update_report(&self, path: &Path, key: &str, result: Value) -> CliResult {
        let mut report = match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str::<Value>(&text).map_err(|e| op(format!("{}: {e}", path.display())))?,
            Err(_) => json!({}),
        };
        let object = report
            .as_object_mut()
            .ok_or_else(|| op(format!("{} is not a JSON object", path.display())))?;
        object.insert(key.to_string(), json!({ "run_meta": self.meta(), "result": result }));
        write_json(path, &report)
    }

    fn gateway(&self) -> CliResult<Gateway> {
        match self.cfg.backend_kind {
            BackendKind::Mock => {
                let script = match &self.cfg.paths.mock_script {
                    Some(path) => MockScript::load(path).map_err(|e| op(format!("{}: {e}", path.display())))?,
                    None => MockScript::synthesizing(),
                };
                Ok(Gateway::mock(script))
            }
            BackendKind::Live => {
                let backend = HttpBackend::new(&self.cfg.backend);
                Gateway::new(Arc::new(backend), &self.cfg.backend).map_err(op)
            }
        }
    }

    fn read<T: serde::de::DeserializeOwned>(&self, path: &Path) -> CliResult<Vec<T>> {
        read_jsonl(path).map_err(|e| op(format!("{}: {e}", path.display())))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(op)? + "\n";
    std::fs::write(path, text).map_err(|e| op(format!("{}: {e}", path.display())))
}

fn require(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(op(format!("input file {} does not exist", path.display())))
    }
}

pub fn stances_gen(ctx: &Ctx) -> CliResult {
    let p = &ctx.cfg.paths;
    let keywords = stance::load_topics(&p.topics, &p.controversy_votes, Some(&p.political_votes)).map_err(op)?;
    let selected = stance::select_topics(&keywords).map_err(op)?;
    let counts = stance::count_topics(keywords.len(), &selected);
    let (topics_out, stances_out) = (ctx.cfg.out("topics.jsonl"), ctx.cfg.out("stances.jsonl"));
    let inputs = [p.topics.as_path(), p.controversy_votes.as_path(), p.political_votes.as_path()];
    if ctx.plan(&inputs, &[topics_out.clone(), stances_out.clone()], json!({ "topic_counts": counts })) {
        return Ok(());
    }
    let gateway = ctx.gateway()?;
    let by_id: BTreeMap<&str, &stance::TopicKeyword> = keywords.iter().map(|k| (k.topic_id.as_str(), k)).collect();
    let results: Vec<Result<StancePair, StanceError>> = selected
        .par_iter()
        .map(|t| stance::generate_stance_pair(by_id[t.topic_id.as_str()], &gateway))
        .collect();
    let mut pairs = Vec::new();
    let mut kept_topics = Vec::new();
    for (topic, result) in selected.iter().zip(results) {
        match result {
            Ok(pair) => {
                pairs.push(pair);
                kept_topics.push(topic.clone());
            }
            Err(e @ StanceError::ParseFailure(_)) => tracing::warn!(topic = %topic.topic_id, "{e}"),
            Err(e) => return Err(op(e)),
        }
    }
    stance::check_unique_topics(&pairs).map_err(op)?;
    ctx.ensure_out()?;
    ctx.write_rows(&kept_topics, &topics_out)?;
    ctx.write_rows(&pairs, &stances_out)?;
    println!(
        "topics: {} input, {} retained ({} political, {} non-political); {} stance pairs",
        counts.input, counts.retained, counts.political, counts.non_political, pairs.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct DialogueSummary {
    dialogue_id: String,
    rounds: u32,
    termination: Option<debate::Termination>,
    error: Option<String>,
}

pub fn debates_gen(ctx: &Ctx, limit: Option<usize>) -> CliResult {
    let (topics_in, stances_in) = (ctx.cfg.out("topics.jsonl"), ctx.cfg.out("stances.jsonl"));
    require(&topics_in)?;
    require(&stances_in)?;
    let topics: Vec<LabeledTopic> = ctx.read(&topics_in)?;
    let pairs: Vec<StancePair> = ctx.read(&stances_in)?;
    let by_id: BTreeMap<&str, &LabeledTopic> = topics.iter().map(|t| (t.topic_id.as_str(), t)).collect();
    let take = limit.unwrap_or(pairs.len());
    if take > pairs.len() {
        return Err(op(format!("--topics {take} requested but only {} stance pairs exist", pairs.len())));
    }
    let jobs: Vec<DebateTopic> = pairs[..take]
        .iter()
        .map(|p| {
            let topic = by_id.get(p.topic_id.as_str()).ok_or_else(|| op(format!("no topic for {}", p.topic_id)))?;
            Ok(DebateTopic { topic: (*topic).clone(), stances: p.clone() })
        })
        .collect::<CliResult<_>>()?;
    let (debates_out, dialogues_out) = (ctx.cfg.out("debates.jsonl"), ctx.cfg.out("dialogues.jsonl"));
    let details = json!({
        "topics": take,
        "dialogues": take * 8,
        "max_rounds": ctx.cfg.max_rounds,
        "max_revisions": ctx.cfg.max_revisions,
    });
    if ctx.plan(&[&topics_in, &stances_in], &[debates_out.clone(), dialogues_out.clone()], details) {
        return Ok(());
    }
    let gateway = ctx.gateway()?;
    let options = CorpusOptions { max_rounds: ctx.cfg.max_rounds, max_revisions: ctx.cfg.max_revisions };
    let corpus = debate::generate_corpus(&jobs, options, &gateway);
    for d in &corpus.dialogues {
        d.check_invariants().map_err(|e| op(format!("{}: {e}", d.dialogue_id)))?;
    }
    let mut summaries: Vec<DialogueSummary> = corpus
        .dialogues
        .iter()
        .map(|d| DialogueSummary {
            dialogue_id: d.dialogue_id.clone(),
            rounds: d.rounds(),
            termination: Some(d.termination),
            error: None,
        })
        .chain(corpus.failures.iter().map(|f| DialogueSummary {
            dialogue_id: f.dialogue_id.clone(),
            rounds: 0,
            termination: None,
            error: Some(f.error.clone()),
        }))
        .collect();
    summaries.sort_by(|a, b| a.dialogue_id.cmp(&b.dialogue_id));
    let rows = debate::utterance_rows(&corpus.dialogues);
    ctx.ensure_out()?;
    ctx.write_rows(&rows, &debates_out)?;
    ctx.write_rows(&summaries, &dialogues_out)?;
    println!(
        "dialogues: {} generated, {} failed; {} utterances",
        corpus.dialogues.len(),
        corpus.failures.len(),
        rows.len()
    );
    Ok(())
}

fn load_panel(ctx: &Ctx) -> CliResult<Vec<Persona>> {
    let tables = DemographicTables::load(&ctx.cfg.paths.demographics).map_err(op)?;
    annotate::sample_personas(ctx.cfg.persona_count, &tables, ctx.cfg.seed).map_err(op)
}

pub fn annotate_run(ctx: &Ctx) -> CliResult {
    let debates_in = ctx.cfg.out("debates.jsonl");
    require(&debates_in)?;
    let rows: Vec<UtteranceRow> = ctx.read(&debates_in)?;
    let panel = load_panel(ctx)?;
    let (scores_out, panel_out) = (ctx.cfg.out("scores.jsonl"), ctx.cfg.out("personas.json"));
    let details = json!({
        "utterances": rows.len(),
        "personas": panel,
        "requests": rows.len() * panel.len(),
        "min_raters": ctx.cfg.min_raters,
    });
    if ctx.plan(&[&debates_in, &ctx.cfg.paths.demographics], &[scores_out.clone(), panel_out.clone()], details) {
        return Ok(());
    }
    let gateway = ctx.gateway()?;
    let scores = annotate::annotate_corpus(&rows, &panel, ctx.cfg.min_raters, &gateway).map_err(op)?;
    ctx.ensure_out()?;
    write_json(&panel_out, &json!({ "run_meta": ctx.meta(), "personas": panel }))?;
    ctx.write_rows(&scores, &scores_out)?;
    let missing_cells: usize = scores.iter().map(|s| s.ratings.values().filter(|r| r.is_none()).count()).sum();
    let unscored = scores.iter().filter(|s| s.aggregate.is_none()).count();
    println!(
        "scored {} utterances with {} personas; {missing_cells} missing cells, {unscored} utterances below min_raters",
        scores.len(),
        panel.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitModeArg {
    Random,
    TopicTransfer,
}

pub fn dataset_split(ctx: &Ctx, mode: SplitModeArg) -> CliResult {
    let inputs = [ctx.cfg.out("debates.jsonl"), ctx.cfg.out("scores.jsonl"), ctx.cfg.out("topics.jsonl")];
    for p in &inputs {
        require(p)?;
    }
    let rows: Vec<UtteranceRow> = ctx.read(&inputs[0])?;
    let scores: Vec<ScoreRow> = ctx.read(&inputs[1])?;
    let topics: Vec<LabeledTopic> = ctx.read(&inputs[2])?;
    let political: BTreeMap<String, bool> = topics.iter().map(|t| (t.topic_id.clone(), t.is_political)).collect();
    let records = dataset::build_corpus(&rows, &scores, &political).map_err(op)?;
    let plan = match mode {
        SplitModeArg::Random => dataset::split_random(&records, ctx.cfg.seed),
        SplitModeArg::TopicTransfer => dataset::split_topic_transfer(&records, ctx.cfg.n_train_political, ctx.cfg.seed),
    }
    .map_err(op)?;
    let (corpus_out, plan_out) = (ctx.cfg.out("corpus.jsonl"), ctx.cfg.out("split_plan.json"));
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    if ctx.plan(&input_refs, &[corpus_out.clone(), plan_out.clone()], json!({ "records": records.len(), "counts": plan.counts })) {
        return Ok(());
    }
    ctx.ensure_out()?;
    let assigned = dataset::apply_plan(&records, &plan);
    ctx.write_rows(&assigned, &corpus_out)?;
    let mut value = serde_json::to_value(&plan).map_err(op)?;
    value["run_meta"] = ctx.meta();
    write_json(&plan_out, &value)?;
    let counts: Vec<String> = plan.counts.iter().map(|(s, n)| format!("{}={n}", s.as_str())).collect();
    println!("{} records split: {}", records.len(), counts.join(" "));
    Ok(())
}

pub fn export_training(ctx: &Ctx) -> CliResult {
    let (corpus_in, plan_in) = (ctx.cfg.out("corpus.jsonl"), ctx.cfg.out("split_plan.json"));
    require(&corpus_in)?;
    require(&plan_in)?;
    let records: Vec<ArgumentRecord> = ctx.read(&corpus_in)?;
    let text = std::fs::read_to_string(&plan_in).map_err(op)?;
    let plan: SplitPlan = serde_json::from_str(&text).map_err(|e| op(format!("{}: {e}", plan_in.display())))?;
    let dir = ctx.cfg.out("training");
    if ctx.plan(&[&corpus_in, &plan_in], std::slice::from_ref(&dir), json!({ "mode": plan.mode, "counts": plan.counts })) {
        return Ok(());
    }
    let paths = dataset::export_splits(&records, &plan, &dir).map_err(op)?;
    for p in &paths {
        ctx.sidecar(p)?;
    }
    println!("wrote {} split files to {}", paths.len(), dir.display());
    Ok(())
}

fn llm_matrix(scores: &[ScoreRow]) -> CliResult<Option<AnnotationMatrix>> {
    let ratings: Vec<HumanRating> = scores
        .iter()
        .flat_map(|row| {
            row.ratings.iter().filter_map(move |(persona, v)| v.map(|v| (row, *persona, v)))
        })
        .flat_map(|(row, persona, v)| {
            StrategyKind::ALL.into_iter().map(move |s| HumanRating {
                item_id: row.utterance_id.clone(),
                rater_id: format!("persona{persona}"),
                strategy: s,
                likert: v.get(s),
            })
        })
        .collect();
    if ratings.is_empty() {
        return Ok(None);
    }
    AnnotationMatrix::from_ratings(&ratings).map(Some).map_err(op)
}

fn kappa_block(m: &AnnotationMatrix, schemes: &[ClassScheme], min_overlap: usize) -> CliResult<Value> {
    let mut out = serde_json::Map::new();
    for &scheme in schemes {
        let per = metrics::pairwise_average_kappa(m, scheme, min_overlap).map_err(op)?;
        let average = metrics::strategy_average(per.values().map(|k| k.mean));
        out.insert(
            serde_json::to_value(scheme).map_err(op)?.as_str().unwrap_or_default().to_string(),
            json!({ "per_strategy": per, "average": average }),
        );
    }
    Ok(Value::Object(out))
}

fn schemes(classes: Option<u8>) -> CliResult<Vec<ClassScheme>> {
    match classes {
        None => Ok(ClassScheme::ALL.to_vec()),
        Some(n) => ClassScheme::from_classes(n)
            .map(|s| vec![s])
            .ok_or_else(|| CliError::Usage(format!("--scheme must be 5, 3 or 2, got {n}"))),
    }
}

pub fn metrics_agreement(ctx: &Ctx, scheme: Option<u8>, with_llm: bool) -> CliResult {
    let schemes = schemes(scheme)?;
    let human_in = &ctx.cfg.paths.human_scores;
    let human = AnnotationMatrix::read_csv(human_in).map_err(op)?;
    let scores_in = ctx.cfg.out("scores.jsonl");
    let report = ctx.cfg.out("metrics_report.json");
    let mut inputs: Vec<&Path> = vec![human_in];
    if with_llm {
        require(&scores_in)?;
        inputs.push(&scores_in);
    }
    if ctx.plan(&inputs, std::slice::from_ref(&report), json!({ "schemes": schemes, "min_overlap": ctx.cfg.min_overlap })) {
        return Ok(());
    }
    let mut result = json!({
        "min_overlap": ctx.cfg.min_overlap,
        "human": kappa_block(&human, &schemes, ctx.cfg.min_overlap)?,
    });
    if with_llm {
        let scores: Vec<ScoreRow> = ctx.read(&scores_in)?;
        if let Some(m) = llm_matrix(&scores)? {
            result["llm"] = kappa_block(&m, &schemes, ctx.cfg.min_overlap)?;
        }
    }
    ctx.ensure_out()?;
    ctx.update_report(&report, "agreement", result.clone())?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(op)?);
    Ok(())
}

pub fn metrics_loo(ctx: &Ctx, with_llm: bool) -> CliResult {
    let human_in = &ctx.cfg.paths.human_scores;
    let human = AnnotationMatrix::read_csv(human_in).map_err(op)?;
    let scores_in = ctx.cfg.out("scores.jsonl");
    let report = ctx.cfg.out("metrics_report.json");
    let mut inputs: Vec<&Path> = vec![human_in];
    if with_llm {
        require(&scores_in)?;
        inputs.push(&scores_in);
    }
    if ctx.plan(&inputs, std::slice::from_ref(&report), json!({ "raters": human.raters.len(), "items": human.items.len() })) {
        return Ok(());
    }
    let scores: Vec<ScoreRow> = if with_llm { ctx.read(&scores_in)? } else { Vec::new() };
    let mut external: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for row in &scores {
        if let Some(agg) = row.aggregate {
            for s in StrategyKind::ALL {
                external.entry(s.as_str().to_string()).or_default().insert(row.utterance_id.clone(), agg.get(s));
            }
        }
    }
    let mut result = serde_json::Map::new();
    for s in human.strategies().collect::<Vec<_>>() {
        let ext = external.get(s.as_str());
        result.insert(s.as_str().to_string(), serde_json::to_value(metrics::loo_consensus(&human, s, ext)).map_err(op)?);
    }
    let result = Value::Object(result);
    ctx.ensure_out()?;
    ctx.update_report(&report, "loo", result.clone())?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(op)?);
    Ok(())
}

pub fn metrics_condition_validity(ctx: &Ctx) -> CliResult {
    let (debates_in, scores_in) = (ctx.cfg.out("debates.jsonl"), ctx.cfg.out("scores.jsonl"));
    require(&debates_in)?;
    require(&scores_in)?;
    let rows: Vec<UtteranceRow> = ctx.read(&debates_in)?;
    let scores: Vec<ScoreRow> = ctx.read(&scores_in)?;
    let report = ctx.cfg.out("metrics_report.json");
    if ctx.plan(&[&debates_in, &scores_in], std::slice::from_ref(&report), json!({ "utterances": rows.len() })) {
        return Ok(());
    }
    let by_id: BTreeMap<&str, StrategyScoreVector> =
        scores.iter().filter_map(|s| s.aggregate.map(|a| (s.utterance_id.as_str(), a))).collect();
    let records: Vec<ConditionedScore> = rows
        .iter()
        .filter_map(|r| {
            by_id.get(r.utterance_id.as_str()).map(|a| ConditionedScore { target: r.strategy, condition: r.condition, scores: *a })
        })
        .collect();
    let mut result = serde_json::Map::new();
    for s in StrategyKind::ALL {
        let value = match metrics::condition_validity(&records, s) {
            Ok(v) => serde_json::to_value(v).map_err(op)?,
            Err(e) => json!({ "error": e.to_string() }),
        };
        result.insert(s.as_str().to_string(), value);
    }
    let result = Value::Object(result);
    ctx.ensure_out()?;
    ctx.update_report(&report, "condition_validity", result.clone())?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(op)?);
    Ok(())
}

pub fn metrics_external_validity(ctx: &Ctx) -> CliResult {
    let input = &ctx.cfg.paths.external;
    let mut reader = csv::Reader::from_path(input).map_err(|e| op(format!("{}: {e}", input.display())))?;
    let rows: Vec<metrics::ExternalRow> =
        reader.deserialize().collect::<Result<_, _>>().map_err(|e| op(format!("{}: {e}", input.display())))?;
    let report = ctx.cfg.out("metrics_report.json");
    if ctx.plan(&[input], std::slice::from_ref(&report), json!({ "rows": rows.len() })) {
        return Ok(());
    }
    let result = serde_json::to_value(metrics::external_validity(&rows).map_err(op)?).map_err(op)?;
    ctx.ensure_out()?;
    ctx.update_report(&report, "external_validity", result.clone())?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(op)?);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScorerKind {
    /// Persona panel through the configured gateway.
    Panel,
    /// Model server speaking the `/score` contract.
    Http,
    /// Every argument gets 0.5 on every strategy.
    Constant,
}

pub fn analyze_transcripts(ctx: &Ctx, scorer_kind: ScorerKind, scorer_url: Option<&str>) -> CliResult {
    let input = &ctx.cfg.paths.transcripts;
    let turns = analysis::read_transcripts(input).map_err(op)?;
    let args = analysis::segment_arguments(&turns);
    let (args_out, report) = (ctx.cfg.out("arguments.jsonl"), ctx.cfg.out("analysis_report.json"));
    let details = json!({ "turns": turns.len(), "arguments": args.len(), "scorer": format!("{scorer_kind:?}") });
    if scorer_kind == ScorerKind::Http && scorer_url.is_none() {
        return Err(CliError::Usage("--scorer http requires --scorer-url".into()));
    }
    if ctx.plan(&[input], &[args_out.clone(), report.clone()], details) {
        return Ok(());
    }
    let gateway;
    let scorer: Box<dyn Scorer + '_> = match scorer_kind {
        ScorerKind::Constant => Box::new(ConstantScorer(StrategyScoreVector::splat(0.5))),
        ScorerKind::Http => Box::new(HttpScorer::new(
            scorer_url.expect("checked above"),
            Duration::from_secs(ctx.cfg.backend.timeout_secs),
        )),
        ScorerKind::Panel => {
            gateway = ctx.gateway()?;
            Box::new(PanelScorer { gateway: &gateway, panel: load_panel(ctx)?, min_raters: ctx.cfg.min_raters })
        }
    };
    let (scored, summary) = analysis::score_corpus(&args, scorer.as_ref(), ctx.cfg.batch_size).map_err(op)?;
    ctx.ensure_out()?;
    ctx.write_rows(&scored, &args_out)?;
    let result = json!({ "turns": turns.len(), "arguments": scored.len(), "scoring": summary });
    ctx.update_report(&report, "transcripts", result)?;
    println!(
        "{} turns -> {} arguments; {} scored, {} missing",
        turns.len(),
        scored.len(),
        summary.scored,
        summary.missing
    );
    Ok(())
}

fn load_arguments(ctx: &Ctx) -> CliResult<(PathBuf, Vec<AnalysisArgument>)> {
    let path = ctx.cfg.out("arguments.jsonl");
    require(&path)?;
    let args = ctx.read(&path)?;
    Ok((path, args))
}

pub fn analyze_trend(ctx: &Ctx) -> CliResult {
    let (input, args) = load_arguments(ctx)?;
    let (csv_out, report) = (ctx.cfg.out("trend.csv"), ctx.cfg.out("analysis_report.json"));
    if ctx.plan(&[&input], &[csv_out.clone(), report.clone()], json!({ "arguments": args.len() })) {
        return Ok(());
    }
    let trend = analysis::affect_gap_trend(&args).map_err(op)?;
    ctx.ensure_out()?;
    ctx.write_bytes(analysis::trend_csv(&args).map_err(op)?, &csv_out)?;
    let result = json!({ "measure": "affect_gap = (emotional + moral)/2 - (causal + empirical)/2", "trend": trend });
    ctx.update_report(&report, "trend", result)?;
    println!("affect-gap slope {:.6} per year (se {:.6}, p {:.3e}, n {})", trend.slope, trend.stderr, trend.p, trend.n);
    Ok(())
}

pub fn analyze_partisan(ctx: &Ctx) -> CliResult {
    let (input, args) = load_arguments(ctx)?;
    let (csv_out, report) = (ctx.cfg.out("partisan.csv"), ctx.cfg.out("analysis_report.json"));
    if ctx.plan(&[&input], &[csv_out.clone(), report.clone()], json!({ "arguments": args.len() })) {
        return Ok(());
    }
    let partisan = analysis::partisan_report(&args).map_err(op)?;
    ctx.ensure_out()?;
    ctx.write_bytes(analysis::partisan_csv(&args).map_err(op)?, &csv_out)?;
    let result = serde_json::to_value(&partisan).map_err(op)?;
    ctx.update_report(&report, "partisan", result)?;
    for (s, d) in &partisan.per_strategy {
        println!("{s}: democrat - republican = {:+.4}", d.delta_dem_minus_rep);
    }
    Ok(())
}

//! `rhetoric`: stance generation, debate generation, annotation, splits,
//! reliability metrics and transcript analysis from one entry point.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CliResult, Ctx, ScorerKind, SplitModeArg};
use config::{BackendKind, RunConfig};

#[derive(Parser)]
#[command(name = "rhetoric", version, about = "Rhetorical-strategy debate generation and analysis pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Chat backend: scripted mock or the live HTTP API (key from LLM_API_KEY).
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Mock replies (JSON); implies `--backend mock` unless given explicitly.
    #[arg(long, global = true)]
    mock_script: Option<PathBuf>,
    /// Output directory; also where later stages read earlier outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Validate inputs and print the execution plan without calling any
    /// backend or writing files.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topic filtering and stance-pair generation.
    Stances {
        #[command(subcommand)]
        action: StancesCmd,
    },
    /// Strategy-constrained debate generation.
    Debates {
        #[command(subcommand)]
        action: DebatesCmd,
    },
    /// Persona-conditioned strategy scoring.
    Annotate {
        #[command(subcommand)]
        action: AnnotateCmd,
    },
    /// Corpus assembly and train/validation/test splits.
    Dataset {
        #[command(subcommand)]
        action: DatasetCmd,
    },
    /// Agreement and validity statistics.
    Metrics {
        #[command(subcommand)]
        action: MetricsCmd,
    },
    /// Debate-transcript segmentation, scoring, trend and partisan analysis.
    Analyze {
        #[command(subcommand)]
        action: AnalyzeCmd,
    },
    /// Training-file exports.
    Export {
        #[command(subcommand)]
        action: ExportCmd,
    },
}

#[derive(Subcommand)]
enum StancesCmd {
    /// Filter keywords by controversy votes, label them and generate stance pairs.
    Gen {
        #[arg(long)]
        topics_csv: Option<PathBuf>,
        #[arg(long)]
        controversy_votes: Option<PathBuf>,
        #[arg(long)]
        political_votes: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DebatesCmd {
    /// Generate eight dialogues (four strategies, use and avoid) per topic.
    Gen {
        /// Only the first N stance pairs.
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        max_rounds: Option<u32>,
        #[arg(long)]
        max_revisions: Option<u32>,
    },
}

#[derive(Subcommand)]
enum AnnotateCmd {
    /// Score every utterance with a sampled persona panel.
    Run {
        #[arg(long)]
        personas: Option<usize>,
        #[arg(long)]
        demographics: Option<PathBuf>,
        #[arg(long)]
        min_raters: Option<usize>,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Join utterances with scores and assign splits.
    Split {
        #[arg(long, value_enum, default_value = "random")]
        mode: SplitModeArg,
        #[arg(long)]
        n_train_political: Option<usize>,
    },
}

#[derive(Subcommand)]
enum MetricsCmd {
    /// Pairwise-average Cohen's kappa under 5/3/2-class schemes.
    Agreement {
        #[arg(long)]
        human: Option<PathBuf>,
        /// 5, 3 or 2; all three when omitted.
        #[arg(long)]
        scheme: Option<u8>,
        #[arg(long)]
        min_overlap: Option<usize>,
        /// Also compute agreement among the persona raters in scores.jsonl.
        #[arg(long)]
        with_llm: bool,
    },
    /// Leave-one-out consensus agreement.
    Loo {
        #[arg(long)]
        human: Option<PathBuf>,
        /// Compare the LLM aggregate scores against each rater's consensus.
        #[arg(long)]
        with_llm: bool,
    },
    /// Use-vs-avoid Spearman per strategy.
    ConditionValidity,
    /// Mean differences on externally labelled texts.
    ExternalValidity {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Segment transcripts into arguments and score them.
    Transcripts {
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "panel")]
        scorer: ScorerKind,
        /// Base URL of a `/score` server.
        #[arg(long)]
        scorer_url: Option<String>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Affect-gap trend over election years.
    Trend,
    /// Democrat-versus-Republican strategy differences.
    Partisan,
}

#[derive(Subcommand)]
enum ExportCmd {
    /// Write one JSONL file per split.
    Training,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    if cli.mock_script.is_some() {
        cfg.paths.mock_script = cli.mock_script.clone();
        cfg.backend_kind = BackendKind::Mock;
    }
    set(&mut cfg.backend_kind, cli.backend);
    set(&mut cfg.paths.out, cli.out.clone());
    match &cli.command {
        Command::Stances { action: StancesCmd::Gen { topics_csv, controversy_votes, political_votes } } => {
            set(&mut cfg.paths.topics, topics_csv.clone());
            set(&mut cfg.paths.controversy_votes, controversy_votes.clone());
            set(&mut cfg.paths.political_votes, political_votes.clone());
        }
        Command::Debates { action: DebatesCmd::Gen { max_rounds, max_revisions, .. } } => {
            set(&mut cfg.max_rounds, *max_rounds);
            set(&mut cfg.max_revisions, *max_revisions);
        }
        Command::Annotate { action: AnnotateCmd::Run { personas, demographics, min_raters } } => {
            set(&mut cfg.persona_count, *personas);
            set(&mut cfg.paths.demographics, demographics.clone());
            set(&mut cfg.min_raters, *min_raters);
        }
        Command::Dataset { action: DatasetCmd::Split { n_train_political, .. } } => {
            set(&mut cfg.n_train_political, *n_train_political);
        }
        Command::Metrics { action: MetricsCmd::Agreement { human, min_overlap, .. } } => {
            set(&mut cfg.paths.human_scores, human.clone());
            set(&mut cfg.min_overlap, *min_overlap);
        }
        Command::Metrics { action: MetricsCmd::Loo { human, .. } } => {
            set(&mut cfg.paths.human_scores, human.clone());
        }
        Command::Metrics { action: MetricsCmd::ExternalValidity { input } } => {
            set(&mut cfg.paths.external, input.clone());
        }
        Command::Analyze { action: AnalyzeCmd::Transcripts { transcripts, batch_size, .. } } => {
            set(&mut cfg.paths.transcripts, transcripts.clone());
            set(&mut cfg.batch_size, *batch_size);
        }
        _ => {}
    }
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Stances { .. } => "stances gen",
        Command::Debates { .. } => "debates gen",
        Command::Annotate { .. } => "annotate run",
        Command::Dataset { .. } => "dataset split",
        Command::Metrics { action } => match action {
            MetricsCmd::Agreement { .. } => "metrics agreement",
            MetricsCmd::Loo { .. } => "metrics loo",
            MetricsCmd::ConditionValidity => "metrics condition-validity",
            MetricsCmd::ExternalValidity { .. } => "metrics external-validity",
        },
        Command::Analyze { action } => match action {
            AnalyzeCmd::Transcripts { .. } => "analyze transcripts",
            AnalyzeCmd::Trend => "analyze trend",
            AnalyzeCmd::Partisan => "analyze partisan",
        },
        Command::Export { .. } => "export training",
    }
}

fn run(cli: Cli) -> CliResult {
    let cfg = resolve(&cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.backend.max_in_flight)
        .build_global()
        .map_err(commands::op)?;
    let ctx = Ctx { cfg, command: command_name(&cli.command).to_string(), dry_run: cli.dry_run };
    match &cli.command {
        Command::Stances { action: StancesCmd::Gen { .. } } => commands::stances_gen(&ctx),
        Command::Debates { action: DebatesCmd::Gen { topics, .. } } => commands::debates_gen(&ctx, *topics),
        Command::Annotate { action: AnnotateCmd::Run { .. } } => commands::annotate_run(&ctx),
        Command::Dataset { action: DatasetCmd::Split { mode, .. } } => commands::dataset_split(&ctx, *mode),
        Command::Metrics { action } => match action {
            MetricsCmd::Agreement { scheme, with_llm, .. } => commands::metrics_agreement(&ctx, *scheme, *with_llm),
            MetricsCmd::Loo { with_llm, .. } => commands::metrics_loo(&ctx, *with_llm),
            MetricsCmd::ConditionValidity => commands::metrics_condition_validity(&ctx),
            MetricsCmd::ExternalValidity { .. } => commands::metrics_external_validity(&ctx),
        },
        Command::Analyze { action } => match action {
            AnalyzeCmd::Transcripts { scorer, scorer_url, .. } => {
                commands::analyze_transcripts(&ctx, *scorer, scorer_url.as_deref())
            }
            AnalyzeCmd::Trend => commands::analyze_trend(&ctx),
            AnalyzeCmd::Partisan => commands::analyze_partisan(&ctx),
        },
        Command::Export { action: ExportCmd::Training } => commands::export_training(&ctx),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `rhetoric --help` for usage");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

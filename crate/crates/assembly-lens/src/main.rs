//! Thin CLI over the pipeline stages. Exit codes: 0 success, 1 validation
//! or integrity error, 2 transport error, 64 usage error.

use assembly_lens::error::Error;
use assembly_lens::eval::GoldTask;
use assembly_lens::gateway::{BackendKind, MockConfig};
use assembly_lens::pipeline::{self, EvalArgs, GapSpace, ToolConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "assembly-lens",
    about = "Transcript analytics for deliberative assemblies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Live,
    Mock,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Embedding,
    Planar,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Suggestions,
    Evidence,
}

#[derive(Args)]
struct CommonArgs {
    /// Tool configuration file (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Override the backend kind from the config.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Bound on concurrent in-flight backend requests.
    #[arg(long, global = true)]
    max_inflight: Option<usize>,
    /// Retries after a failed validation, per request.
    #[arg(long, global = true)]
    max_retries: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and cross-validate the corpus; write corpus_stats.json.
    Ingest(CommonArgs),
    /// Extract suggestions from every transcript into suggestions.jsonl.
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        /// Prompt version to run (e.g. suggestions-v0 for comparisons).
        #[arg(long)]
        template: Option<String>,
        /// Attribute suggestions voiced by moderators and experts too.
        #[arg(long)]
        include_nondelegate_suggestions: bool,
    },
    /// Embed suggestions and recommendation statements.
    Embed(CommonArgs),
    /// Project the joint embedding space to 2-D; write map.svg and map.csv.
    Map {
        #[command(flatten)]
        common: CommonArgs,
        /// Projection seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rank suggestions most distant from any recommendation into gaps.csv.
    Gaps {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of entries to keep.
        #[arg(long)]
        k: Option<usize>,
        /// Distance space: original embeddings or the 2-D map.
        #[arg(long, value_enum, default_value = "embedding")]
        space: SpaceArg,
    },
    /// Report near-duplicate suggestion groups.
    Dedup {
        #[command(flatten)]
        common: CommonArgs,
        /// Cosine similarity threshold in (0, 1].
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Build one delegate's stance profile for one statement.
    Profile {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        delegate: String,
        #[arg(long)]
        statement: String,
        /// Evidence confidence floor.
        #[arg(long)]
        min_confidence: Option<f64>,
    },
    /// Support rates and vote-change analysis for every statement.
    Votes(CommonArgs),
    /// Render profile reports for every (delegate, statement) pair.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        min_confidence: Option<f64>,
    },
    /// Score a run against gold labels; optionally compare and judge.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Gold label CSV (conversation_id,turn_index,label).
        #[arg(long)]
        gold: PathBuf,
        /// Which task the gold labels cover.
        #[arg(long, value_enum, default_value = "suggestions")]
        task: TaskArg,
        /// Run output JSONL to score.
        #[arg(long)]
        run: PathBuf,
        /// Baseline run JSONL to compare against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Ask a judge model for a narrative comparison.
        #[arg(long)]
        judge: bool,
        /// Judge model id (must come from a different family than the
        /// extraction model to avoid self-preference bias).
        #[arg(long)]
        judge_model: Option<String>,
    },
    /// Response-cache maintenance.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
    /// Run the full pipeline end to end.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Print cache entry counts and file size.
    Stats(CommonArgs),
}

fn load_config(common: &CommonArgs) -> Result<ToolConfig, Error> {
    let mut config = ToolConfig::from_path(&common.config)?;
    if let Some(backend) = common.backend {
        config.backend.kind = match backend {
            BackendArg::Live => BackendKind::Live,
            BackendArg::Mock => BackendKind::Mock,
        };
        if config.backend.kind == BackendKind::Mock && config.backend.mock.is_none() {
            config.backend.mock = Some(MockConfig::default());
        }
    }
    if let Some(out_dir) = &common.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(max_inflight) = common.max_inflight {
        config.backend.max_inflight = max_inflight;
    }
    if let Some(max_retries) = common.max_retries {
        config.pipeline.max_retries = max_retries;
    }
    Ok(config)
}

fn cache_stats(config: &ToolConfig) -> Result<(), Error> {
    let path = config.cache_path();
    if !path.exists() {
        println!("cache {}: no cache file yet", path.display());
        return Ok(());
    }
    let cache = assembly_lens::gateway::ResponseCache::open(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!(
        "cache {}: {} entries, {} bytes",
        path.display(),
        cache.len(),
        bytes
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(common) => {
            pipeline::run_ingest(&load_config(&common)?)?;
        }
        Command::Extract {
            common,
            template,
            include_nondelegate_suggestions,
        } => {
            let mut config = load_config(&common)?;
            if include_nondelegate_suggestions {
                config.pipeline.include_nondelegate_suggestions = true;
            }
            pipeline::run_extract(&config, template.as_deref())?;
        }
        Command::Embed(common) => {
            pipeline::run_embed(&load_config(&common)?)?;
        }
        Command::Map { common, seed } => {
            pipeline::run_map(&load_config(&common)?, seed)?;
        }
        Command::Gaps { common, k, space } => {
            let space = match space {
                SpaceArg::Embedding => GapSpace::Embedding,
                SpaceArg::Planar => GapSpace::Planar,
            };
            pipeline::run_gaps(&load_config(&common)?, k, space)?;
        }
        Command::Dedup { common, threshold } => {
            pipeline::run_dedup(&load_config(&common)?, threshold)?;
        }
        Command::Profile {
            common,
            delegate,
            statement,
            min_confidence,
        } => {
            pipeline::run_profile(&load_config(&common)?, &delegate, &statement, min_confidence)?;
        }
        Command::Votes(common) => {
            pipeline::run_votes(&load_config(&common)?)?;
        }
        Command::Report {
            common,
            min_confidence,
        } => {
            pipeline::run_report(&load_config(&common)?, min_confidence)?;
        }
        Command::Eval {
            common,
            gold,
            task,
            run,
            baseline,
            judge,
            judge_model,
        } => {
            let args = EvalArgs {
                gold,
                task: match task {
                    TaskArg::Suggestions => GoldTask::Suggestions,
                    TaskArg::Evidence => GoldTask::Evidence,
                },
                run,
                baseline,
                judge,
                judge_model,
            };
            pipeline::run_eval(&load_config(&common)?, &args)?;
        }
        Command::Cache { command } => match command {
            CacheCommand::Stats(common) => cache_stats(&load_config(&common)?)?,
        },
        Command::Run { common, seed } => {
            pipeline::run_end_to_end(&load_config(&common)?, seed)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

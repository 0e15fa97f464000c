use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use queerbench::benchmark::{ReportFormat, ToolSet};
use queerbench::lexical::HurtlexLevel;
use queerbench::predictor::TopK;
use tracing_subscriber::EnvFilter;

mod commands;
mod config;

use commands::SubjectSelection;

/// Bad input or configuration. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Run finished but scored less than `--coverage-floor`. Exits with status 3.
#[derive(Debug)]
pub struct CoverageError(pub String);

impl std::fmt::Display for CoverageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CoverageError {}

#[derive(Parser)]
#[command(name = "queerbench", version)]
#[command(about = "Measure harm in masked-LM completions about LGBTQIA+ subjects")]
struct Cli {
    /// Flat `key = value` file; any flag given on the command line wins
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Instantiate every template with every subject
    Generate(GenerateArgs),
    /// Collect top-k predictions from the fill-mask sidecar into the cache
    Predict(PredictArgs),
    /// Score cached predictions per subject group
    Score(ScoreArgs),
    /// Render results files as model x group matrices
    Report(ReportArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub nouns: Option<PathBuf>,
    #[arg(long)]
    pub pronouns: Option<PathBuf>,
    /// all, pronouns-only or nouns-only
    #[arg(long)]
    pub subjects: Option<SubjectSelection>,
    /// Output directory (dataset.jsonl is written here)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Dataset file [default: <out>/dataset.jsonl]
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model id as known to the sidecar; repeatable
    #[arg(long)]
    pub model: Vec<String>,
    /// Sidecar base URL
    #[arg(long)]
    pub endpoint: Option<String>,
    /// 1 or 5; repeatable [default: 1 and 5]
    #[arg(long = "top-k")]
    pub top_k: Vec<TopK>,
    /// Prediction cache [default: <out>/predictions.jsonl]
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Requests in flight
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Fail on the first sentence without predictions
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Dataset file [default: <out>/dataset.jsonl]
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Models to score; repeatable [default: every model in the replay file]
    #[arg(long)]
    pub model: Vec<String>,
    /// 1 or 5; repeatable [default: 1 and 5]
    #[arg(long = "top-k")]
    pub top_k: Vec<TopK>,
    /// Replay file of predictions [default: the prediction cache]
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Prediction cache written by `predict` [default: <out>/predictions.jsonl]
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// AFINN word list [default: data/afinn/AFINN-en-165.txt]
    #[arg(long)]
    pub afinn: Option<PathBuf>,
    /// HurtLex lexicon (hurtlex_EN.tsv layout)
    #[arg(long)]
    pub hurtlex: Option<PathBuf>,
    /// conservative or inclusive
    #[arg(long = "hurtlex-level")]
    pub hurtlex_level: Option<HurtlexLevel>,
    /// Comma-separated subset of afinn,hurtlex,perspective
    #[arg(long)]
    pub tools: Option<ToolSet>,
    /// Perspective flagging threshold, in (0, 1)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Recorded analyzer responses [default: <out>/perspective.jsonl].
    /// With PERSPECTIVE_API_KEY set, new responses are appended here.
    #[arg(long)]
    pub recorded: Option<PathBuf>,
    #[arg(long = "perspective-url")]
    pub perspective_url: Option<String>,
    /// Live analyzer requests per second
    #[arg(long = "rate-limit")]
    pub rate_limit: Option<f64>,
    /// Minimum scored fraction; below it the run exits with status 3
    #[arg(long = "coverage-floor")]
    pub coverage_floor: Option<f64>,
    /// Abort on the first excluded sentence
    #[arg(long)]
    pub strict: bool,
    /// Output directory for results and coverage files
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory holding results-k*.jsonl; reports are written here too
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, json or markdown
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);

    let cfg = match &cli.config {
        Some(path) => config::ConfigFile::load(path),
        None => Ok(config::ConfigFile::default()),
    };
    let outcome = cfg.and_then(|cfg| match cli.command {
        Command::Generate(args) => commands::generate(&cfg, args),
        Command::Predict(args) => commands::predict(&cfg, args),
        Command::Score(args) => commands::score(&cfg, args),
        Command::Report(args) => commands::report(&cfg, args),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<CoverageError>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

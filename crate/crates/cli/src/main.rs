//! `tmfix`: run the ingest service, simulate sessions, analyze logs, extract
//! interest terms and evaluate extraction against ground truth.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 input or configuration error,
//! 3 empty corpus, 4 session not found.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tmfix_core::extract::{ThresholdPolicy, ThresholdRule, DEFAULT_FLOOR_MS, DEFAULT_MEDIAN_FACTOR};
use tmfix_core::stats::DEFAULT_ALPHA;

#[derive(Debug, Parser)]
#[command(name = "tmfix", version, about = "Term-mouse-fixation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP ingest service.
    Serve(ServeArgs),
    /// Generate a synthetic session log and its ground truth.
    Simulate(SimulateArgs),
    /// Analyze a log into a corpus report, or one session with --session.
    Analyze(AnalyzeArgs),
    /// Extract interest terms for one session.
    Extract(ExtractArgs),
    /// Score extraction against a ground-truth file.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct NormArgs {
    /// Normalization config (JSON); built-in German/English profiles when omitted.
    #[arg(long, env = "TMFIX_NORM_CONFIG")]
    norm_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PolicyKind {
    MedianFactor,
    Absolute,
    TopK,
}

#[derive(Debug, Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value = "median_factor")]
    policy: PolicyKind,
    /// Multiple of the session median (median_factor).
    #[arg(long, default_value_t = DEFAULT_MEDIAN_FACTOR)]
    factor: f64,
    /// Fixed threshold in milliseconds (absolute).
    #[arg(long)]
    absolute_ms: Option<u64>,
    /// Number of top stems to keep (top_k).
    #[arg(long)]
    k: Option<usize>,
    /// Minimum total fixation time for any extracted stem.
    #[arg(long, default_value_t = DEFAULT_FLOOR_MS)]
    floor_ms: u64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "TMFIX_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Event log to append to; created when missing.
    #[arg(long, env = "TMFIX_LOG", default_value = "events.jsonl")]
    log: PathBuf,
    #[arg(long, env = "TMFIX_MAX_BATCH_BYTES", default_value_t = tmfix_service::DEFAULT_MAX_BATCH_BYTES)]
    max_batch_bytes: usize,
    /// Allowed CORS origin; repeat or comma-separate. Any origin when omitted.
    #[arg(long = "cors-origin", env = "TMFIX_CORS_ORIGINS", value_delimiter = ',')]
    cors_origins: Vec<String>,
    /// Require this value in the x-ingest-token header.
    #[arg(long, env = "TMFIX_TOKEN")]
    token: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulator config (JSON); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    norm: NormArgs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Where to write the JSON document.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Emit the per-session analysis of this session instead of the corpus report.
    #[arg(long)]
    session: Option<String>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    session: String,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Where to write the JSON evaluation report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    policy: PolicyArgs,
}

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }
    pub fn empty(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
    pub fn not_found(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 4, error: error.into() }
    }
}

impl PolicyArgs {
    fn resolve(&self) -> Result<ThresholdPolicy, Failure> {
        let rule = match self.policy {
            PolicyKind::MedianFactor => ThresholdRule::MedianFactor { factor: self.factor },
            PolicyKind::Absolute => ThresholdRule::Absolute {
                absolute_ms: self
                    .absolute_ms
                    .ok_or_else(|| Failure::input(anyhow::anyhow!("--policy absolute needs --absolute-ms")))?,
            },
            PolicyKind::TopK => ThresholdRule::TopK {
                k: self
                    .k
                    .ok_or_else(|| Failure::input(anyhow::anyhow!("--policy top_k needs --k")))?,
            },
        };
        let policy = ThresholdPolicy {
            rule,
            floor_ms: self.floor_ms,
        };
        policy.validate().map_err(Failure::input)?;
        Ok(policy)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => commands::serve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Extract(a) => commands::extract(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

//! `surprise` — score calibration and result-list truncation pipelines.
//!
//! Subcommands:
//! - `rescore`: calibrate every query's scores in a TREC run or JSONL file.
//! - `truncate`: turn calibrated scores into per-query cutoffs, by a fixed
//!   threshold, a p-value, or a threshold swept on training data.
//! - `baselines`: compare truncation policies on a labeled train/test pair.
//! - `simulate`: generate the seeded synthetic benchmark files.
//!
//! Exit codes: 0 success (warnings allowed), 1 usage error, 2 data error.

mod commands;
mod support;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};

use support::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "surprise", version, about = "Score calibration and result-list truncation")]
struct Cli {
    /// Print per-query diagnostics and summary tables to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate the scores of every query in the input.
    Rescore(RescoreArgs),
    /// Apply a threshold to calibrated scores and emit per-query cutoffs.
    Truncate(TruncateArgs),
    /// Evaluate truncation policies side by side on labeled data.
    Baselines(BaselinesArgs),
    /// Generate a seeded synthetic benchmark.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct RescoreArgs {
    /// Input file (TREC run or JSONL, per --format).
    #[arg(long)]
    pub input: PathBuf,

    /// Input format.
    #[arg(long, default_value = "jsonl", value_parser = ["trec", "jsonl"])]
    pub format: String,

    /// Score orientation of a TREC run: "higher" = higher is more relevant,
    /// "lower" = distance-like scores that are negated on ingestion.
    #[arg(long, default_value = "higher", value_parser = ["higher", "lower"])]
    pub orientation: String,

    /// Relevance judgments to attach as labels (TREC qrels).
    #[arg(long)]
    pub qrels: Option<PathBuf>,

    /// Smallest fit-window size.
    #[arg(long, default_value_t = surprise::DEFAULT_MIN_FIT_SIZE)]
    pub m_min: usize,

    /// Cap on scores trimmed per side during window selection
    /// (default: half the list).
    #[arg(long)]
    pub trim_cap: Option<usize>,

    /// Fit on the whole tail above the threshold instead of the selected
    /// window.
    #[arg(long)]
    pub fit_full_tail: bool,

    /// Output path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("cut").required(true).args(["threshold", "pvalue", "sweep"])))]
pub struct TruncateArgs {
    /// Rescored JSONL input.
    #[arg(long)]
    pub input: PathBuf,

    /// Keep results with calibrated score strictly above this value.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Equivalent threshold expressed as a p-value in (0, 1]:
    /// threshold = -ln(p).
    #[arg(long)]
    pub pvalue: Option<f64>,

    /// Pick the threshold by sweeping the given labeled, rescored training
    /// JSONL.
    #[arg(long)]
    pub sweep: Option<PathBuf>,

    /// Sweep range as LO:HI.
    #[arg(long, default_value = "0:8", value_parser = parse_range)]
    pub sweep_range: (f64, f64),

    /// Sweep grid spacing.
    #[arg(long, default_value_t = surprise::truncate::DEFAULT_SWEEP_STEP)]
    pub sweep_step: f64,

    /// Metric optimized by the sweep and reported with --report.
    #[arg(long, default_value = "f1", value_parser = parse_metric)]
    pub metric: surprise::Metric,

    /// Generator-truth sidecar (JSON) supplying per-query relevant totals.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Qrels file supplying per-query relevant totals.
    #[arg(long)]
    pub qrels: Option<PathBuf>,

    /// Decisions output path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Also write an evaluation report (requires labeled input).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    /// Labeled test JSONL (rescored, or rescored on the fly).
    #[arg(long)]
    pub input: PathBuf,

    /// Labeled training JSONL.
    #[arg(long)]
    pub train: PathBuf,

    /// Metric every policy optimizes and is scored by.
    #[arg(long, default_value = "f1", value_parser = parse_metric)]
    pub metric: surprise::Metric,

    /// Generator-truth sidecar (JSON) supplying per-query relevant totals.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Qrels file supplying per-query relevant totals.
    #[arg(long)]
    pub qrels: Option<PathBuf>,

    /// Neighborhood map (JSON: test query id -> train query ids); enables
    /// the local_k and isotonic policies.
    #[arg(long)]
    pub neighborhood_map: Option<PathBuf>,

    /// Comma-separated policies to evaluate
    /// (oracle,global_k,local_k,isotonic,surprise,score_threshold).
    #[arg(long)]
    pub policies: Option<String>,

    /// Sweep range for the surprise policy, as LO:HI.
    #[arg(long, default_value = "0:8", value_parser = parse_range)]
    pub sweep_range: (f64, f64),

    /// Sweep grid spacing for the surprise policy.
    #[arg(long, default_value_t = surprise::truncate::DEFAULT_SWEEP_STEP)]
    pub sweep_step: f64,

    /// Smallest fit-window size for on-the-fly rescoring.
    #[arg(long, default_value_t = surprise::DEFAULT_MIN_FIT_SIZE)]
    pub m_min: usize,

    /// Trim cap for on-the-fly rescoring.
    #[arg(long)]
    pub trim_cap: Option<usize>,

    /// Report output path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory for train.jsonl, test.jsonl, neighborhoods.json, truth.json.
    #[arg(long)]
    pub output: PathBuf,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 500)]
    pub num_train: usize,

    #[arg(long, default_value_t = 500)]
    pub num_test: usize,

    /// Results retained per query.
    #[arg(long, default_value_t = 200)]
    pub list_length: usize,

    #[arg(long, default_value_t = 0)]
    pub relevant_min: usize,

    #[arg(long, default_value_t = 10)]
    pub relevant_max: usize,

    #[arg(long, default_value_t = 0.0)]
    pub offset_min: f64,

    #[arg(long, default_value_t = 20.0)]
    pub offset_max: f64,

    /// Scale of the exponential background tail.
    #[arg(long, default_value_t = 1.0)]
    pub tail_scale: f64,

    /// Shift of the relevant distribution above the background.
    #[arg(long, default_value_t = 10.0)]
    pub delta: f64,

    /// Background draws per query.
    #[arg(long, default_value_t = 100_000)]
    pub background: usize,

    /// Neighborhood size recorded for each test query.
    #[arg(long, default_value_t = 20)]
    pub neighbors: usize,
}

fn parse_metric(s: &str) -> Result<surprise::Metric, String> {
    s.parse::<surprise::Metric>().map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.parse().map_err(|_| format!("bad range bound {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad range bound {hi:?}"))?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(format!("range must satisfy LO < HI, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn run(cli: Cli) -> CliResult<usize> {
    match cli.command {
        Command::Rescore(args) => commands::rescore::run(args, cli.verbose),
        Command::Truncate(args) => commands::truncate::run(args, cli.verbose),
        Command::Baselines(args) => commands::baselines::run(args, cli.verbose),
        Command::Simulate(args) => commands::simulate::run(args, cli.verbose),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(warnings) => {
            if warnings > 0 {
                eprintln!("{warnings} warning(s)");
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

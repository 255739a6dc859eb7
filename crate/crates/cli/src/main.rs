//! `xtreaming` — generate streams, run the projection engine, evaluate
//! layouts, benchmark buffer sizes, and render SVG scatter plots.

mod commands;
mod plot;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xtreaming::embed::ProjectorKind;
use xtreaming::error::Error;
use xtreaming::novelty::LofConfig;
use xtreaming::EngineConfig;

#[derive(Parser)]
#[command(
    name = "xtreaming",
    version,
    about = "Single-pass streaming 2D projection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic cube-cluster stream (data, labels, spec echo).
    Generate(GenerateArgs),
    /// Run the streaming projection over a CSV dataset.
    Project(ProjectArgs),
    /// Evaluate layout quality (normalized stress).
    Eval(EvalArgs),
    /// Render a snapshot CSV as an SVG scatter plot.
    Plot(PlotArgs),
    /// Sweep buffer sizes, recording stress and wall time per cell.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Total number of points.
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    /// Number of stream steps.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Per-cluster Gaussian spread.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Dataset CSV of numeric columns.
    #[arg(long)]
    input: std::path::PathBuf,
    /// Treat the first row as a header.
    #[arg(long, default_value_t = false)]
    has_header: bool,
    /// Zero-based column to skip as a class label.
    #[arg(long)]
    label_col: Option<usize>,
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, default_value_t = 1000)]
    buffer_size: usize,
    #[arg(long, default_value_t = LofConfig::default().k)]
    lof_k: usize,
    #[arg(long, default_value_t = LofConfig::default().threshold)]
    lof_threshold: f64,
    #[arg(long, value_enum, default_value_t = Projector::Lmds)]
    projector: Projector,
    /// Disable change detection after the first buffer (baseline mode).
    #[arg(long, default_value_t = false)]
    frozen: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Projector {
    Lmds,
    Pekalska,
}

impl EngineArgs {
    fn to_config(&self) -> EngineConfig {
        EngineConfig {
            buffer_capacity: self.buffer_size,
            lof: LofConfig {
                k: self.lof_k,
                threshold: self.lof_threshold,
            },
            projector: match self.projector {
                Projector::Lmds => ProjectorKind::LandmarkMds,
                Projector::Pekalska => ProjectorKind::Pekalska,
            },
            seed: self.seed,
            frozen: self.frozen,
        }
    }
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write an intermediate snapshot every K buffers (0 = final only).
    #[arg(long, default_value_t = 0)]
    snapshot_every: u64,
    #[arg(long)]
    out_dir: std::path::PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Final,
    Evolution,
    Shuffle,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Snapshot CSV to score (final mode).
    #[arg(long)]
    layout: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalMode::Final)]
    mode: EvalMode,
    /// Number of shuffled runs (shuffle mode).
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output stress CSV.
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Snapshot CSV (`id,x,y,step,opacity`).
    #[arg(long)]
    layout: std::path::PathBuf,
    /// Optional labels CSV (one integer label per row, aligned with ids).
    #[arg(long)]
    labels: Option<std::path::PathBuf>,
    /// Output SVG.
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated buffer sizes to sweep.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
    buffer_sizes: Vec<usize>,
    /// Number of seeds per size (seeds 0..seeds).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output report CSV.
    #[arg(long)]
    out: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Project(args) => commands::project(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Plot(args) => plot::plot(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let usage = e.is_usage() || matches!(e, Error::Parse { .. });
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

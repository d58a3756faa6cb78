//! `dvlae` subcommands: fingerprint, screen, embed, ood, plot.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "DVLAE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "dvlae", version, about = "Difference-vector fingerprints for atomic structure datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `output.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fingerprint the configured datasets.
    Fingerprint(FingerprintArgs),
    /// Deduplicate fingerprints, or novelty-screen descriptor vectors.
    Screen(ScreenArgs),
    /// Embed fingerprints or vectors in 2-D.
    Embed(EmbedArgs),
    /// Rank prediction structures by distance to the training fingerprints.
    Ood(OodArgs),
    /// Draw an embedding as an SVG scatter plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset manifest(s); replaces `data.manifests`.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
    /// Reuse the bins and reference of an existing spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Only fingerprint structures whose ids are listed in this file.
    #[arg(long)]
    pub keep: Option<PathBuf>,
    /// Also write mean-descriptor and zero-padded baseline vectors.
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fingerprint file (default `<out>/fingerprints.dvfp`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Only screen records whose ids are listed in this file.
    #[arg(long)]
    pub keep: Option<PathBuf>,
    #[arg(long, value_parser = ["exact", "hamming", "novelty"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_parser = ["min", "mean"])]
    pub aggregate: Option<String>,
    /// Candidate vectors for novelty screening.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Training vectors for novelty screening.
    #[arg(long)]
    pub training: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fingerprint file or vector CSV (default `<out>/fingerprints.dvfp`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<config::Method>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Also embed the zero-padded baseline vectors.
    #[arg(long)]
    pub compare_baseline: bool,
    /// Baseline vector CSV (default `<out>/baseline.csv`).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OodArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub training: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub top_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub common: Common,
    /// Embedding CSV (default `<out>/embedding.csv`).
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// File of ids to draw as diamonds, one per line.
    #[arg(long)]
    pub highlight: Option<PathBuf>,
    /// SVG path (default `<out>/plot.svg`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Run one parsed command; returns the lines to print on standard output.
pub fn run(cli: Cli) -> CliResult<Vec<String>> {
    match cli.command {
        Command::Fingerprint(a) => commands::fingerprint(&a),
        Command::Screen(a) => commands::screen(&a),
        Command::Embed(a) => commands::embed(&a),
        Command::Ood(a) => commands::ood(&a),
        Command::Plot(a) => commands::plot(&a),
    }
}

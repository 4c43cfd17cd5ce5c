use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use telegraph_core::{ModelParams, SeriesControl};

use crate::{CliError, CliResult, EvalGrid};

#[derive(Debug, Parser)]
#[command(
    name = "telegraph",
    version,
    about = "Telegraph process with an elastic boundary at the origin"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a density, distribution function or atom on a grid.
    Eval(EvalArgs),
    /// Moments from the series formulas and the closed means and variances.
    Moments(MomentsArgs),
    /// Simulate absorption records.
    Simulate(SimulateArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Rate of the upward phases.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Rate of the downward phases.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub mu: f64,
    /// Absorption probability at the origin.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Starting position.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x: f64,
    /// Term cap for every infinite series.
    #[arg(long, default_value_t = 20_000)]
    pub max_terms: usize,
}

impl ModelArgs {
    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.lambda, self.mu, self.alpha, self.x)?)
    }

    pub fn ctrl(&self) -> CliResult<SeriesControl> {
        let c = SeriesControl::default().with_max_terms(self.max_terms);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Psi0,
    Psix,
    PdfC0,
    PdfCx,
    PdfA0,
    CondCdf,
    CondPdf,
    Atom,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Psi0 => "psi0",
            Target::Psix => "psix",
            Target::PdfC0 => "pdf-c0",
            Target::PdfCx => "pdf-cx",
            Target::PdfA0 => "pdf-a0",
            Target::CondCdf => "cond-cdf",
            Target::CondPdf => "cond-pdf",
            Target::Atom => "atom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2Left,
    Fig2Right,
    Fig3Left,
    Fig3Right,
    Fig6,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Quantity to tabulate; implied by --preset.
    #[arg(value_enum, required_unless_present = "preset")]
    pub target: Option<Target>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time for the conditional law within a cycle.
    #[arg(long)]
    pub t: Option<f64>,
    /// Conditioning value of the upward time `T_0`.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Uniform grid `start:stop:points`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<EvalGrid>,
    /// Parameter sets of a figure; overrides the model flags.
    #[arg(long, value_enum, conflicts_with = "target")]
    pub preset: Option<Preset>,
    /// Write the CSV table to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print a JSON envelope on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Highest moment order.
    #[arg(long, default_value_t = 4)]
    pub n_max: u32,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of paths.
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Write one CSV row per path to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    /// Use the cycle density with the extra leading `lambda`.
    PrintedFc0,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = Level::Fast)]
    pub level: Level,
    /// Corrupt the model on purpose to check that the suite notices.
    #[arg(long, value_enum)]
    pub mutate: Option<Mutation>,
    #[arg(long)]
    pub json: bool,
}

fn parse_grid(s: &str) -> Result<EvalGrid, String> {
    s.parse::<EvalGrid>().map_err(|e| e.to_string())
}

pub(crate) fn require(name: &str, v: Option<f64>) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required for this target")))
}

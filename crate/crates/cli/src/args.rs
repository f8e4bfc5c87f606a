use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use funding_game::multiround::Sizing;

#[derive(Debug, Parser)]
#[command(
    name = "funding-game",
    version,
    about = "Funding Game simulator and bound checker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated instance as JSON.
    Gen(GenArgs),
    /// Compute the constructed equilibrium of the single-round game.
    Nash(NashArgs),
    /// Play the k-round game and print the full trace.
    Simulate(SimulateArgs),
    /// Evaluate the k-round game over a corpus and report per-row ratios.
    Sweep(SweepArgs),
    /// Numerically search the supremum of the bound function for each k.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    RandomConcave,
    Poa2,
    Unbounded,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RandomConcave => "random-concave",
            Family::Poa2 => "poa2",
            Family::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SizingArg {
    Strict,
    Rounded,
}

impl From<SizingArg> for Sizing {
    fn from(s: SizingArg) -> Self {
        match s {
            SizingArg::Strict => Sizing::Strict,
            SizingArg::Rounded => Sizing::Rounded,
        }
    }
}

/// Generator parameters shared by every command that can build an instance.
#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Generator family (instead of --instance).
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Number of items.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of players.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed for the random-concave family.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Perturbation of the unbounded family.
    #[arg(long, default_value_t = 0.001)]
    pub eps: f64,
    /// Upper end of the random per-item increment.
    #[arg(long, default_value_t = 10.0)]
    pub max_increment: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Output file (stdout if omitted).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NashArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Round counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "strict")]
    pub sizing: SizingArg,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "random-concave")]
    pub family: Family,
    /// Number of instances.
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Base seed; instance j uses seed + j.
    #[arg(long)]
    pub seed: u64,
    /// Largest player count for random instances.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Largest item count for random instances.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Round counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "strict")]
    pub sizing: SizingArg,
    /// Draw a separate random corpus per k whose item counts are multiples
    /// of k(k+1)/2, so strict sizing never skips a row.
    #[arg(long)]
    pub divisible: bool,
    #[arg(long, default_value_t = 0.001)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_increment: f64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Round counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub k: Vec<usize>,
    /// Objective evaluations per k.
    #[arg(long, default_value_t = 200_000)]
    pub budget: usize,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

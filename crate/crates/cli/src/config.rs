use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "qdf",
    version,
    about = "Check, decompose and factor exchangeable sequences of quantum and classical states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check symmetry and marginal consistency of every level.
    Check,
    /// Fit a mixture of iid sequences to an exchangeable sequence.
    Reconstruct,
    /// Factor a cone of channels through mixtures over an atom set.
    Factor,
    /// Generate a built-in fixture, check it and reconstruct it.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Sequence or cone file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Atom file: a list of density matrices, or a list of distributions for classical input.
    #[arg(long, global = true)]
    pub atoms: Option<PathBuf>,
    /// Size of the generated atom set when no atom file is given.
    #[arg(long, global = true, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub atom_count: u64,
    /// Seed for generated atoms and restarts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Use only the first levels of the input, or the depth of a demo fixture.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: Option<u64>,
    /// Trace-norm tolerance for the exchangeability and cone-law checks.
    #[arg(long, global = true, value_parser = positive)]
    pub tol: Option<f64>,
    /// Largest residual accepted as a representation.
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = positive)]
    pub max_residual: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the JSON report (or, for demos, the generated fixture) to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Circuit1,
    Circuit2,
    Equator,
    UnknownQubit,
    Coin,
}

impl DemoName {
    pub fn default_depth(self) -> usize {
        match self {
            DemoName::Circuit1 | DemoName::Circuit2 | DemoName::UnknownQubit => 3,
            DemoName::Equator => 4,
            DemoName::Coin => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DemoName::Circuit1 => "circuit1",
            DemoName::Circuit2 => "circuit2",
            DemoName::Equator => "equator",
            DemoName::UnknownQubit => "unknown-qubit",
            DemoName::Coin => "coin",
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

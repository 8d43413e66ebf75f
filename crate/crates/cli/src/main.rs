//! `cspr`: batch testing of dinucleotide strand parity in genomic sequences.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use cspr_core::seq::AmbiguityPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ambiguity {
    /// Drop non-ACGT symbols, recording how many were dropped.
    Skip,
    /// Abort a file at the first non-ACGT symbol.
    Error,
}

impl From<Ambiguity> for AmbiguityPolicy {
    fn from(a: Ambiguity) -> Self {
        match a {
            Ambiguity::Skip => AmbiguityPolicy::Skip,
            Ambiguity::Error => AmbiguityPolicy::Error,
        }
    }
}

#[derive(Debug, Parser)]
pub struct TestArgs {
    /// FASTA files to test.
    pub files: Vec<PathBuf>,
    /// Significance level for decisions and the family-wise correction.
    #[arg(long, env = "CSPR_ALPHA", default_value_t = 0.01)]
    pub alpha: f64,
    /// Cap on the adaptive truncation-lag search.
    #[arg(long = "max-m", env = "CSPR_MAX_M", default_value_t = 1000)]
    pub max_m: usize,
    /// Truncation threshold as a fraction of each dinucleotide's variance.
    #[arg(
        long = "threshold-frac",
        env = "CSPR_THRESHOLD_FRAC",
        default_value_t = 0.01
    )]
    pub threshold_frac: f64,
    /// Treat sequences as linear replicons (counting only; the test itself
    /// always uses circular counts).
    #[arg(long, env = "CSPR_LINEAR")]
    pub linear: bool,
    #[arg(long, env = "CSPR_AMBIGUITY", value_enum, default_value_t = Ambiguity::Skip)]
    pub ambiguity: Ambiguity,
    #[arg(long, env = "CSPR_FORMAT", value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    /// Worker threads for the test pool (default: one per CPU).
    #[arg(long, env = "CSPR_WORKERS")]
    pub workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, env = "CSPR_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "cspr",
    version,
    about = "Test genomic sequences for dinucleotide strand parity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test each FASTA record and report statistics, p-values and decisions.
    Test(TestArgs),
    /// Length and GC-content summary statistics across records.
    Summary {
        files: Vec<PathBuf>,
        #[arg(long, env = "CSPR_AMBIGUITY", value_enum, default_value_t = Ambiguity::Skip)]
        ambiguity: Ambiguity,
        #[arg(long, env = "CSPR_FORMAT", value_enum, default_value_t = Format::Tsv)]
        format: Format,
        #[arg(long, env = "CSPR_OUT")]
        out: Option<PathBuf>,
    },
    /// Generate sequences from a simulation spec into a FASTA file.
    Simulate {
        /// Key-value simulation spec.
        #[arg(long)]
        spec: PathBuf,
        /// Output FASTA path (stdout when omitted).
        #[arg(long, env = "CSPR_OUT")]
        out: Option<PathBuf>,
        /// Override the spec's base seed.
        #[arg(long, env = "CSPR_SEED")]
        seed: Option<u64>,
    },
    /// Rejection-rate table over a grid of parity-breaking perturbations.
    Power {
        /// Key-value experiment spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, env = "CSPR_FORMAT", value_enum, default_value_t = Format::Tsv)]
        format: Format,
        #[arg(long, env = "CSPR_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "CSPR_WORKERS")]
        workers: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(args) => commands::cmd_test(args),
        Command::Summary {
            files,
            ambiguity,
            format,
            out,
        } => commands::cmd_summary(files, *ambiguity, *format, out),
        Command::Simulate { spec, out, seed } => commands::cmd_simulate(spec, out, *seed),
        Command::Power {
            spec,
            format,
            out,
            workers,
        } => commands::cmd_power(spec, *format, out, *workers),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

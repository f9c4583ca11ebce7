use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::perletter::Criterion;

#[derive(Debug, Parser)]
#[command(name = "privlens", version, about = "Privacy mechanism design and auditing for finite (X, Y) pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropies, leakage-matrix rank and positivity flags of a distribution.
    Info(InfoArgs),
    /// Build a mechanism and report its metrics.
    Design(DesignArgs),
    /// Bounds, constructions and optionally the oracle over an ε grid, as CSV.
    Sweep(SweepArgs),
    /// Audit a mechanism against a leakage constraint.
    Verify(VerifyArgs),
    /// Private two-part compression code.
    #[command(subcommand)]
    Compress(CompressCommand),
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// Distribution file (.json or .csv).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Frl,
    Sfrl,
    Efrl,
    Esfrl,
    YRand,
    Prioritized,
    G0Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Mi,
    L1,
    WeightedL1,
}

impl CriterionArg {
    pub fn per_letter(self) -> Option<Criterion> {
        match self {
            CriterionArg::Mi => None,
            CriterionArg::L1 => Some(Criterion::StrongL1),
            CriterionArg::WeightedL1 => Some(Criterion::WeightedL1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CriterionArg::Mi => "mi",
            CriterionArg::L1 => "l1",
            CriterionArg::WeightedL1 => "weighted-l1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    /// Mechanism observes Y only.
    G,
    /// Mechanism observes X and Y.
    H,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Oracle alphabet size (default |X|·|Y| + 1).
    #[arg(long)]
    pub u_size: Option<usize>,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Calibrate efrl/esfrl to a per-letter target instead of I(X;U).
    #[arg(long, value_enum, default_value_t = CriterionArg::Mi)]
    pub criterion: CriterionArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SFRL mark count.
    #[arg(long, default_value_t = 4)]
    pub truncation: usize,
    /// SFRL score cells.
    #[arg(long, default_value_t = 16)]
    pub quantization: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    /// ε grid as start:stop:count.
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = CriterionArg::Mi)]
    pub criterion: CriterionArg,
    /// Add an oracle column.
    #[arg(long)]
    pub with_oracle: bool,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Mechanism JSON to audit.
    #[arg(long)]
    pub mechanism: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = CriterionArg::Mi)]
    pub criterion: CriterionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CompressCommand {
    /// Build a codebook for a distribution.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode one (x, y) pair under key w; prints hex.
    Encode {
        #[arg(long)]
        codebook: PathBuf,
        /// Label (or index) of x.
        #[arg(long)]
        x: String,
        /// Label (or index) of y.
        #[arg(long)]
        y: String,
        #[arg(long)]
        key: usize,
        #[arg(long, default_value_t = 0)]
        nonce: u64,
    },
    /// Decode a hex message under key w.
    Decode {
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        hex: String,
        #[arg(long)]
        key: usize,
    },
    /// Expected length, exact leakage and round-trip check.
    Analyze {
        #[arg(long)]
        codebook: PathBuf,
    },
}

/// Parses `start:stop:count` into a strictly increasing grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Usage(format!("grid {s:?} is not start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || a < 0.0 {
        return Err(Error::Usage(format!("grid {s:?} must lie in [0, ∞)")));
    }
    match n {
        0 => Err(Error::Usage("grid needs at least one point".into())),
        1 if a == b => Ok(vec![a]),
        1 => Err(Error::Usage("a one-point grid needs start = stop".into())),
        _ if b <= a => Err(Error::Usage(format!("grid {s:?} is not strictly increasing"))),
        _ => Ok((0..n)
            .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
            .collect()),
    }
}

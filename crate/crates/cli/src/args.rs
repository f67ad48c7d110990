use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manhattan_core::exact_engine::DEFAULT_MAX_SITES;
use manhattan_core::lattice::DEFAULT_CENSUS_RADIUS;
use manhattan_core::{Dimension, OrientationRule};

/// Every flag can also be set through the environment variable shown in its
/// help text (prefix `MANHATTAN_`); a flag on the command line wins.
#[derive(Debug, Parser)]
#[command(name = "manhattan", version, about = "Random walk on the d-dimensional Manhattan lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form mean coefficient and mean square displacement for n = 0..=n_max.
    Formula(CommonArgs),
    /// Exact moments and return probabilities from the path-count DP.
    Exact(CommonArgs),
    /// Seeded Monte Carlo estimates with standard errors.
    Simulate(CommonArgs),
    /// Distinct local environments in a box around the origin.
    Census(CommonArgs),
    /// Floor-halving coupling with the simple random walk (d = 2 only).
    Coupling(CommonArgs),
    /// Formula vs exact oracle vs Monte Carlo, with per-row verdicts.
    Compare(CommonArgs),
    /// SVG plot of the MSD: formula, oracle points, Monte Carlo error bars, asymptote.
    Report(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Formula(_) => "formula",
            Command::Exact(_) => "exact",
            Command::Simulate(_) => "simulate",
            Command::Census(_) => "census",
            Command::Coupling(_) => "coupling",
            Command::Compare(_) => "compare",
            Command::Report(_) => "report",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Formula(a)
            | Command::Exact(a)
            | Command::Simulate(a)
            | Command::Census(a)
            | Command::Coupling(a)
            | Command::Compare(a)
            | Command::Report(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// `manhattan` or `iid:<seed>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleArg {
    Manhattan,
    Iid(u64),
}

impl FromStr for RuleArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "manhattan" {
            return Ok(RuleArg::Manhattan);
        }
        if let Some(seed) = s.strip_prefix("iid:") {
            return seed
                .parse()
                .map(RuleArg::Iid)
                .map_err(|_| format!("bad seed in `{s}`"));
        }
        Err(format!("unknown rule `{s}`, expected `manhattan` or `iid:<seed>`"))
    }
}

impl RuleArg {
    pub fn build(self, d: Dimension) -> OrientationRule {
        match self {
            RuleArg::Manhattan => OrientationRule::manhattan(d),
            RuleArg::Iid(seed) => OrientationRule::iid_coin(d, seed),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Lattice dimension (at least 2).
    #[arg(long, env = "MANHATTAN_D", default_value_t = 2)]
    pub d: usize,

    /// Largest step count; rows run over n = 0..=n_max.
    #[arg(long = "n-max", visible_alias = "n", env = "MANHATTAN_N_MAX", default_value_t = 10)]
    pub n_max: u64,

    /// Monte Carlo chains (default 10000 for simulate, 0 elsewhere).
    #[arg(long, env = "MANHATTAN_CHAINS")]
    pub chains: Option<u64>,

    /// Master seed for Monte Carlo.
    #[arg(long, env = "MANHATTAN_SEED", default_value_t = 1)]
    pub seed: u64,

    /// Orientation rule: `manhattan` or `iid:<seed>`.
    #[arg(long, env = "MANHATTAN_RULE", default_value = "manhattan")]
    pub rule: RuleArg,

    /// Output format (report is always svg).
    #[arg(long, value_enum, env = "MANHATTAN_FORMAT")]
    pub format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, env = "MANHATTAN_OUT")]
    pub out: Option<PathBuf>,

    /// Verify the pathwise identities on every simulated step (default: on
    /// for at most 10000 chains).
    #[arg(long, env = "MANHATTAN_CHECK_INVARIANTS")]
    pub check_invariants: bool,

    /// Live-site budget for the exact DP.
    #[arg(long, env = "MANHATTAN_MAX_SITES", default_value_t = DEFAULT_MAX_SITES)]
    pub max_sites: usize,

    /// Record Monte Carlo moments every this many steps.
    #[arg(long, env = "MANHATTAN_RECORD_STRIDE", default_value_t = 1)]
    pub record_stride: u64,

    /// Worker threads for Monte Carlo (output does not depend on it).
    #[arg(long, env = "MANHATTAN_WORKERS")]
    pub workers: Option<usize>,

    /// Census box radius.
    #[arg(long, env = "MANHATTAN_RADIUS", default_value_t = DEFAULT_CENSUS_RADIUS)]
    pub radius: u32,
}

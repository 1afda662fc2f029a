//! Command-line front end for the `forestperm` library.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Parser)]
#[command(name = "forestperm", version, about = "Tree and forest permutations: counts, patterns, samplers, limit laws")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; trial i uses stream (seed, i).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads (default: FORESTPERM_WORKERS, then all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tables of t_n and f_n, or of a_{n;σ} and E occ for a pattern length.
    Count {
        #[arg(long)]
        n: Option<usize>,
        /// Tabulate marked occurrences for tree patterns of this length.
        #[arg(long)]
        sigma_len: Option<usize>,
    },
    /// Occurrences of a pattern in a host (permutations or L/R codes).
    Occ {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        host: String,
        #[arg(long, value_enum, default_value_t = OccMethod::Both)]
        method: OccMethod,
    },
    /// Random permutations, one per line.
    Sample {
        #[arg(long, value_enum)]
        class: Option<SampleClass>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        /// recursive or renewal (forest), direct or renewal (tree).
        #[arg(long)]
        method: Option<String>,
    },
    /// Exact expectations.
    Expect {
        /// Tree pattern (permutation or code).
        #[arg(long)]
        pattern: Option<String>,
        /// Pattern length, for the length-only formula.
        #[arg(long)]
        sigma_len: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Also average by brute force over every tree of length n.
        #[arg(long)]
        check: bool,
        /// Second forest pattern: compare exact averages over T_m and F_m, m <= n.
        #[arg(long)]
        compare: Option<String>,
        /// E[occ_pattern(τ̃) occ_pattern2(τ̃)] as a certified interval.
        #[arg(long)]
        tilde: bool,
        #[arg(long)]
        pattern2: Option<String>,
        /// Interval width below 2^-bits.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Exact limit constants.
    Constants {
        #[arg(long, value_enum)]
        which: ConstantKind,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        /// Length of the identity pattern for the correction coefficient.
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Monte Carlo check of a central limit theorem.
    Clt {
        #[arg(long, value_enum)]
        class: Option<CltClass>,
        /// Count blocks instead of pattern occurrences (forest hosts).
        #[arg(long)]
        blocks: bool,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Forest sampler: recursive or renewal.
        #[arg(long)]
        method: Option<String>,
        /// Fit the growth exponent of the variance from runs at n/4, n/2, n.
        #[arg(long)]
        explore_degenerate: bool,
        /// Write per-trial counts as CSV.
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Exhaustive and randomized invariant suites.
    Verify {
        #[arg(long)]
        suite: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OccMethod {
    Brute,
    Fast,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleClass {
    Tree,
    Forest,
    Tilde,
}

impl std::str::FromStr for SampleClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <SampleClass as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CltClass {
    Tree,
    Forest,
}

impl std::str::FromStr for CltClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <CltClass as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstantKind {
    Table1,
    GammaLr,
    Mu,
    TildeMu,
    Laga,
    ForestGamma,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(outcome) => ExitCode::from(outcome),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

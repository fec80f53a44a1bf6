//! `rio`: run, sweep and verify remote operator implementation protocols.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "rio", version, about = "Remote implementation of hidden and partially unknown operators")]
struct Cli {
    /// JSON file with the same field names as the flags; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One protocol run, printed as JSON.
    Run(RunArgs),
    /// Success probabilities along one parameter, as CSV.
    Sweep(SweepArgs),
    /// Monte Carlo over fully sampled runs, as CSV.
    Mc(McArgs),
    /// Build a shared channel and print its branches as JSON.
    Channels(ChannelArgs),
    /// Exhaustive correction-table and identity checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Probe amplitude z.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Kerr phase shift in radians; accepts `pi`, `pi/4`, ...
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Dissipation factor D in [0, 1].
    #[arg(long = "D", visible_alias = "dissipation", allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Damping rate; with --t gives D = exp(-gamma t).
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// riho or ripuo.
    #[arg(long)]
    pub protocol: Option<String>,
    /// omega+, omega-, pi+ or pi-.
    #[arg(long)]
    pub channel: Option<String>,
    /// Input amplitude, e.g. 0.6 or 0.6+0.8i, or `random`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Unimodular u of U_B, or `random`.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    /// u = exp(i u_phase).
    #[arg(long, allow_hyphen_values = true)]
    pub u_phase: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_phase: Option<String>,
    /// Bob's sub-operator choice for RIPUO.
    #[arg(long)]
    pub m: Option<u8>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Defaults to $RIO_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Forced outcomes, e.g. k=0,m=1,pq=01.
    #[arg(long)]
    pub force: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// D, z or theta.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// bell, joint, controlled, chain, cyclic or resources.
    #[arg(long)]
    pub kind: Option<String>,
    /// Bell-pair variant for `bell`.
    #[arg(long)]
    pub channel: Option<String>,
    /// Number of Bobs, or cycle size for `cyclic`.
    #[arg(long)]
    pub parties: Option<usize>,
    #[arg(long)]
    pub controllers: Option<usize>,
    /// qubits or classical.
    #[arg(long)]
    pub form: Option<String>,
    /// Controller bit for the classical form.
    #[arg(long)]
    pub r: Option<u8>,
    /// Controller bits r1,r2,... for `chain`.
    #[arg(long)]
    pub bits: Option<String>,
    #[arg(long)]
    pub bidirectional: bool,
    /// Task name for `resources`, e.g. ccripuo or cyclic-riho:4.
    #[arg(long)]
    pub task: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Random cases per correction-table branch.
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flip the minus-channel phase correction; the suite must then fail.
    #[arg(long, hide = true)]
    pub corrupt_table: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(file) => file.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => commands::run(args, &file),
        Command::Sweep(args) => commands::sweep(args, &file),
        Command::Mc(args) => commands::mc(args, &file),
        Command::Channels(args) => commands::channels(args, &file),
        Command::Verify(args) => commands::verify(args, &file),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mgt_volterra::commands::{run, Command, Overrides};
use mgt_volterra::config::{ScenarioConfig, SEED_ENV};
use mgt_volterra::{error_json, EXIT_ERROR, EXIT_FAIL};

#[derive(Parser)]
#[command(name = "mgt-volterra", version, about = "Spectral Volterra solver for the MGT equation and its memory form")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the command's pass tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and write the modal trajectory as CSV.
    Solve(Common),
    /// Compare against the closed-form cubic-root solution.
    OracleCompare(Common),
    /// Estimate regularity indices for one table row.
    VerifyTable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: Option<u8>,
        #[arg(long)]
        row: Option<u8>,
        #[arg(long)]
        base_index: Option<f64>,
    },
    /// Sweep α across the stability threshold.
    StabilitySweep(Common),
    /// Boundary trace to data ratio over an ensemble and several mode counts.
    TraceCheck(Common),
    /// Boundary data to interior regularity.
    BoundaryCheck(Common),
}

fn execute(cli: Cli) -> Result<bool> {
    let mut ov = Overrides::default();
    let (command, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::OracleCompare(c) => (Command::OracleCompare, c),
        Cmd::VerifyTable { common, table, row, base_index } => {
            ov.table = table;
            ov.row = row;
            ov.base_index = base_index;
            (Command::VerifyTable, common)
        }
        Cmd::StabilitySweep(c) => (Command::StabilitySweep, c),
        Cmd::TraceCheck(c) => (Command::TraceCheck, c),
        Cmd::BoundaryCheck(c) => (Command::BoundaryCheck, c),
    };
    ov.tolerance = common.tolerance;
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = ScenarioConfig::load(&common.config)?;
    cfg.apply_seed_env(std::env::var(SEED_ENV).ok().as_deref())?;
    run(command, &cfg, &common.out, &ov)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL as u8),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

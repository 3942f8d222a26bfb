//! Command-line experiment runner for the heat kernel checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::{execute, Session, Subcommand};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Kernel,
    VerifyBounds,
    VerifyTwist,
    VerifyInequalities,
    Report,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Spectrum => Subcommand::Spectrum,
            Command::Kernel => Subcommand::Kernel,
            Command::VerifyBounds => Subcommand::VerifyBounds,
            Command::VerifyTwist => Subcommand::VerifyTwist,
            Command::VerifyInequalities => Subcommand::VerifyInequalities,
            Command::Report => Subcommand::Report,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heatgauss", version, about = "Heat kernel bounds for higher-order Dirichlet operators")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Doubles n and measures drift against the refined mesh.
    #[arg(long)]
    pub refine: bool,
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct RunSummary {
    pub report: report::Report,
    pub written: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }
}

/// Loads the config, runs the subcommand and writes every artifact. Nothing is written on error.
pub fn run(args: &Args) -> CliResult<RunSummary> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    let sub = Subcommand::from(args.command);
    let out = cfg.out.clone();
    let session = Session::new(cfg, args.refine)?;
    let (report, art) = execute(sub, &session)?;
    let mut written = art.write(&out)?;
    let path = out.join(format!("report-{}.csv", sub.name()));
    report.write_csv(&path)?;
    written.push(path);
    Ok(RunSummary { report, written })
}

//! `repgame`: closed-form solvers and experiment drivers.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::RunContext;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "repgame", version, about = "Minimax representations under adversarial downstream tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`, default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pure minimax representation: solution.json, atom_0.csv, worst_f.csv.
    SolvePure,
    /// Mixed minimax representation: solution.json, atom_*.csv,
    /// sigma_f_star.csv, and spectrum.csv when a [sweep] is configured.
    SolveMixed,
    /// Game solver against the closed form on random covariances: ratio.csv.
    Ratio,
    /// Logistic regret against the number of atoms: logistic.csv.
    Logistic,
    /// Optimized mixtures versus PCA on the shapes images: shapes.csv.
    Shapes,
    /// Learning curve of the squared-loss solver: curve.csv.
    Curve,
    /// Small deterministic run of every command.
    Selftest,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::empty(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&out)?;
    let ctx = RunContext { cfg, seed, out };
    match cli.command {
        Command::SolvePure => commands::solve_pure_cmd(&ctx),
        Command::SolveMixed => commands::solve_mixed_cmd(&ctx),
        Command::Ratio => commands::ratio_cmd(&ctx),
        Command::Logistic => commands::logistic_cmd(&ctx),
        Command::Shapes => commands::shapes_cmd(&ctx),
        Command::Curve => commands::curve_cmd(&ctx),
        Command::Selftest => commands::selftest_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

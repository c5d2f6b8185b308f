//! Command-line entry point: gradient checks, synthetic recovery runs, toy
//! forecaster training, metric evaluation, and scene rendering.

mod commands;
mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "depthcast", version, about = "Differentiable view synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the finite-difference gradient suite over every kernel.
    Gradcheck(commands::gradcheck::Args),
    /// Recover depth and poses on a synthetic scene by direct optimization.
    Recover(commands::recover::Args),
    /// Train the toy temporal-aggregation forecaster.
    TamToy(commands::tam_toy::Args),
    /// Evaluate predicted depth maps or trajectories against ground truth.
    Eval(commands::eval::Args),
    /// Render a scene to frames, depth maps, and poses.
    Render(commands::render::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gradcheck(args) => commands::gradcheck::run(args),
        Command::Recover(args) => commands::recover::run(args),
        Command::TamToy(args) => commands::tam_toy::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Render(args) => commands::render::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Helper shared by commands: create the output directory if needed.
pub(crate) fn ensure_out_dir(out: &PathBuf) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

use clap::{Parser, Subcommand};
use subprime_cli::commands::{self, SimulateArgs, SweepArgs, ThresholdsArgs};

/// Two-bank credit market simulator: VaR/ES risk gates, conjugate variance
/// learning, adaptive subsidies, and guarantee policies.
#[derive(Parser)]
#[command(name = "subprime-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the variance-threshold family, ordering verdict, and assumption checks
    Thresholds(ThresholdsArgs),
    /// Run one scenario; write trajectory.csv, beliefs.csv, summary.json, manifest.json
    Simulate(SimulateArgs),
    /// Monte Carlo over a parameter grid; one sweep.csv row per grid point
    Sweep(SweepArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Thresholds(args) => commands::cmd_thresholds(&args),
        Command::Simulate(args) => commands::cmd_simulate(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dskg_cli::{execute, load_config, output, Experiment};

#[derive(Parser)]
#[command(name = "dskg", version, about = "Klein-Gordon on de Sitter backgrounds: simulation and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data with the configured equation and solver.
    Evolve(RunArgs),
    /// Integrate the reduced ODE for the spatial integral and detect blow-up.
    BlowupOde(RunArgs),
    /// Evolve the blow-up equation and compare its spatial integral with the lower envelope.
    BlowupPde(RunArgs),
    /// Compute the certified lifespan lower bound.
    Lifespan(RunArgs),
    /// Construct asymptotic free data and measure the deviation from it.
    Scatter(RunArgs),
    /// Solve the per-mode fundamental system and check its bounds.
    Modes(RunArgs),
    /// Audit the energy balance along a trajectory.
    EnergyAudit(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; the built-in preset is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the data noise, overriding the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 2 when any check fails.
    #[arg(long)]
    check: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Evolve(a) => (Experiment::Evolve, a),
        Command::BlowupOde(a) => (Experiment::BlowupOde, a),
        Command::BlowupPde(a) => (Experiment::BlowupPde, a),
        Command::Lifespan(a) => (Experiment::Lifespan, a),
        Command::Scatter(a) => (Experiment::Scatter, a),
        Command::Modes(a) => (Experiment::Modes, a),
        Command::EnergyAudit(a) => (Experiment::EnergyAudit, a),
    };
    let mut cfg = match load_config(experiment, args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let dir = args.out.unwrap_or_else(|| output::default_directory(&cfg));
    let manifest = match execute(&cfg, &dir) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &manifest.checks {
        println!("{:<28} {:<4} {:.6e}", c.name, if c.passed { "ok" } else { "FAIL" }, c.value);
    }
    for (k, v) in &manifest.summary {
        println!("{k} = {v:.10e}");
    }
    println!("outputs in {}", dir.display());
    if args.check && !manifest.all_passed {
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

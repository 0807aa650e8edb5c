use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oscnet_cli::app::{execute, load_config, output_dir, Command};
use oscnet_cli::CliError;

#[derive(Parser)]
#[command(name = "oscnet", version, about = "Dissipative quantum oscillator networks: synchronization and correlations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file, or `preset:<name>`.
    #[arg(long)]
    config: String,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for a random network source.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve one scenario and write trajectory, measures and summary.
    Simulate(Common),
    /// Run the scenario over the `[sweep]` grid.
    Sweep(Common),
    /// Scan κ_σ and tune the `[tuning]` parameter.
    Tune(Common),
    /// Write the normal-mode table and transform.
    Spectrum(Common),
}

fn run(cmd: Command, args: &Common) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    let dir = output_dir(&cfg, args.out.as_deref());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let written = pool.install(|| execute(cmd, &cfg, &dir))?;
    for name in written {
        println!("{}", dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Tune(a) => (Command::Tune, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
    };
    match run(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

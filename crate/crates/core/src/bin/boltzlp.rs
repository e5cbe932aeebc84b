use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use boltzlp::estimates::BoundId;
use boltzlp::harness::{load_config, run_constants, run_simulate, run_verify, RunOutcome, EXIT_ERROR};

/// Mild-form Boltzmann runs, bound verification and constant tables.
///
/// Set BOLTZLP_THREADS to size the worker pool; 1 runs sequentially.
#[derive(Parser)]
#[command(name = "boltzlp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data and write series.csv.
    Simulate(Common),
    /// Check the a-priori bounds and write records.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Restrict to these bounds (repeatable): ray, decay, n1, n2, gronwall, fixed_point, difference, difference_rate.
        #[arg(long = "lemma", value_name = "ID")]
        lemmas: Vec<String>,
    },
    /// Tabulate the explicit constants and write constants.json.
    Constants(Common),
}

fn run(cli: Cli) -> anyhow::Result<RunOutcome> {
    let (common, lemmas) = match &cli.command {
        Command::Simulate(c) | Command::Constants(c) => (c, &[][..]),
        Command::Verify { common, lemmas } => (common, &lemmas[..]),
    };
    let mut loaded = load_config(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        loaded.override_seed(seed);
    }
    if !lemmas.is_empty() {
        let ids = lemmas
            .iter()
            .map(|s| BoundId::parse(s).ok_or_else(|| anyhow!("unknown bound id `{s}`")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        loaded.override_bounds(ids)?;
    }
    let outcome = match cli.command {
        Command::Simulate(_) => run_simulate(&loaded, &common.out),
        Command::Verify { .. } => run_verify(&loaded, &common.out),
        Command::Constants(_) => run_constants(&loaded, &common.out),
    }?;
    Ok(outcome)
}

fn main() -> ExitCode {
    boltzlp::par::init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

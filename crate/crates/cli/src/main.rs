use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graph_mbo::Result;
use graph_mbo_cli::{run, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "graph-mbo", version, about = "Graph MBO experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Replace the seed list by a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the n grid by a single size.
        #[arg(long)]
        n: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, n, out } => {
            let mut c = ExperimentConfig::load(config)?;
            c.apply(&Overrides { seed, n, out });
            let files = run(&c, |line| println!("{line}"))?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Validate { config } => {
            let kind = ExperimentConfig::load(config)?.validate()?;
            println!("ok: {}", kind.name());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

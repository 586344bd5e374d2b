use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod config;
mod scenarios;

#[derive(Parser)]
#[command(name = "spinwave", version, about = "Heralded four-memory W-state simulations and witness bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV, manifest and plot script to --out.
    Run {
        /// xi-sweep | fringe | decohere | crossed | bounds | thermal | certify | report
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Bound-curve cache: written by `bounds`, read by `certify` and `decohere`.
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
    },
    /// Check a config file and print it with all defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Validate { config } => {
            let (c, warnings) = config::load(&config)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", c.echo());
        }
        Command::Run {
            scenario,
            config,
            out,
            seed,
            bounds_cache,
        } => {
            if !scenarios::SCENARIOS.contains(&scenario.as_str()) {
                anyhow::bail!(
                    "unknown scenario `{scenario}` (expected one of {})",
                    scenarios::SCENARIOS.join(", ")
                );
            }
            let (mut c, warnings) = config::load(&config)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            let mut run = scenarios::Run::new(&c, &out, bounds_cache.as_deref());
            let res = scenarios::run(&scenario, &mut run);
            for line in &run.log {
                println!("{line}");
            }
            res?;
            println!("{scenario}: outputs written to {}", out.display());
        }
    }
    Ok(())
}

//! `ehrdrift` command-line interface.
//!
//! Exit status: 0 success, 2 usage, 3 config, 4 ingestion, 5 runtime.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ehrdrift::commands::{self, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "ehrdrift", version, about = "Temporal-drift experiments on ICU cohorts")]
struct Cli {
    /// Config file for the subcommand (synth, run or report).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "ehrdrift-out")]
    out: PathBuf,
    /// Overrides the config's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output bytes do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort.
    Synth,
    /// Run the experiment grid.
    Run {
        /// Only evaluate this test year.
        #[arg(long)]
        test_year: Option<i32>,
        /// Only run this repeat index.
        #[arg(long)]
        repeat: Option<u32>,
    },
    /// Summarise results.csv and draw charts.
    Report {
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Check cohort CSVs and an aggregation map.
    Validate {
        /// Directory holding stays.csv, events.csv and aggregation_map.csv.
        #[arg(long, default_value = ".")]
        input: PathBuf,
        #[arg(long)]
        stays: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Synth => {
            for path in commands::synth(config, &cli.out, cli.seed)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Run { test_year, repeat } => {
            let opts = RunOptions {
                seed: cli.seed,
                jobs: cli.jobs,
                test_year,
                repeat,
            };
            for line in commands::run(config, &cli.out, opts)? {
                println!("{line}");
            }
        }
        Command::Report { results } => {
            for line in commands::report(config, results.as_deref(), &cli.out)? {
                println!("{line}");
            }
        }
        Command::Validate {
            input,
            stays,
            events,
            map,
        } => {
            let stays = stays.unwrap_or_else(|| input.join("stays.csv"));
            let events = events.unwrap_or_else(|| input.join("events.csv"));
            let map = map.unwrap_or_else(|| input.join("aggregation_map.csv"));
            let v = commands::validate(&stays, &events, &map)?;
            print!("{v}");
            for w in v.warnings() {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use treetrace_cli::config::{ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "treetrace", version, about = "Run treetrace experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV table and JSON sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the experiment kinds with their columns and statistics.
    ListExperiments,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, treetrace_cli::CliError> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let cfg = ExperimentConfig::from_path(&config, seed)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let result = treetrace_cli::run(&cfg, &dir, threads)?;
            println!("{}: {} rows -> {}", cfg.name, result.table.rows.len(), result.csv.display());
            for (name, value) in &result.table.summary {
                println!("  {name} = {value:e}");
            }
            for c in &result.checks {
                let bounds = match (c.min, c.max) {
                    (Some(lo), Some(hi)) => format!("in [{lo:e}, {hi:e}]"),
                    (Some(lo), None) => format!(">= {lo:e}"),
                    (None, Some(hi)) => format!("<= {hi:e}"),
                    (None, None) => String::new(),
                };
                let value = c.value.map_or("missing".to_string(), |v| format!("{v:e}"));
                println!("{} {} = {value} {bounds}", if c.passed { "PASS" } else { "FAIL" }, c.stat);
            }
            Ok(if result.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config, None)?;
            println!("{}: valid {} config", cfg.name, cfg.kind.name());
            Ok(ExitCode::SUCCESS)
        }
        Command::ListExperiments => {
            for k in Kind::ALL {
                println!("{:<24} {}", k.name(), k.description());
                println!("{:<24} columns: {}", "", treetrace_cli::experiments::columns(k).join(", "));
                println!("{:<24} statistics: {}", "", k.stats().join(", "));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

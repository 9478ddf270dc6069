use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decopt::harness::{
    default_out_dir, run_experiment, sweep, verify, write_outputs, ExperimentConfig, Suite, SweepAxis, OUT_DIR_ENV,
};
use decopt::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_SUITE: u8 = 4;

#[derive(Parser)]
#[command(name = "decopt", version, about = "Decentralized non-convex optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write per-replicate CSVs plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run a built-in verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Run a config once per value of one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// algorithm, graph, batch_size, n or heterogeneity.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::FAILURE,
                _ => ExitCode::from(EXIT_VALIDATION),
            }
        }
    }
}

fn execute(command: Command) -> decopt::Result<ExitCode> {
    match command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(default_out_dir);
            let summary = run_experiment(&cfg)?;
            write_outputs(&summary, &dir)?;
            println!(
                "{}: {} replicate(s), median final gap {:.3e}, {} diverged -> {}",
                summary.algorithm.name(),
                summary.replicates,
                summary.median_final_gap,
                summary.diverged,
                dir.display()
            );
            if summary.unexpected_divergence {
                eprintln!("unexpected divergence");
                return Ok(ExitCode::from(EXIT_DIVERGENCE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let checks = verify(Suite::parse(&suite)?)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.pass);
            }
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_SUITE) })
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(default_out_dir);
            let entries = sweep(&cfg, SweepAxis::parse(&axis)?, &values, Some(&dir))?;
            let mut unexpected = false;
            for e in &entries {
                println!(
                    "{}={}: median final gap {:.3e}, {} diverged",
                    axis, e.value, e.summary.median_final_gap, e.summary.diverged
                );
                unexpected |= e.summary.unexpected_divergence;
            }
            Ok(if unexpected { ExitCode::from(EXIT_DIVERGENCE) } else { ExitCode::SUCCESS })
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bcl_cli::config::{build_scenario, load_config};
use bcl_cli::runner::{run_scenario, statement_table, OutputFormat};
use bcl_cli::RunError;

/// Scenario-driven verification of finite-sample posterior concentration
/// bounds on finite models.
#[derive(Parser)]
#[command(name = "bcl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verification listed in a scenario config.
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: String,
        /// Output directory for the report files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Master seed; overrides the config (env BCL_SEED is the
        /// lowest-priority source).
        #[arg(long)]
        seed: Option<u64>,
        /// Replication count; overrides the per-statement reps.
        #[arg(long)]
        reps: Option<u64>,
        /// Worker threads for the replication loops (speed only; outputs are
        /// identical at any thread count).
        #[arg(long)]
        threads: Option<usize>,
        /// Report files to write.
        #[arg(long, default_value = "both")]
        format: OutputFormat,
    },
    /// Print the table of verifiable statement ids.
    ListStatements,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<bool, RunError> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListStatements => {
            for (id, desc) in statement_table() {
                println!("{id:<20} {desc}");
            }
            Ok(true)
        }
        Command::Run {
            config,
            out_dir,
            seed,
            reps,
            threads,
            format,
        } => {
            let cfg = load_config(&config)?;
            let scenario = build_scenario(cfg, seed, reps)?;
            let out_dir = out_dir
                .or_else(|| scenario.config.out_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));

            let run = || run_scenario(&scenario, &out_dir, format);
            let outcome = match threads {
                Some(t) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(t)
                        .build()
                        .map_err(|e| RunError::Io(e.to_string()))?;
                    pool.install(run)?
                }
                None => run()?,
            };
            for r in &outcome.reports {
                let status = if r.vacuous {
                    "VACUOUS"
                } else if r.passed {
                    "pass"
                } else {
                    "FAIL"
                };
                println!(
                    "{:<20} {:<28} value={:.6e} bound={:.6e} slack={:.6e} [{status}]",
                    r.statement_id, r.detail, r.empirical, r.bound, r.mc_slack
                );
            }
            Ok(outcome.all_passed)
        }
    }
}

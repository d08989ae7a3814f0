use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deom_cli::run::{resume, run, RunOptions};
use deom_cli::validate::{check_bath, validate};
use deom_cli::{parse_config, CliError, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "deom", version, about = "Dissipaton-equation-of-motion runs for charged systems in moving frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a configuration, writing timeseries.csv and manifest.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.path).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Snapshot stride (overrides hierarchy.stride).
        #[arg(long)]
        stride: Option<u64>,
        #[arg(long, hide = true)]
        stop_after_steps: Option<u64>,
    },
    /// Run the oracle and self-consistency checks; prints a JSON report.
    Validate { config: PathBuf },
    /// Check the bath alone: spectral symmetry, time reversal and fit quality.
    CheckBath { config: PathBuf },
    /// Continue a run from its checkpoint.
    Resume {
        checkpoint: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, hide = true)]
        stop_after_steps: Option<u64>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DEOM_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("DEOM_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(CliError::Config("DEOM_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn print_report(report: &deom_cli::validate::ValidationReport) {
    println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("report serialises"));
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, output, stride, stop_after_steps } => {
            let cfg = parse_config(&config)?;
            let outcome = run(cfg, &RunOptions { output, stride, stop_after: stop_after_steps })?;
            log::info!("{} steps written to {}", outcome.steps, outcome.dir.display());
        }
        Command::Validate { config } => print_report(&validate(&parse_config(&config)?)?),
        Command::CheckBath { config } => print_report(&check_bath(&parse_config(&config)?)?),
        Command::Resume { checkpoint, output, stop_after_steps } => {
            let outcome = resume(&checkpoint, &RunOptions { output, stride: None, stop_after: stop_after_steps })?;
            log::info!("{} steps written to {}", outcome.steps, outcome.dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

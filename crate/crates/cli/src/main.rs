use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use rsma_sgf_cli::experiment::{load_config, preset, Overrides};
use rsma_sgf_cli::output::Format;
use rsma_sgf_cli::validation::{render_report, validate, Budget};
use rsma_sgf_cli::{run_to_bytes, with_workers, CliError};

#[derive(Debug, Parser)]
#[command(name = "rsma-sgf", version, about = "Semi-grant-free rate-splitting outage experiments")]
struct Cli {
    /// Worker threads for Monte Carlo runs (defaults to all cores).
    #[arg(long, env = "RSMA_SGF_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset or a config file and write the results.
    Run {
        /// Preset name: fig3, fig4, fig5, fig6, fig7, zone, fig2.
        #[arg(value_name = "PRESET", conflicts_with_all = ["preset", "config"])]
        name: Option<String>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// TOML experiment description.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Omit the generation timestamp so output is byte-reproducible.
        #[arg(long)]
        no_timestamp: bool,
        /// Received GBU SNR in dB (zone runs).
        #[arg(long, allow_negative_numbers = true)]
        p0g0_db: Option<f64>,
        /// Received GFU SNR in dB (zone runs).
        #[arg(long, allow_negative_numbers = true)]
        psgk_db: Option<f64>,
        /// Grid points per axis (zone runs).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use reduced sample sizes.
        #[arg(long)]
        quick: bool,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { name, preset: preset_flag, config, trials, seed, out, format, no_timestamp, p0g0_db, psgk_db, grid } => {
            let mut experiment = match (name.or(preset_flag), config) {
                (Some(n), None) => preset(&n)?,
                (None, Some(path)) => load_config(&path)?,
                (None, None) => return Err(CliError::Usage("give a preset name or --config".into())),
                (Some(_), Some(_)) => return Err(CliError::Usage("give either a preset or --config, not both".into())),
            };
            experiment.apply(&Overrides { trials, seed, p0g0_db, psgk_db, grid })?;
            let timestamp = if no_timestamp {
                None
            } else {
                Some(SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
            };
            let bytes = with_workers(cli.workers, || run_to_bytes(&experiment, format, timestamp))??;
            write_output(out.as_ref(), &bytes)?;
            Ok(true)
        }
        Command::Validate { seed, quick, out } => {
            let budget = if quick { Budget::quick() } else { Budget::full() };
            let reports = with_workers(cli.workers, || validate(&budget, seed))?;
            let text = render_report(&reports);
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(path, &text)?;
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

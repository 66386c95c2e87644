use std::io::Write;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use pva_cli::config::ExperimentConfig;
use pva_cli::error::CliError;
use pva_cli::report::fit_sweep_csv;
use pva_cli::runner::{covariogram_csv, resolve_threads, run_sweep, sweep_csv, theory_csv};
use pva_cli::selftest::run_selftest;

/// Poisson-Voronoi approximation experiments.
#[derive(Parser)]
#[command(name = "pva", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; defaults apply when omitted
    #[arg(long)]
    config: Option<String>,
    /// override master_seed
    #[arg(long)]
    seed: Option<u64>,
    /// output file; stdout when omitted
    #[arg(long)]
    out: Option<String>,
    /// worker threads (beats PVA_THREADS and config)
    #[arg(long)]
    threads: Option<usize>,
    /// print the effective config as JSON and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications at a single intensity
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// intensity (defaults to the first grid entry)
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run the full lambda grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Theoretical predictions only, no sampling
    Theory {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export covariogram profiles as CSV
    Covariogram {
        #[command(flatten)]
        common: CommonArgs,
        /// number of radii in the profile grid
        #[arg(long, default_value_t = 64)]
        radii: usize,
    },
    /// Fit power laws to a sweep CSV
    Fit {
        /// sweep CSV produced by `pva sweep`
        #[arg(long)]
        input: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run built-in kernel and oracle checks
    Selftest {
        /// override moment order (unused; accepted for interface parity)
        #[arg(long)]
        n: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn write_output(common_out: &Option<String>, default_path: Option<&str>, text: &str) -> Result<(), CliError> {
    match common_out.as_deref().or(default_path) {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::io(format!("writing {path}: {e}"))),
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(|e| CliError::io(e.to_string()))
        }
    }
}

fn timestamp_comment(config: &ExperimentConfig) -> String {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("generated at unix {now}, seed {}", config.master_seed)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, lambda } => {
            let mut config = load_config(&common)?;
            if let Some(l) = lambda {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(CliError::config("--lambda must be positive"));
                }
                config.lambda_grid = vec![l];
            } else {
                config.lambda_grid.truncate(1);
            }
            if common.print_config {
                println!("{}", config.to_pretty_json());
                return Ok(());
            }
            let threads = resolve_threads(common.threads, &config)?;
            let rows = run_sweep(&config, threads)?;
            write_output(&common.out, None, &sweep_csv(&rows, Some(&timestamp_comment(&config))))
        }
        Command::Sweep { common } => {
            let config = load_config(&common)?;
            if common.print_config {
                println!("{}", config.to_pretty_json());
                return Ok(());
            }
            let threads = resolve_threads(common.threads, &config)?;
            let rows = run_sweep(&config, threads)?;
            write_output(
                &common.out,
                Some(&config.output_path.clone()),
                &sweep_csv(&rows, Some(&timestamp_comment(&config))),
            )
        }
        Command::Theory { common } => {
            let config = load_config(&common)?;
            if common.print_config {
                println!("{}", config.to_pretty_json());
                return Ok(());
            }
            write_output(&common.out, None, &theory_csv(&config)?)
        }
        Command::Covariogram { common, radii } => {
            let config = load_config(&common)?;
            if common.print_config {
                println!("{}", config.to_pretty_json());
                return Ok(());
            }
            write_output(&common.out, None, &covariogram_csv(&config, radii)?)
        }
        Command::Fit { input, out } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::io(format!("reading {input}: {e}")))?;
            let report = fit_sweep_csv(&text)?;
            write_output(&out, None, &(report.to_pretty_json() + "\n"))
        }
        Command::Selftest { n: _ } => {
            let checks = run_selftest()?;
            let mut all_ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
                all_ok &= c.passed;
            }
            if all_ok {
                Ok(())
            } else {
                Err(CliError::numeric("selftest failed"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.code())
        }
    }
}

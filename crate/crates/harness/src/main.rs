use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rculmc_harness::compare::compare_files;
use rculmc_harness::config::{ExperimentConfig, OracleConfig};
use rculmc_harness::presets::{preset, PRESETS};
use rculmc_harness::run::{run, RunOptions};
use rculmc_harness::validate::{validate, EstimateTarget};
use rculmc_harness::{oracle, HarnessError, Result};

/// Underdamped Langevin samplers: experiments, comparisons and oracles.
#[derive(Parser)]
#[command(name = "rculmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSVs and manifest.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (default: $RCULMC_WORKERS, else all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare cost-error CSVs on their shared grid.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Report stepsize admissibility and iteration estimates.
    Validate {
        #[command(flatten)]
        source: Source,
        /// Target accuracy for the iteration estimates.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Initial distance assumed by the iteration estimates.
        #[arg(long, default_value_t = 1.0)]
        w0: f64,
    },
    /// Evaluate an analytic reference.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Print a preset's config as TOML.
    Preset { name: String },
}

#[derive(Args)]
struct Source {
    /// TOML experiment config.
    config: Option<PathBuf>,
    /// Use a named preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Step-kernel mean coefficients and covariance.
    Moments {
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Optimal coordinate distribution for directional constants L_i.
    Phi {
        #[arg(long, value_delimiter = ',', required = true)]
        l: Vec<f64>,
    },
    /// RC-ULMC second-moment recursion on a standard Gaussian, as CSV.
    Prop5 {
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 1e-9)]
        h: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 10_000)]
        stride: u64,
    },
    /// Exact ULMC law on a diagonal Gaussian target.
    Gaussian {
        #[arg(long, value_delimiter = ',', required = true)]
        diag: Vec<f64>,
        /// Initial mean of x (zero when omitted).
        #[arg(long, value_delimiter = ',')]
        shift: Option<Vec<f64>>,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        steps: u64,
    },
}

impl Source {
    fn load(&self) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        match (&self.config, &self.preset) {
            (Some(path), None) => {
                let base = path.parent().map(Path::to_path_buf);
                Ok((ExperimentConfig::load(path)?, base))
            }
            (None, Some(name)) => Ok((preset(name)?, None)),
            _ => Err(HarnessError::Usage(format!(
                "give a config file or --preset (one of: {})",
                PRESETS.join(", ")
            ))),
        }
    }
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("rculmc: stdout: {e}");
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            source,
            out,
            seed,
            trials,
            workers,
        } => {
            let (mut config, base_dir) = source.load()?;
            if let Some(s) = seed {
                config.master_seed = s;
            }
            if trials.is_some() {
                config.trials = trials;
            }
            let outcome = run(
                &config,
                &RunOptions {
                    output_dir: out,
                    workers,
                    base_dir,
                },
            )?;
            for p in &outcome.csv_paths {
                emit(&format!("wrote {}\n", p.display()));
            }
            emit(&format!("wrote {}\n", outcome.manifest_path.display()));
        }
        Command::Compare { files } => emit(&compare_files(&files)?.to_string()),
        Command::Validate { source, eps, w0 } => {
            let (config, base) = source.load()?;
            emit(&validate(&config, base.as_deref(), EstimateTarget { eps, w0 })?.to_string());
        }
        Command::Oracle(o) => match o {
            OracleCommand::Moments { h, gamma } => emit(&oracle::moments_table(h, gamma)?),
            OracleCommand::Phi { l } => emit(&oracle::phi_table(&l)?),
            OracleCommand::Prop5 { dim, h, steps, stride } => {
                if stride == 0 {
                    return Err(HarnessError::Usage("--stride must be positive".into()));
                }
                emit(&oracle::prop5_csv(&OracleConfig { dim, h, steps, stride })?)
            }
            OracleCommand::Gaussian {
                diag,
                shift,
                h,
                gamma,
                steps,
            } => {
                let shift = shift.unwrap_or_else(|| vec![0.0; diag.len()]);
                emit(&oracle::gaussian_table(&diag, &shift, h, gamma, steps)?)
            }
        },
        Command::Preset { name } => emit(&preset(&name)?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rculmc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

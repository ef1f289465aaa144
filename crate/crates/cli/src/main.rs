//! `series-unfold`: reproducible unfolding experiments from the command line.
//!
//! Every run writes its effective configuration to `config.toml` in the
//! output directory; passing that file back with `--config` reproduces the
//! outputs exactly.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use series_unfold::ErrorMode;

use commands::Output;
use config::{PolicyKeys, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("divergence: {0}")]
    Diverged(String),
    #[error(transparent)]
    Core(#[from] series_unfold::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use series_unfold::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::Core(e) => match e {
                E::Config(_) | E::Parse(_) => 2,
                E::Io(_) => 3,
                E::Divergence { .. } | E::DivisionBlowup { .. } => 4,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "series-unfold",
    version,
    about = "Series-expansion unfolding of binned spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with one table per subcommand; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed of the event generator, response simulation and Poisson noise.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Maximum number of series terms, counting the zeroth.
    #[arg(long, global = true)]
    max_iters: Option<usize>,

    /// Stop once the relative statistical error of the estimate exceeds this.
    #[arg(long, global = true)]
    noise_threshold: Option<f64>,

    /// exact | gaussian
    #[arg(long, global = true)]
    error_mode: Option<ErrorMode>,

    /// identity | parity | gaussian:SIGMA
    #[arg(long, global = true)]
    smoother: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Fold a known truth with a kernel, add Poisson noise and recover it.
    Deconvolve,
    /// Unfold a measured histogram with a response matrix.
    Unfold,
    /// Check the Fourier convergence condition of a kernel.
    Diagnose,
    /// Trace the Cauchy root index of the series.
    CauchyTest,
    /// Simulate two-photon pion decays and unfold the photon spectrum.
    SimulatePi0,
    /// Largest entry of (I - A)^n over a range of orders.
    VerifyCondition,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Deconvolve => "deconvolve",
            Command::Unfold => "unfold",
            Command::Diagnose => "diagnose",
            Command::CauchyTest => "cauchy-test",
            Command::SimulatePi0 => "simulate-pi0",
            Command::VerifyCondition => "verify-condition",
        }
    }
}

fn apply_policy(section: &mut impl PolicyKeys, cli: &Cli) {
    let (noise_threshold, max_iters, _, error_mode, smoother) = section.policy_mut();
    if let Some(v) = cli.max_iters {
        *max_iters = v;
    }
    if let Some(v) = cli.noise_threshold {
        *noise_threshold = v;
    }
    if let Some(v) = cli.error_mode {
        *error_mode = v;
    }
    if let Some(v) = &cli.smoother {
        *smoother = v.clone();
    }
}

fn reject(cli: &Cli, flags: &[(&str, bool)]) -> Result<(), CliError> {
    for (name, given) in flags {
        if *given {
            return Err(CliError::Config(format!(
                "--{name} does not apply to {}",
                cli.command.name()
            )));
        }
    }
    Ok(())
}

/// Folds command-line overrides into the configuration of the chosen command.
fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let policy_flags = [
        ("max-iters", cli.max_iters.is_some()),
        ("noise-threshold", cli.noise_threshold.is_some()),
        ("error-mode", cli.error_mode.is_some()),
    ];
    match cli.command {
        Command::Deconvolve => {
            if let Some(s) = cli.seed {
                cfg.deconvolve.seed = s;
            }
            apply_policy(&mut cfg.deconvolve, cli);
        }
        Command::Unfold => {
            reject(cli, &[("seed", cli.seed.is_some())])?;
            apply_policy(&mut cfg.unfold, cli);
        }
        Command::SimulatePi0 => {
            if let Some(s) = cli.seed {
                cfg.simulate_pi0.seed = s;
            }
            apply_policy(&mut cfg.simulate_pi0, cli);
        }
        Command::CauchyTest => {
            reject(cli, &policy_flags)?;
            if let Some(s) = cli.seed {
                cfg.simulate_pi0.seed = s;
            }
            if let Some(v) = &cli.smoother {
                cfg.cauchy_test.smoother = v.clone();
            }
        }
        Command::VerifyCondition => {
            reject(cli, &policy_flags)?;
            reject(cli, &[("seed", cli.seed.is_some())])?;
            if let Some(v) = &cli.smoother {
                cfg.verify_condition.smoother = v.clone();
            }
        }
        Command::Diagnose => {
            reject(cli, &policy_flags)?;
            reject(
                cli,
                &[("seed", cli.seed.is_some()), ("smoother", cli.smoother.is_some())],
            )?;
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let out = Output::create(&cli.out)?;
    out.text("config.toml", &cfg.to_toml()?)?;
    match cli.command {
        Command::Deconvolve => commands::deconvolve(&cfg.deconvolve, &out),
        Command::Unfold => commands::unfold(&cfg.unfold, &out),
        Command::Diagnose => commands::diagnose(&cfg.diagnose, &out),
        Command::CauchyTest => commands::cauchy_test(&cfg, &out),
        Command::SimulatePi0 => commands::simulate_pi0(&cfg.simulate_pi0, &out),
        Command::VerifyCondition => commands::verify(&cfg.verify_condition, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

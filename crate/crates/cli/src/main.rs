//! `sqfi`: command-line front end for squeezed-reservoir phase estimation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sqfi_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    /// 0 ok, 1 usage/config, 2 numerical failure, 3 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
            CliError::VerificationFailed => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sqfi",
    version,
    about = "Qubit phase estimation in a squeezed thermal reservoir"
)]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Echo the effective configuration to stderr before running.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantum Fisher information by every route at one parameter point.
    #[command(allow_negative_numbers = true)]
    Qfi(QfiArgs),
    /// Integrate the master equation and write the trajectory as CSV.
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Regenerate the data behind one of the figures.
    #[command(allow_negative_numbers = true)]
    Figure(FigureArgs),
    /// Run the cross-check suite.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ReservoirArgs {
    /// Spectral width λ/γ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Squeezing magnitude.
    #[arg(long)]
    r: Option<f64>,
    /// Squeezing phase (radians).
    #[arg(long)]
    theta: Option<f64>,
    /// Encoded phase (radians).
    #[arg(long)]
    phi: Option<f64>,
    /// Temperature kT/ω₀.
    #[arg(long = "kT")]
    kt: Option<f64>,
    /// nonMarkovian or markovian.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct QfiArgs {
    /// Dimensionless time γt.
    #[arg(long)]
    gamma_t: Option<f64>,
    #[command(flatten)]
    reservoir: ReservoirArgs,
    /// Repetitions for the Cramér–Rao bound.
    #[arg(long)]
    nu: Option<u64>,
    /// Also write a single-row CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    reservoir: ReservoirArgs,
    /// RK4 step in units of 1/γ.
    #[arg(long)]
    dt: Option<f64>,
    /// Final γt.
    #[arg(long)]
    t_end: Option<f64>,
    /// Keep every n-th step.
    #[arg(long)]
    stride: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// One of fig2a, fig2b, fig3a, fig3b, fig4a, fig4b, fig4c, fig4d, fig5, fig6.
    id: String,
    /// Samples per continuous axis.
    #[arg(long)]
    points: Option<usize>,
    /// Directory for `<id>.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write `<id>_plot.py`.
    #[arg(long)]
    plot_script: bool,
    /// Override the preset spectral width λ/γ.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Refinement factor for the scan grids.
    #[arg(long)]
    grid_density: Option<usize>,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

fn parse_mode(mode: &Option<String>) -> Result<Option<sqfi_core::EvolutionMode>, CliError> {
    mode.as_deref()
        .map(|m| {
            m.parse()
                .map_err(|e: sqfi_core::Error| CliError::Usage(e.to_string()))
        })
        .transpose()
}

impl ReservoirArgs {
    fn to_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            lambda: self.lambda,
            r: self.r,
            theta: self.theta,
            phi: self.phi,
            kt: self.kt,
            mode: parse_mode(&self.mode)?,
            ..Default::default()
        })
    }
}

fn flag_config(command: &Command) -> Result<RunConfig, CliError> {
    Ok(match command {
        Command::Qfi(a) => RunConfig {
            gamma_t: a.gamma_t,
            nu: a.nu,
            csv: a.csv.clone(),
            ..a.reservoir.to_config()?
        },
        Command::Evolve(a) => RunConfig {
            dt: a.dt,
            t_end: a.t_end,
            stride: a.stride,
            output: a.output.clone(),
            ..a.reservoir.to_config()?
        },
        Command::Figure(a) => RunConfig {
            points: a.points,
            out_dir: a.out_dir.clone(),
            lambda: a.lambda,
            ..Default::default()
        },
        Command::Verify(a) => RunConfig {
            grid_density: a.grid_density,
            ..Default::default()
        },
    })
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("QFI_THREADS") {
        let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "QFI_THREADS must be a positive integer, got '{raw}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let cfg = commands::with_defaults(&cli.command, file.overlay(flag_config(&cli.command)?));
    if cli.print_config {
        eprint!("{}", cfg.render());
    }
    match &cli.command {
        Command::Qfi(_) => commands::cmd_qfi(&cfg),
        Command::Evolve(_) => commands::cmd_evolve(&cfg),
        Command::Figure(a) => commands::cmd_figure(&a.id, a.plot_script, &cfg),
        Command::Verify(a) => commands::cmd_verify(&cfg, a.inject_fault.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerificationFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run 'sqfi --help' for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

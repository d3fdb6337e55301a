//! Command-line runner for squeezer sweeps, optimisation and checks.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Overrides, RunConfig};

/// Environment variable that fixes the worker thread count.
const THREADS_ENV: &str = "TELESQUEEZE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("tolerance violated: {0}")]
    Tolerance(String),
    #[error(transparent)]
    Core(#[from] telesqueeze::Error),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    /// Process exit status of this error.
    pub fn exit_code(&self) -> u8 {
        use telesqueeze::Error as E;
        match self {
            CliError::Config(_) => 4,
            CliError::Tolerance(_) => 3,
            CliError::Core(E::Infeasible(_)) => 2,
            CliError::Core(E::Accuracy(_) | E::Truncation { .. }) => 3,
            CliError::Core(E::Domain(_) | E::DegenerateCircuit(_) | E::SingularGain(_)) => 4,
            CliError::Other(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "telesqueeze", version, about = "Teleportation-based squeezer simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key-value config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Comma-separated list of PS, BS, BSPS, BAS.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Resource squeezing in dB, comma-separated for sweeps.
    #[arg(long, global = true, allow_hyphen_values = true)]
    resource_db: Option<String>,
    #[arg(long, global = true)]
    eta_s: Option<f64>,
    #[arg(long, global = true)]
    eta_h: Option<f64>,
    /// vacuum or single-photon.
    #[arg(long, global = true)]
    state: Option<String>,
    /// Target squeezing 10 log10(s^2) in dB.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s_db: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    s_db_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    s_db_max: Option<f64>,
    #[arg(long, global = true)]
    s_db_step: Option<f64>,
    /// Comma-separated sweep metrics.
    #[arg(long, global = true)]
    metrics: Option<String>,
    /// fidelity or total-noise.
    #[arg(long, global = true)]
    objective: Option<String>,
    #[arg(long, global = true)]
    fock_dim: Option<usize>,
    /// Gauss-Hermite order of fidelity objectives.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Gauss-Hermite order of the density-matrix reconstruction.
    #[arg(long, global = true)]
    fock_quad_order: Option<usize>,
    /// Number of random configs of the oracle check.
    #[arg(long, global = true)]
    grid_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metrics along the target squeezing axis.
    Sweep,
    /// Optimal configuration at one target squeezing.
    Optimize,
    /// Closed-form noise against circuit propagation.
    OracleCheck,
    /// Photon-number distribution of the output state.
    Photostat {
        /// Noiseless channel instead of an optimised squeezer.
        #[arg(long)]
        ideal: bool,
    },
    /// Entanglement-breaking threshold of optimal configurations.
    Threshold,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            variant: self.variant.clone(),
            state: self.state.clone(),
            resource_db: self.resource_db.clone(),
            eta_s: self.eta_s,
            eta_h: self.eta_h,
            s_db: self.s_db,
            s_db_min: self.s_db_min,
            s_db_max: self.s_db_max,
            s_db_step: self.s_db_step,
            metrics: self.metrics.clone(),
            objective: self.objective.clone(),
            seed: self.seed,
            quad_order: self.quad_order,
            fock_dim: self.fock_dim,
            fock_quad_order: self.fock_quad_order,
            grid_size: self.grid_size,
            format: self.format.clone(),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_ENV} = '{value}' is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(e.into()))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(file, cli.common.overrides())?;
    let text = match &cli.command {
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Optimize => commands::optimize(&cfg)?,
        Command::OracleCheck => commands::oracle_check(&cfg)?.0,
        Command::Photostat { ideal } => commands::photostat(&cfg, *ideal)?,
        Command::Threshold => commands::threshold(&cfg)?,
    };
    output::emit(&text, cli.common.out.as_deref())
}

/// Parses `args` (program name first) and runs the selected command.
/// Help and version requests print and succeed.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.trim_end().trim_start_matches("error: ");
            return Err(CliError::Config(text.to_string()));
        }
    };
    execute(&cli)
}

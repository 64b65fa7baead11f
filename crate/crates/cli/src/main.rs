mod commands;
mod config;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imi_core::Error;

/// Exit codes.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_ACCURACY: u8 = 4;
pub const EXIT_GATE: u8 = 5;

#[derive(Parser)]
#[command(name = "imi", version, about = "Correlation, level crossing and outage statistics of the IMI of Rayleigh fading channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form statistics over the configured lags, SNRs and thresholds.
    Analytic(Common),
    /// Empirical statistics from simulated traces.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the first realization's traces in the binary dump format.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Analytic against empirical values; fails when a reliable row is over budget.
    Compare {
        #[command(flatten)]
        common: Common,
        /// `rel=X[,abs=Y]`
        #[arg(long, default_value = "rel=0.05")]
        budget: String,
        /// Use dumped traces (one per subchannel) instead of simulating.
        #[arg(long)]
        replay: Vec<PathBuf>,
    },
    /// The small-ϱ expansion table of the high-SNR OSTBC coefficient.
    Table1 {
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Format(_) => EXIT_FORMAT,
            Error::Accuracy { .. } => EXIT_ACCURACY,
            Error::Io(_) => EXIT_USAGE,
            Error::Domain { .. } | Error::Range { .. } | Error::Config(_) | Error::Resource(_) => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("IMI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Failure::new(EXIT_USAGE, format!("IMI_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Analytic(c) => {
            let sf = commands::load(&c.scenario, c.seed)?;
            commands::analytic(&sf, &c.out)
        }
        Command::Simulate { common: c, dump } => {
            let sf = commands::load(&c.scenario, c.seed)?;
            commands::simulate(&sf, &c.out, dump.as_deref())
        }
        Command::Compare { common: c, budget, replay } => {
            let budget = commands::Budget::parse(&budget)?;
            let sf = commands::load(&c.scenario, c.seed)?;
            commands::compare(&sf, &c.out, budget, &replay)
        }
        Command::Table1 { out } => commands::table1(&out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("imi: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

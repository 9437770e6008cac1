mod cmd;
mod output;
mod spec_file;

use std::fmt;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

/// Rate-distortion curves and test channels for remote Gaussian sources
/// with decoder side information.
#[derive(Debug, Parser)]
#[command(name = "remote-rdf", version)]
struct Cli {
    /// Report rates in bits instead of nats (curve output always carries both).
    #[arg(long, global = true)]
    bits: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep R(Δ) over a grid of distortions.
    Curve {
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build the optimal test channel at one distortion.
    Channel {
        spec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check the channel structurally and by Monte Carlo simulation.
    Verify {
        spec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Add this amount to H[0,0] before verifying.
        #[arg(long, hide = true, allow_negative_numbers = true)]
        perturb_gain: Option<f64>,
    },
    /// Compare water-filling against the brute-force grid search (n_x = n_s ≤ 2).
    Oracle {
        spec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Grid points per eigenvalue axis.
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Tabulate the scalar side-information channel against the additive-noise form.
    PriorChannel {
        /// Conditional variance of X given Y.
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Either an explicit list or an evenly spaced range of distortions.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Comma-separated distortions, reported in the given order.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
          conflicts_with_all = ["delta_min", "delta_max", "points"])]
    delta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

impl GridArgs {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        if !self.delta.is_empty() {
            return Ok(self.delta.clone());
        }
        let (Some(lo), Some(hi), Some(n)) = (self.delta_min, self.delta_max, self.points) else {
            return Err(CliError::new(
                "give either --delta or all of --delta-min, --delta-max and --points",
            ));
        };
        if n == 0 {
            return Err(CliError::new("--points must be at least 1"));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(CliError::new(format!(
                "invalid range: --delta-min {lo} --delta-max {hi}"
            )));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect())
    }
}

/// Input or configuration failure; exits with status 1.
#[derive(Debug, Clone)]
pub struct CliError {
    pub message: String,
}

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<remote_rdf::Error> for CliError {
    fn from(e: remote_rdf::Error) -> Self {
        CliError::new(format!("{}: {e}", e.code()))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(format!("write failed: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::new(format!("write failed: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(format!("write failed: {e}"))
    }
}

/// Completed-run status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some grid points failed.
    Partial,
    /// A verification or comparison did not pass.
    Failed,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Partial => 2,
            Status::Failed => 3,
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    let units = output::Units::new(cli.bits);
    match cli.command {
        Command::Curve { spec, grid, format } => {
            let loaded = spec_file::load(&spec)?;
            cmd::curve::run(&loaded, &grid.resolve()?, format, out)
        }
        Command::Channel {
            spec,
            delta,
            format,
        } => cmd::channel::run(&spec_file::load(&spec)?, delta, units, format, out),
        Command::Verify {
            spec,
            delta,
            samples,
            seed,
            format,
            perturb_gain,
        } => {
            let opts = cmd::verify::Options {
                delta,
                samples,
                seed,
                perturb_gain,
            };
            cmd::verify::run(&spec_file::load(&spec)?, &opts, units, format, out)
        }
        Command::Oracle {
            spec,
            delta,
            resolution,
            format,
        } => cmd::oracle::run(
            &spec_file::load(&spec)?,
            delta,
            resolution,
            units,
            format,
            out,
        ),
        Command::PriorChannel { q, grid, format } => {
            cmd::prior::run(q, &grid.resolve()?, format, out)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share status 1 with other input errors; 2 means partial results.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|status| {
        out.flush()?;
        Ok(status)
    });
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

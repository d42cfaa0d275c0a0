mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relaygame::Error;

#[derive(Debug, Parser)]
#[command(name = "relaygame", version, about = "Rates and power-allocation games on interference relay channels")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainDenominatorArg {
    Allocated,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReadingArg {
    Squared,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Cournot,
    MultiStart,
    Analytic,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Convergence tolerance of best-response dynamics.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest unilateral gain tolerated by equilibrium checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub verify_tol: f64,
    /// Overrides the scenario's saturating-gain convention.
    #[arg(long, global = true, value_enum)]
    pub gain_denominator: Option<GainDenominatorArg>,
    /// Noise term of the closed-form best-response coefficients.
    #[arg(long, global = true, value_enum, default_value = "squared")]
    pub d_reading: ReadingArg,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub xmin: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub xmax: f64,
    #[arg(long, default_value_t = 30)]
    pub nx: usize,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub ymin: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub ymax: f64,
    #[arg(long, default_value_t = 30)]
    pub ny: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rates of one band at the given per-band powers.
    Rates {
        #[arg(long, default_value_t = 0)]
        band: usize,
        /// Source powers on the band as `p1,p2`; full powers by default.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        powers: Option<Vec<f64>>,
    },
    /// Rate-maximizing AF gain for one user on one band.
    AfGain {
        #[arg(long, default_value_t = 0)]
        band: usize,
        #[arg(long, default_value_t = 1)]
        user: u8,
        /// Largest admissible gain; the saturating gain at full power by
        /// default.
        #[arg(long)]
        a_max: Option<f64>,
    },
    /// Nash equilibria of the power allocation game.
    Ne {
        /// Closed-form enumeration (two fixed-gain bands).
        #[arg(long)]
        analytic: bool,
    },
    /// Best-response trajectory.
    Cournot {
        /// `a,b` for the band-0 shares of two bands, or the full vectors of
        /// user 1 then user 2.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        simultaneous: bool,
    },
    /// Limit of the closed-form dynamics from a grid of starts.
    Basin {
        #[arg(long, default_value_t = 50)]
        resolution: usize,
    },
    /// Followers' equilibrium as the fixed AF gain varies.
    SweepGain {
        #[arg(long, default_value_t = 0)]
        band: usize,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long)]
        a_max: Option<f64>,
        #[arg(long, value_enum, default_value = "cournot")]
        policy: PolicyArg,
        /// File receiving the JSON summary in CSV mode.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Followers' equilibrium as the relay power split varies.
    SweepNu {
        #[arg(long, default_value_t = 0)]
        band: usize,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long, value_enum, default_value = "cournot")]
        policy: PolicyArg,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Followers' equilibrium over a grid of relay positions.
    SweepPosition {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "cournot")]
        policy: PolicyArg,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Best relay protocol over a grid of relay positions.
    DominanceMap {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1e-6)]
        tie_tol: f64,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Writes a generated scenario file.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 2)]
        bands: usize,
        #[arg(long, default_value = "af_fixed")]
        protocol: String,
        #[arg(long)]
        time_sharing: bool,
    },
}

/// Validation problems exit with 1, numerical failures with 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Degenerate(_) | Error::Singular(_) | Error::NoConvergedPoint | Error::Numerical(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_with_two() {
        assert_eq!(exit_code(&anyhow::Error::new(Error::NoConvergedPoint)), 2);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Singular("x".into()))), 2);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Domain("x".into()))), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}

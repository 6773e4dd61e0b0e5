//! Command-line front end: scenario loading, sweeps and run directories.

pub mod commands;
pub mod output;
pub mod sweep;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use isac_core::scenario::Scenario;
use thiserror::Error;

pub use sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(name = "isac", version, about = "CRB analysis and beamforming design for sensing with extended targets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file; the built-in default scenario when omitted.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Output directory for the run.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Seed for extraction draws and Monte-Carlo trials.
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CRBs of the extended and point target along a parameter sweep.
    CrbSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "KEY=START:STOP:STEP")]
        sweep: SweepSpec,
        /// Design that supplies the transmit covariance at each point.
        #[arg(long, default_value = "isotropic")]
        method: String,
    },
    /// Beamformers, CRB report, SINRs and beampattern for one design.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "sdr")]
        method: String,
    },
    /// Monte-Carlo RMSE of the matched-filter estimator against the CRB.
    Mse {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "sdr")]
        method: String,
        #[arg(long, value_name = "N", default_value_t = 2000)]
        trials: usize,
    },
    /// SDR and ZF side by side over a `gamma` or `n_c` sweep.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "KEY=START:STOP:STEP")]
        sweep: SweepSpec,
    },
    /// Checks a scenario and prints a JSON summary.
    Validate {
        #[arg(long, value_name = "PATH")]
        scenario: Option<PathBuf>,
        /// Print the normalized scenario TOML instead of the summary.
        #[arg(long)]
        print: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad scenario: {0}")]
    BadScenario(String),
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl From<isac_core::Error> for CliError {
    fn from(e: isac_core::Error) -> Self {
        use isac_core::Error as E;
        match e {
            E::InvalidScenario(_) | E::InvalidContour(_) | E::InvalidPose(_) | E::EmptyLos | E::UnknownMethod(_) => {
                Self::BadScenario(e.to_string())
            }
            E::Infeasible { .. } | E::AllInfeasible { .. } | E::ExtractionFailed { .. } | E::NegativePower { .. } => {
                Self::Infeasible(e.to_string())
            }
            other => Self::Other(other.to_string()),
        }
    }
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Failure = 1,
    Infeasible = 2,
    PartialFailure = 3,
    BadScenario = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failure => "failed",
            Self::Infeasible => "infeasible",
            Self::PartialFailure => "partial-failure",
            Self::BadScenario => "bad-scenario",
        }
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            Self::BadScenario(_) | Self::Usage(_) => ExitStatus::BadScenario,
            Self::Infeasible(_) => ExitStatus::Infeasible,
            Self::Io(_) | Self::Other(_) => ExitStatus::Failure,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Scenario from `path`, or the default scenario.
pub fn load_scenario(path: Option<&Path>) -> CliResult<(Scenario, String)> {
    match path {
        None => Ok((Scenario::default(), "default".into())),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::BadScenario(format!("{}: {e}", p.display())))?;
            let s = Scenario::from_toml(&text)?;
            let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok((s, name))
        }
    }
}

pub fn run(cli: Cli) -> CliResult<ExitStatus> {
    match cli.command {
        Command::CrbSweep { common, sweep, method } => commands::crb_sweep(&common, &sweep, &method),
        Command::Design { common, method } => commands::design(&common, &method),
        Command::Mse { common, method, trials } => commands::mse(&common, &method, trials),
        Command::Compare { common, sweep } => commands::compare(&common, &sweep),
        Command::Validate { scenario, print } => commands::validate(scenario.as_deref(), print),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let inf: CliError = isac_core::Error::Infeasible { class: "sinr".into() }.into();
        assert_eq!(inf.status().code(), 2);
        let bad: CliError = isac_core::Error::InvalidScenario("x".into()).into();
        assert_eq!(bad.status().code(), 4);
        let other: CliError = isac_core::Error::DegenerateFim("x".into()).into();
        assert_eq!(other.status().code(), 1);
    }

    #[test]
    fn shipped_default_matches_builtin() {
        let text = include_str!("../../../scenarios/default.toml");
        assert_eq!(Scenario::from_toml(text).unwrap(), Scenario::default());
    }
}

//! Experiment runner for the stab-core audits: configuration, the five
//! pipelines and the report writers behind the `stab` binary.

pub mod config;
pub mod pipelines;
pub mod report;

use std::time::Instant;

use stab_core::StabError;

pub use config::{Experiment, ExperimentConfig, Verdict};
pub use report::{Check, Role, StabilityReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] StabError),
}

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

/// Runs one experiment and returns its finalized report.
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> Result<StabilityReport, RunError> {
    if let Some(declared) = config.experiment {
        if declared != experiment {
            return Err(RunError::Config(format!(
                "config declares experiment {declared} but {experiment} was requested"
            )));
        }
    }
    config.validate()?;
    let start = Instant::now();
    let mut report = StabilityReport::new(experiment, config);
    match experiment {
        Experiment::AuditTheorem21 => pipelines::audit_theorem21(config, &mut report)?,
        Experiment::AuditTheorem23 => pipelines::audit_theorem23(config, &mut report)?,
        Experiment::RunHyers => pipelines::run_hyers(config, &mut report)?,
        Experiment::RunFixedpoint => pipelines::run_fixedpoint(config, &mut report)?,
        Experiment::VerifyAlgebra => pipelines::verify_algebra(config, &mut report)?,
    }
    report.finalize();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Exit code for a finished run: 0 when the verdict is the expected one, 1 otherwise.
pub fn verdict_exit_code(report: &StabilityReport, expected: Verdict) -> i32 {
    if report.verdict == expected {
        0
    } else {
        1
    }
}

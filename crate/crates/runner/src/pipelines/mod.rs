//! The five experiment pipelines. Each one appends numbered checks and
//! records to a report; verdicts are settled by [`StabilityReport::finalize`].

mod algebra;
mod audit;
mod fixedpoint;
mod hyers;

pub use algebra::verify_algebra;
pub use audit::{audit_theorem21, audit_theorem23, DENSITY_EPS};
pub use fixedpoint::run_fixedpoint;
pub use hyers::run_hyers;

use stab_core::control::{ControlFunction, ControlParams};
use stab_core::hyers::SampleSet;
use stab_core::mappings::{fit_theta, DefectKind, MappingUnderTest};

use crate::config::ExperimentConfig;
use crate::report::StabilityReport;
use crate::RunError;

/// Offsets that keep the seeded streams of one run apart.
pub(crate) mod stream {
    pub const PROBES: u64 = 10_000;
    pub const SELF_ADJOINT: u64 = 20_000;
    pub const TRIALS: u64 = 30_000;
    pub const PAIRS: u64 = 40_000;
}

pub(crate) fn seed(cfg: &ExperimentConfig, stream: u64, k: usize) -> u64 {
    cfg.sampling.seed.wrapping_add(stream.wrapping_mul(1_000_003)).wrapping_add(k as u64)
}

pub(crate) fn samples(cfg: &ExperimentConfig) -> Result<SampleSet, RunError> {
    let s = &cfg.sampling;
    Ok(SampleSet::random(&cfg.domain()?, s.samples, s.depth, s.unitaries, s.seed)?)
}

/// The configured `θ`, or the fitted one raised to the floor. Records both.
pub(crate) fn theta_for(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    samples: &SampleSet,
    kind: DefectKind,
) -> Result<f64, RunError> {
    let name = match kind {
        DefectKind::Jensen => "theta_jensen",
        DefectKind::Composite => "theta_composite",
        DefectKind::Scaling => "theta_scaling",
    };
    let fitted = fit_theta(f, samples, cfg.control.p, kind)?;
    report.fit(&format!("{name}_fitted"), fitted);
    let used = cfg.control.theta.unwrap_or(fitted.max(cfg.tolerances.theta_floor));
    report.fit(name, used);
    Ok(used)
}

pub(crate) fn control(theta: f64, p: f64, arity: usize) -> Result<ControlFunction, RunError> {
    Ok(ControlFunction::new(ControlParams::new(theta, p)?, arity)?)
}

//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stab_core::algebra::AlgebraShape;
use stab_core::control::{ControlParams, PhiMode};
use stab_core::mappings::{
    adjoint_map, make_jordan_hom, make_perturbed, transpose_map, unit_direction, BlockPlan, MappingSpec,
    MappingUnderTest, PerturbationSpec,
};
use stab_core::{Block, StabError};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[value(name = "audit-theorem21")]
    AuditTheorem21,
    #[value(name = "audit-theorem23")]
    AuditTheorem23,
    RunHyers,
    RunFixedpoint,
    VerifyAlgebra,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::AuditTheorem21 => "audit-theorem21",
            Self::AuditTheorem23 => "audit-theorem23",
            Self::RunHyers => "run-hyers",
            Self::RunFixedpoint => "run-fixedpoint",
            Self::VerifyAlgebra => "verify-algebra",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Verdict {
    #[serde(rename = "PASS", alias = "pass")]
    #[value(name = "pass")]
    Pass,
    #[serde(rename = "FAIL", alias = "fail")]
    #[value(name = "fail")]
    Fail,
    #[serde(rename = "NOT-APPLICABLE", alias = "not-applicable")]
    #[value(name = "not-applicable")]
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::NotApplicable => "NOT-APPLICABLE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub algebra: AlgebraSection,
    #[serde(default)]
    pub mapping: MappingSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    pub control: ControlSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub expect: ExpectSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    /// Block sizes of the domain, e.g. `[2, 3]` for `M_2 ⊕ M_3`.
    pub domain: Vec<usize>,
    /// Defaults to the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codomain: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    #[default]
    Jordan,
    Scaled,
    Adjoint,
    Transpose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingSection {
    #[serde(default)]
    pub kind: MappingKind,
    /// Seed of the planted conjugators when `blocks` is absent.
    #[serde(default = "default_planted_seed")]
    pub seed: u64,
    /// Factor for `kind = "scaled"`.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockSection>>,
}

fn default_planted_seed() -> u64 {
    7
}

fn default_scale() -> f64 {
    2.0
}

impl Default for MappingSection {
    fn default() -> Self {
        Self {
            kind: MappingKind::Jordan,
            seed: default_planted_seed(),
            scale: default_scale(),
            blocks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSection {
    pub target: usize,
    #[serde(default)]
    pub transpose: bool,
    #[serde(default)]
    pub conjugator: Conjugator,
}

/// `"identity"`, `{ seed = N }` or `{ entries = [[[re, im], …], …] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Conjugator {
    Named(String),
    Seed { seed: u64 },
    Entries { entries: Block },
}

impl Default for Conjugator {
    fn default() -> Self {
        Self::Named("identity".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    #[default]
    None,
    Radial,
    HashedRadial,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub theta_prime: f64,
    /// Defaults to the control exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Seed of the unit direction (radial, jump) or of the hash (hashed-radial).
    #[serde(default = "default_direction_seed")]
    pub seed: u64,
}

fn default_direction_seed() -> u64 {
    99
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::None,
            theta_prime: 0.0,
            p: None,
            seed: default_direction_seed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiModeName {
    #[default]
    Closed,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    /// Fitted from measurements when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub p: f64,
    #[serde(default)]
    pub phi_mode: PhiModeName,
    #[serde(default = "default_partial_n")]
    pub partial_n: usize,
}

fn default_partial_n() -> usize {
    200
}

impl ControlSection {
    pub fn phi_mode(&self) -> PhiMode {
        match self.phi_mode {
            PhiModeName::Closed => PhiMode::Closed,
            PhiModeName::Partial => PhiMode::Partial(self.partial_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub seed: u64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_depth")]
    pub depth: u32,
    #[serde(default = "d_unitaries")]
    pub unitaries: usize,
    #[serde(default = "d_probes")]
    pub probes: usize,
    #[serde(default = "d_m_max")]
    pub m_max: u32,
    #[serde(default = "d_premise_depth")]
    pub premise_depth: u32,
    #[serde(default = "d_trials")]
    pub trials: usize,
}

fn d_samples() -> usize {
    64
}
fn d_depth() -> u32 {
    40
}
fn d_unitaries() -> usize {
    8
}
fn d_probes() -> usize {
    50
}
fn d_m_max() -> u32 {
    20
}
fn d_premise_depth() -> u32 {
    20
}
fn d_trials() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Premise defects, relative to `3^n · max(1, ‖y‖)`.
    pub premise: f64,
    /// Conclusion defects (Jordan, star) of the mapping under audit.
    pub conclusion: f64,
    /// Stopping tolerance of the Hyers iteration.
    pub hyers: f64,
    pub hyers_max_steps: u32,
    /// Recovered-map distance and defects.
    pub recovery: f64,
    pub unitality: f64,
    /// Relative error of the measured Hyers rate against `L`.
    pub rate: f64,
    /// Relative gap between closed-form and partial-sum `φ̃`.
    pub partial_sum: f64,
    pub cstar: f64,
    pub eigen: f64,
    pub decomposition: f64,
    /// Agreement of the two routes in the three-case reconstruction.
    pub two_route: f64,
    /// `ε` used to sample invertible self-adjoint elements.
    pub rr0_eps: f64,
    /// The density deltas must satisfy `δ(ε)/ε ≤ density_factor · δ(ε₀)/ε₀`.
    pub density_factor: f64,
    /// Fitted `θ` below this is raised to it, so that `φ` stays positive.
    pub theta_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            premise: 1e-9,
            conclusion: 1e-9,
            hyers: 1e-12,
            hyers_max_steps: 60,
            recovery: 1e-8,
            unitality: 1e-10,
            rate: 1e-6,
            partial_sum: 1e-10,
            cstar: 1e-8,
            eigen: 1e-10,
            decomposition: 1e-9,
            two_route: 1e-10,
            rr0_eps: 1e-3,
            density_factor: 10.0,
            theta_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectSection {
    #[serde(default = "d_verdict")]
    pub verdict: Verdict,
}

fn d_verdict() -> Verdict {
    Verdict::Pass
}

impl Default for ExpectSection {
    fn default() -> Self {
        Self { verdict: Verdict::Pass }
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn shape(dims: &[usize], what: &str) -> Result<AlgebraShape, RunError> {
    AlgebraShape::new(dims.to_vec()).map_err(|e| config_err(format!("{what}: {e}")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let dom = self.domain()?;
        let cod = self.codomain()?;
        ControlParams::new(self.control.theta.unwrap_or(0.0), self.control.p)
            .map_err(|e| config_err(format!("[control] {e}")))?;
        if let Some(theta) = self.control.theta {
            if !(theta > 0.0) {
                return Err(config_err("[control] theta must be > 0 when given"));
            }
        }
        if self.control.partial_n == 0 {
            return Err(config_err("[control] partial_n must be ≥ 1"));
        }
        let s = &self.sampling;
        if s.samples == 0 || s.trials == 0 || s.probes == 0 {
            return Err(config_err("[sampling] samples, probes and trials must be ≥ 1"));
        }
        let cap = stab_core::hyers::DEPTH_CAP;
        if s.depth > cap || s.premise_depth > cap || s.m_max + 1 > cap {
            return Err(config_err(format!("[sampling] depths must stay within {cap}")));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("premise", t.premise),
            ("conclusion", t.conclusion),
            ("hyers", t.hyers),
            ("recovery", t.recovery),
            ("unitality", t.unitality),
            ("rate", t.rate),
            ("partial_sum", t.partial_sum),
            ("cstar", t.cstar),
            ("eigen", t.eigen),
            ("decomposition", t.decomposition),
            ("two_route", t.two_route),
            ("rr0_eps", t.rr0_eps),
            ("density_factor", t.density_factor),
            ("theta_floor", t.theta_floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("[tolerances] {name} = {v} must be positive")));
            }
        }
        if t.rr0_eps >= 0.5 {
            return Err(config_err("[tolerances] rr0_eps must be below 1/2"));
        }
        if t.hyers_max_steps == 0 || t.hyers_max_steps > cap {
            return Err(config_err(format!("[tolerances] hyers_max_steps must be in 1..={cap}")));
        }
        if matches!(self.mapping.kind, MappingKind::Adjoint | MappingKind::Transpose) && dom != cod {
            return Err(config_err("[mapping] adjoint and transpose maps need codomain = domain"));
        }
        if !(self.mapping.scale.is_finite()) {
            return Err(config_err("[mapping] scale must be finite"));
        }
        self.perturbation_spec(&cod)?;
        self.base_mapping()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<AlgebraShape, RunError> {
        shape(&self.algebra.domain, "[algebra] domain")
    }

    pub fn codomain(&self) -> Result<AlgebraShape, RunError> {
        shape(self.algebra.codomain.as_ref().unwrap_or(&self.algebra.domain), "[algebra] codomain")
    }

    fn mapping_spec(&self) -> Result<MappingSpec, RunError> {
        let dom = self.domain()?;
        let cod = self.codomain()?;
        let spec = match &self.mapping.blocks {
            None if dom == cod => MappingSpec::planted(&dom, self.mapping.seed),
            None => return Err(config_err("[mapping] a codomain different from the domain needs explicit blocks")),
            Some(blocks) => {
                let cdims = cod.block_dims();
                let plan = blocks
                    .iter()
                    .map(|b| {
                        let n = *cdims
                            .get(b.target)
                            .ok_or_else(|| config_err(format!("[mapping] target {} out of range", b.target)))?;
                        let conjugator = match &b.conjugator {
                            Conjugator::Named(s) if s == "identity" => Block::identity(n),
                            Conjugator::Named(s) => {
                                return Err(config_err(format!("[mapping] unknown conjugator {s:?}")));
                            }
                            Conjugator::Seed { seed } => {
                                let single = AlgebraShape::new(vec![n]).map_err(RunError::Numerical)?;
                                stab_core::algebra::random_unitary(&single, *seed).block(0).clone()
                            }
                            Conjugator::Entries { entries } => entries.clone(),
                        };
                        Ok(BlockPlan {
                            target: b.target,
                            conjugator,
                            transpose: b.transpose,
                        })
                    })
                    .collect::<Result<Vec<_>, RunError>>()?;
                MappingSpec {
                    domain_shape: dom,
                    codomain_shape: cod,
                    plan,
                    perturbation: PerturbationSpec::None,
                }
            }
        };
        spec.validate().map_err(|e| config_err(format!("[mapping] {e}")))?;
        Ok(spec)
    }

    /// The unperturbed mapping.
    pub fn base_mapping(&self) -> Result<MappingUnderTest, RunError> {
        let dom = self.domain()?;
        Ok(match self.mapping.kind {
            MappingKind::Jordan => make_jordan_hom(&self.mapping_spec()?).map_err(|e| config_err(e.to_string()))?,
            MappingKind::Scaled => make_jordan_hom(&self.mapping_spec()?)
                .map_err(|e| config_err(e.to_string()))?
                .scaled(self.mapping.scale),
            MappingKind::Adjoint => adjoint_map(&dom),
            MappingKind::Transpose => transpose_map(&dom),
        })
    }

    pub fn perturbation_spec(&self, codomain: &AlgebraShape) -> Result<PerturbationSpec, RunError> {
        let pt = &self.perturbation;
        let p = pt.p.unwrap_or(self.control.p);
        let spec = match pt.kind {
            PerturbationKind::None => PerturbationSpec::None,
            PerturbationKind::Radial => PerturbationSpec::Radial {
                theta_prime: pt.theta_prime,
                p,
                direction: unit_direction(codomain, pt.seed),
            },
            PerturbationKind::HashedRadial => PerturbationSpec::HashedRadial {
                theta_prime: pt.theta_prime,
                p,
                seed: pt.seed,
            },
            PerturbationKind::Jump => PerturbationSpec::Jump {
                theta_prime: pt.theta_prime,
                p,
                direction: unit_direction(codomain, pt.seed),
            },
        };
        spec.validate(codomain).map_err(|e| config_err(format!("[perturbation] {e}")))?;
        Ok(spec)
    }

    /// The mapping under test: the base mapping plus the perturbation.
    pub fn mapping(&self) -> Result<MappingUnderTest, RunError> {
        let base = self.base_mapping()?;
        let pert = self.perturbation_spec(base.codomain())?;
        if pert == PerturbationSpec::None {
            return Ok(base);
        }
        make_perturbed(&base, &pert).map_err(|e: StabError| config_err(e.to_string()))
    }
}

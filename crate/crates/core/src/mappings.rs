//! Mappings between algebras: planted Jordan *-homomorphisms, perturbations of
//! them, and the defect functionals measured on both.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, AlgebraShape, Block, Element, C64};
use crate::error::{Result, StabError};
use crate::hyers::SampleSet;
use crate::structure::in_invertible_unit_sphere;

/// Tolerance for the unitary and `I_1(A_sa)` membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

pub type EvalFn = Arc<dyn Fn(&Element) -> Element + Send + Sync>;

/// An evaluable map `f: A → B` with `f(0) = 0` enforced at evaluation.
#[derive(Clone)]
pub struct MappingUnderTest {
    label: String,
    domain: AlgebraShape,
    codomain: AlgebraShape,
    spec: Option<MappingSpec>,
    eval: EvalFn,
    /// Set when this map is `J^m g`: the pair `(g, m)`.
    pub(crate) j_origin: Option<(Arc<MappingUnderTest>, u32)>,
}

impl fmt::Debug for MappingUnderTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MappingUnderTest")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .finish_non_exhaustive()
    }
}

impl MappingUnderTest {
    pub fn from_fn(
        label: impl Into<String>,
        domain: AlgebraShape,
        codomain: AlgebraShape,
        f: impl Fn(&Element) -> Element + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            codomain,
            spec: None,
            eval: Arc::new(f),
            j_origin: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &AlgebraShape {
        &self.domain
    }

    pub fn codomain(&self) -> &AlgebraShape {
        &self.codomain
    }

    pub fn spec(&self) -> Option<&MappingSpec> {
        self.spec.as_ref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Evaluates `f(x)`. Panics if `x` is not in the domain.
    pub fn apply(&self, x: &Element) -> Element {
        assert_eq!(x.shape(), &self.domain, "{}: argument outside the domain", self.label);
        if x.is_zero() {
            return Element::zero(&self.codomain);
        }
        (self.eval)(x)
    }

    pub fn try_apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != &self.domain {
            return Err(StabError::ShapeMismatch {
                left: self.domain.clone(),
                right: x.shape().clone(),
            });
        }
        Ok(self.apply(x))
    }

    /// `x ↦ c · f(x)`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        Self::from_fn(
            format!("{c}·{}", self.label),
            self.domain.clone(),
            self.codomain.clone(),
            move |x| inner.apply(x).scale_real(c),
        )
    }
}

/// Where one domain block goes and how it is twisted on the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub target: usize,
    pub conjugator: Block,
    pub transpose: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSpec {
    pub domain_shape: AlgebraShape,
    pub codomain_shape: AlgebraShape,
    pub plan: Vec<BlockPlan>,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
}

impl MappingSpec {
    pub fn identity(shape: &AlgebraShape) -> Self {
        Self {
            domain_shape: shape.clone(),
            codomain_shape: shape.clone(),
            plan: shape
                .block_dims()
                .iter()
                .enumerate()
                .map(|(i, &n)| BlockPlan {
                    target: i,
                    conjugator: Block::identity(n),
                    transpose: false,
                })
                .collect(),
            perturbation: PerturbationSpec::None,
        }
    }

    /// Identity routing, seeded random conjugators, transpose on odd blocks.
    pub fn planted(shape: &AlgebraShape, seed: u64) -> Self {
        let u = crate::algebra::random_unitary(shape, seed);
        let mut spec = Self::identity(shape);
        for (i, bp) in spec.plan.iter_mut().enumerate() {
            bp.conjugator = u.block(i).clone();
            bp.transpose = i % 2 == 1;
        }
        spec
    }

    pub fn with_perturbation(mut self, pert: PerturbationSpec) -> Self {
        self.perturbation = pert;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dd = self.domain_shape.block_dims();
        let cd = self.codomain_shape.block_dims();
        if dd.len() != cd.len() || self.plan.len() != dd.len() {
            return Err(StabError::InvalidSpec(format!(
                "plan routes {} blocks between {} and {}",
                self.plan.len(),
                self.domain_shape,
                self.codomain_shape
            )));
        }
        let mut seen = vec![false; cd.len()];
        for (i, bp) in self.plan.iter().enumerate() {
            if bp.target >= cd.len() || seen[bp.target] {
                return Err(StabError::InvalidSpec(format!(
                    "block targets do not form a permutation (block {i} → {})",
                    bp.target
                )));
            }
            seen[bp.target] = true;
            if cd[bp.target] != dd[i] {
                return Err(StabError::InvalidSpec(format!(
                    "block {i} of size {} routed to block {} of size {}",
                    dd[i], bp.target, cd[bp.target]
                )));
            }
            if bp.conjugator.dim() != dd[i] {
                return Err(StabError::InvalidSpec(format!("conjugator {i} has the wrong size")));
            }
            let u = Element::from_blocks(vec![bp.conjugator.clone()])?;
            if !u.is_unitary(MEMBERSHIP_TOL) {
                return Err(StabError::InvalidSpec(format!(
                    "conjugator {i} is not unitary (residual {:.3e})",
                    u.unitary_residual()
                )));
            }
        }
        self.perturbation.validate(&self.codomain_shape)
    }
}

/// Additive perturbation `δ` with `‖δ(x)‖ ≤ θ′‖x‖^p` and `δ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationSpec {
    #[default]
    None,
    /// `δ(x) = θ′‖x‖^p D` with `‖D‖ = 1`.
    Radial {
        theta_prime: f64,
        p: f64,
        direction: Element,
    },
    /// Like `Radial`, but the unit direction is derived from a hash of `x`.
    HashedRadial { theta_prime: f64, p: f64, seed: u64 },
    /// `θ′‖x‖^p D` on singular `x` and zero elsewhere; discontinuous on
    /// purpose.
    Jump {
        theta_prime: f64,
        p: f64,
        direction: Element,
    },
}

impl PerturbationSpec {
    pub fn theta_prime(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Radial { theta_prime, .. }
            | Self::HashedRadial { theta_prime, .. }
            | Self::Jump { theta_prime, .. } => *theta_prime,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            Self::None => None,
            Self::Radial { p, .. } | Self::HashedRadial { p, .. } | Self::Jump { p, .. } => Some(*p),
        }
    }

    pub fn validate(&self, codomain: &AlgebraShape) -> Result<()> {
        let (tp, p) = match self {
            Self::None => return Ok(()),
            Self::Radial { theta_prime, p, .. }
            | Self::HashedRadial { theta_prime, p, .. }
            | Self::Jump { theta_prime, p, .. } => (*theta_prime, *p),
        };
        if !(tp.is_finite() && tp >= 0.0) {
            return Err(StabError::InvalidSpec(format!("θ′ = {tp} must be finite and ≥ 0")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(StabError::InvalidSpec(format!("perturbation exponent {p} must be > 0")));
        }
        if let Self::Radial { direction, .. } | Self::Jump { direction, .. } = self {
            if direction.shape() != codomain {
                return Err(StabError::InvalidSpec("direction outside the codomain".into()));
            }
            if (direction.op_norm() - 1.0).abs() > MEMBERSHIP_TOL {
                return Err(StabError::InvalidSpec("direction must have norm 1".into()));
            }
        }
        Ok(())
    }
}

/// Seeded unit-norm element of `shape`.
pub fn unit_direction(shape: &AlgebraShape, seed: u64) -> Element {
    let d = random_element(shape, seed);
    d.scale_real(1.0 / d.op_norm())
}

/// FNV-1a over the bit patterns of every entry, mixed with `seed`.
fn entry_hash(x: &Element, seed: u64) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in x.blocks() {
        for z in b.entries() {
            for word in [z.re.to_bits(), z.im.to_bits()] {
                for byte in word.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(PRIME);
                }
            }
        }
    }
    h
}

fn conjugate_block(x: &Block, bp: &BlockPlan) -> Block {
    let u = &bp.conjugator;
    let inner = if bp.transpose { x.transpose() } else { x.clone() };
    u.adjoint().matmul(&inner).matmul(u)
}

/// `x ↦ ⊕ U_i* (x_i or x_iᵀ) U_i`, routed by the plan.
pub fn make_jordan_hom(spec: &MappingSpec) -> Result<MappingUnderTest> {
    if spec.perturbation != PerturbationSpec::None {
        return Err(StabError::Precondition(
            "make_jordan_hom expects an unperturbed spec".into(),
        ));
    }
    spec.validate()?;
    let plan = spec.plan.clone();
    let codomain = spec.codomain_shape.clone();
    let label = if plan.iter().all(|bp| !bp.transpose) {
        "jordan-hom"
    } else {
        "jordan-hom(transpose)"
    };
    let mut m = MappingUnderTest::from_fn(label, spec.domain_shape.clone(), codomain.clone(), move |x| {
        let mut out: Vec<Block> = codomain.block_dims().iter().map(|&n| Block::zeros(n)).collect();
        for (i, bp) in plan.iter().enumerate() {
            out[bp.target] = conjugate_block(x.block(i), bp);
        }
        Element::new(codomain.clone(), out).expect("plan validated")
    });
    m.spec = Some(spec.clone());
    Ok(m)
}

/// `f = h₀ + δ`.
pub fn make_perturbed(base: &MappingUnderTest, pert: &PerturbationSpec) -> Result<MappingUnderTest> {
    pert.validate(base.codomain())?;
    let h0 = base.clone();
    let codomain = base.codomain().clone();
    let power = |n: f64, p: f64| if n == 0.0 { 0.0 } else { n.powf(p) };
    let (label, eval): (String, EvalFn) = match pert.clone() {
        PerturbationSpec::None => return Ok(base.clone()),
        PerturbationSpec::Radial { theta_prime, p, direction } => (
            format!("{}+radial", base.label()),
            Arc::new(move |x: &Element| {
                let amp = theta_prime * power(x.op_norm(), p);
                h0.apply(x).add(&direction.scale_real(amp)).expect("codomain shape")
            }),
        ),
        PerturbationSpec::HashedRadial { theta_prime, p, seed } => (
            format!("{}+hashed-radial", base.label()),
            Arc::new(move |x: &Element| {
                let amp = theta_prime * power(x.op_norm(), p);
                let d = unit_direction(&codomain, entry_hash(x, seed));
                h0.apply(x).add(&d.scale_real(amp)).expect("codomain shape")
            }),
        ),
        PerturbationSpec::Jump { theta_prime, p, direction } => (
            format!("{}+jump", base.label()),
            Arc::new(move |x: &Element| {
                let n = x.op_norm();
                let hx = h0.apply(x);
                if x.min_singular_value() <= 1e-9 * n {
                    hx.add(&direction.scale_real(theta_prime * power(n, p))).expect("codomain shape")
                } else {
                    hx
                }
            }),
        ),
    };
    let mut spec = base.spec.clone();
    if let Some(s) = spec.as_mut() {
        s.perturbation = pert.clone();
    }
    Ok(MappingUnderTest {
        label,
        domain: base.domain.clone(),
        codomain: base.codomain.clone(),
        spec,
        eval,
        j_origin: None,
    })
}

/// Builds the (possibly perturbed) mapping described by `spec`.
pub fn build_mapping(spec: &MappingSpec) -> Result<MappingUnderTest> {
    let pert = spec.perturbation.clone();
    let h0 = make_jordan_hom(&spec.clone().with_perturbation(PerturbationSpec::None))?;
    make_perturbed(&h0, &pert)
}

/// The conjugate-linear map `x ↦ x*`.
pub fn adjoint_map(shape: &AlgebraShape) -> MappingUnderTest {
    MappingUnderTest::from_fn("adjoint", shape.clone(), shape.clone(), |x| x.adjoint())
}

/// Blockwise transpose; a Jordan *-homomorphism that is not multiplicative.
pub fn transpose_map(shape: &AlgebraShape) -> MappingUnderTest {
    let mut spec = MappingSpec::identity(shape);
    for bp in &mut spec.plan {
        bp.transpose = true;
    }
    make_jordan_hom(&spec).expect("identity routing is valid").with_label("transpose")
}

/// 32 equally spaced points on the unit circle; the four axis points are exact.
pub fn mu_net() -> Vec<C64> {
    (0..32)
        .map(|k| match k {
            0 => C64::new(1.0, 0.0),
            8 => C64::new(0.0, 1.0),
            16 => C64::new(-1.0, 0.0),
            24 => C64::new(0.0, -1.0),
            _ => C64::from_polar(1.0, std::f64::consts::PI * k as f64 / 16.0),
        })
        .collect()
}

fn dist(a: &Element, b: &Element) -> f64 {
    a.sub(b).expect("same shape").op_norm()
}

fn check_unitary_or_zero(u: &Element) -> Result<()> {
    if u.is_zero() || u.is_unitary(MEMBERSHIP_TOL) {
        Ok(())
    } else {
        Err(StabError::NotUnitary {
            residual: u.unitary_residual(),
        })
    }
}

/// `‖2f((μx+μy)/2) − μf(x) − μf(y) + f(u*) − f(u)*‖` with `u` unitary or zero.
pub fn jensen_defect(f: &MappingUnderTest, x: &Element, y: &Element, mu: C64, u: &Element) -> Result<f64> {
    check_unitary_or_zero(u)?;
    let mid = x.add(y)?.scale(mu * 0.5);
    let v = f
        .apply(&mid)
        .scale_real(2.0)
        .sub(&f.apply(x).scale(mu))?
        .sub(&f.apply(y).scale(mu))?
        .add(&star_term(f, u))?;
    Ok(v.op_norm())
}

/// The Jensen expression at `u = 0` with `f(x)` and `f(y)` supplied.
fn jensen_expr(f: &MappingUnderTest, x: &Element, y: &Element, fx: &Element, fy: &Element, mu: C64) -> Result<Element> {
    let mid = x.add(y)?.scale(mu * 0.5);
    f.apply(&mid).scale_real(2.0).sub(&fx.scale(mu))?.sub(&fy.scale(mu))
}

fn star_term(f: &MappingUnderTest, w: &Element) -> Element {
    if w.is_zero() {
        return Element::zero(f.codomain());
    }
    f.apply(&w.adjoint()).sub(&f.apply(w).adjoint()).expect("codomain shape")
}

/// Which membership the `u` argument of the product premise must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PremisePath {
    Unitary,
    InvertibleSelfAdjoint,
}

/// `‖f(3ⁿ(uy + yu)) − f(3ⁿu)f(y) − f(y)f(3ⁿu)‖`.
pub fn premise21_defect(f: &MappingUnderTest, u: &Element, y: &Element, n: u32, path: PremisePath) -> Result<f64> {
    match path {
        PremisePath::Unitary => {
            if !u.is_unitary(MEMBERSHIP_TOL) {
                return Err(StabError::NotUnitary {
                    residual: u.unitary_residual(),
                });
            }
        }
        PremisePath::InvertibleSelfAdjoint => {
            if !in_invertible_unit_sphere(u, MEMBERSHIP_TOL) {
                return Err(StabError::NotInvertibleSelfAdjoint(format!(
                    "‖u‖ = {}, self-adjoint residual {:.3e}, min singular value {:.3e}",
                    u.op_norm(),
                    u.self_adjoint_residual(),
                    u.min_singular_value()
                )));
            }
        }
    }
    if n > crate::hyers::DEPTH_CAP {
        return Err(StabError::DepthExceeded {
            requested: n,
            cap: crate::hyers::DEPTH_CAP,
        });
    }
    let t = 3f64.powi(n as i32);
    let tu = u.scale_real(t);
    let lhs = f.apply(&tu.jordan_product(y)?);
    let fu = f.apply(&tu);
    let fy = f.apply(y);
    Ok(lhs.sub(&fu.jordan_product(&fy)?)?.op_norm())
}

/// `‖h(xy + yx) − h(x)h(y) − h(y)h(x)‖`.
pub fn jordan_defect(h: &MappingUnderTest, x: &Element, y: &Element) -> Result<f64> {
    let lhs = h.apply(&x.jordan_product(y)?);
    Ok(dist(&lhs, &h.apply(x).jordan_product(&h.apply(y))?))
}

/// `‖h(x*) − h(x)*‖`.
pub fn star_defect(h: &MappingUnderTest, x: &Element) -> f64 {
    dist(&h.apply(&x.adjoint()), &h.apply(x).adjoint())
}

/// `‖h(x + y) − h(x) − h(y)‖`.
pub fn additivity_defect(h: &MappingUnderTest, x: &Element, y: &Element) -> Result<f64> {
    Ok(h.apply(&x.add(y)?).sub(&h.apply(x))?.sub(&h.apply(y))?.op_norm())
}

/// `‖h(μx) − μh(x)‖`.
pub fn homogeneity_defect(h: &MappingUnderTest, mu: C64, x: &Element) -> f64 {
    dist(&h.apply(&x.scale(mu)), &h.apply(x).scale(mu))
}

/// `‖h(xy) − h(x)h(y)‖`.
pub fn multiplicative_defect(h: &MappingUnderTest, x: &Element, y: &Element) -> Result<f64> {
    Ok(dist(&h.apply(&x.mul(y)?), &h.apply(x).mul(&h.apply(y))?))
}

/// Norm of the six-argument composite expression: the three-point Cauchy
/// term, the symmetric Jordan term `f(uv + vu) − f(v)f(u) − f(u)f(v)`, and
/// the star term at `w ∈ U(A) ∪ {0}`.
#[allow(clippy::too_many_arguments)]
pub fn composite_defect(
    f: &MappingUnderTest,
    mu: C64,
    x: &Element,
    y: &Element,
    z: &Element,
    u: &Element,
    v: &Element,
    w: &Element,
) -> Result<f64> {
    check_unitary_or_zero(w)?;
    let third = mu / 3.0;
    let a = x.add(y)?.add(z)?.scale(third);
    let b = x.sub(&y.scale_real(2.0))?.add(z)?.scale(third);
    let c = x.add(y)?.sub(&z.scale_real(2.0))?.scale(third);
    let cauchy = f
        .apply(&a)
        .add(&f.apply(&b))?
        .add(&f.apply(&c))?
        .sub(&f.apply(x).scale(mu))?;
    let jordan = f.apply(&u.jordan_product(v)?).sub(&f.apply(v).jordan_product(&f.apply(u))?)?;
    Ok(cauchy.add(&jordan)?.add(&star_term(f, w))?.op_norm())
}

/// Which inequality `fit_theta` inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectKind {
    /// The three-argument Jensen inequality with control `θ(‖x‖^p+‖y‖^p+‖u‖^p)`.
    Jensen,
    /// The six-argument composite inequality.
    Composite,
    /// Only its `(x, 0, …, 0)`, `μ = 1` instance: `‖3f(x/3) − f(x)‖ ≤ θ‖x‖^p`.
    Scaling,
}

/// Running maximum of `defect / Σ‖·‖^p`.
struct Fit {
    p: f64,
    theta: f64,
}

impl Fit {
    fn denom(&self, norms: &[f64]) -> f64 {
        norms.iter().filter(|&&n| n > 0.0).map(|n| n.powf(self.p)).sum()
    }

    fn push(&mut self, defect: f64, norms: &[f64]) {
        let denom = self.denom(norms);
        if denom == 0.0 {
            if defect > 0.0 {
                self.theta = f64::INFINITY;
            }
            return;
        }
        self.theta = self.theta.max(defect / denom);
    }

    /// Like `push` on `‖v‖`, but skips the eigensolve when the Frobenius
    /// bound already cannot raise the maximum.
    fn push_element(&mut self, v: &Element, norms: &[f64]) {
        let denom = self.denom(norms);
        if denom > 0.0 && v.frobenius() * (1.0 + 1e-12) < self.theta * denom {
            return;
        }
        self.push(v.op_norm(), norms);
    }
}

/// Smallest `θ` for which the chosen inequality holds on every sampled tuple.
///
/// Tuples: for each orbit point `x` and `μ` in the net, `(x, x)`, `(x, −x)`,
/// `(−x, 3x)` and `(x, x')` with `x'` the next base point at the same level;
/// at the base points, Jordan pairs and the sample unitaries feed the
/// remaining arguments.
pub fn fit_theta(f: &MappingUnderTest, samples: &SampleSet, p: f64, kind: DefectKind) -> Result<f64> {
    let mut fit = Fit { p, theta: 0.0 };
    let zero = Element::zero(f.domain());
    let net = mu_net();
    let bases = samples.base_points();
    match kind {
        DefectKind::Scaling => {
            for x in samples.orbit_points() {
                let d = dist(&f.apply(&x.scale_real(1.0 / 3.0)).scale_real(3.0), &f.apply(&x));
                fit.push(d, &[x.op_norm()]);
            }
        }
        DefectKind::Jensen => {
            for k in 0..=samples.depth() {
                let level: Vec<Element> = samples.level(k).collect();
                let f_level: Vec<Element> = level.iter().map(|x| f.apply(x)).collect();
                for (i, x) in level.iter().enumerate() {
                    let nx = x.op_norm();
                    let mx = x.scale_real(-1.0);
                    let x3 = x.scale_real(3.0);
                    let (fx, fmx, fx3) = (&f_level[i], f.apply(&mx), f.apply(&x3));
                    let next = level.get(i + 1).map(|y| (y, &f_level[i + 1], y.op_norm()));
                    for &mu in &net {
                        fit.push_element(&jensen_expr(f, x, x, fx, fx, mu)?, &[nx, nx]);
                        fit.push_element(&jensen_expr(f, x, &mx, fx, &fmx, mu)?, &[nx, nx]);
                        fit.push_element(&jensen_expr(f, &mx, &x3, &fmx, &fx3, mu)?, &[nx, 3.0 * nx]);
                        if let Some((y, fy, ny)) = next {
                            fit.push_element(&jensen_expr(f, x, y, fx, fy, mu)?, &[nx, ny]);
                        }
                    }
                }
            }
            let one = C64::new(1.0, 0.0);
            for u in samples.unitaries() {
                let nu = u.op_norm();
                fit.push(jensen_defect(f, &zero, &zero, one, u)?, &[nu]);
                for x in bases {
                    let nx = x.op_norm();
                    fit.push(jensen_defect(f, x, x, one, u)?, &[nx, nx, nu]);
                }
            }
        }
        DefectKind::Composite => {
            for k in 0..=samples.depth() {
                for x in samples.level(k) {
                    let nx = x.op_norm();
                    let fx = f.apply(&x);
                    for &mu in &net {
                        // (x, 0, 0): all three Cauchy arguments are μx/3
                        let fa = f.apply(&x.scale(mu / 3.0));
                        let v = fa.add(&fa)?.add(&fa)?.sub(&fx.scale(mu))?;
                        fit.push_element(&v, &[nx]);
                        // (x, x, x): the arguments are (x + x + x)μ/3, 0, 0
                        let v = f.apply(&x.add(&x)?.add(&x)?.scale(mu / 3.0)).sub(&fx.scale(mu))?;
                        fit.push_element(&v, &[nx, nx, nx]);
                    }
                }
            }
            let one = C64::new(1.0, 0.0);
            for (i, x) in bases.iter().enumerate() {
                let nx = x.op_norm();
                if let Some(y) = bases.get(i + 1) {
                    let d = composite_defect(f, one, &zero, &zero, &zero, x, y, &zero)?;
                    fit.push(d, &[nx, y.op_norm()]);
                }
                if let (Some(y), Some(z)) = (bases.get(i + 1), bases.get(i + 2)) {
                    let norms = [nx, y.op_norm(), z.op_norm()];
                    for &mu in &net {
                        fit.push(composite_defect(f, mu, x, y, z, &zero, &zero, &zero)?, &norms);
                    }
                }
            }
            for w in samples.unitaries() {
                let d = composite_defect(f, one, &zero, &zero, &zero, &zero, &zero, w)?;
                fit.push(d, &[w.op_norm()]);
            }
        }
    }
    Ok(fit.theta)
}

//! The generalized metric `d(g, h) = sup ‖g(x) − h(x)‖ / φ(x, 0, …, 0)`, the
//! operator `J h(x) = h(3x)/3`, and numerical witnesses for the fixed-point
//! alternative applied to `J`.
//!
//! Every distance here is a supremum over a finite sample, hence a lower
//! bound for the distance over the whole algebra.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::algebra::Element;
use crate::control::ControlFunction;
use crate::error::{Result, StabError};
use crate::hyers::{hyers_iterate, hyers_limit, BoundReport, MarginRow, SampleSet, DEPTH_CAP};
use crate::mappings::{unit_direction, MappingUnderTest};

/// Contraction and convergence checks allow `lhs ≤ rhs + CONTRACTION_TOL`.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Relative size of the rounding error in a computed difference of two values.
pub const ROUNDING_FACTOR: f64 = 64.0 * f64::EPSILON;
/// Slack in the decay check `d_{m+1} ≤ (L + DECAY_SLACK)·d_m`.
pub const DECAY_SLACK: f64 = 1e-6;
/// Clause (iv) passes when `d(f, h) ≤ d(f, Jf)/(1 − L) + BOUND_TOL`, on
/// top of the rounding and limit-tolerance floors.
pub const BOUND_TOL: f64 = 1e-9;
/// Limits from different starts must agree to this, relative to `max(1, ‖x‖)`.
pub const UNIQUENESS_TOL: f64 = 1e-8;

/// A distance that may be `+∞`. Serializes infinite values as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GeneralizedDistance(f64);

impl GeneralizedDistance {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn new(v: f64) -> Self {
        assert!(v >= 0.0, "distance {v} is negative or NaN");
        Self(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn max(self, other: Self) -> Self {
        Self(self.0.max(other.0))
    }
}

impl std::ops::Add for GeneralizedDistance {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl fmt::Display for GeneralizedDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

impl Serialize for GeneralizedDistance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

fn ratio(numerator: f64, phi: f64) -> GeneralizedDistance {
    if numerator == 0.0 {
        GeneralizedDistance::ZERO
    } else if phi == 0.0 {
        GeneralizedDistance::INFINITE
    } else {
        GeneralizedDistance::new(numerator / phi)
    }
}

/// `d` from precomputed values of `g` and `h` at `points`.
pub fn gen_metric_values(points: &[Element], g: &[Element], h: &[Element], cf6: &ControlFunction) -> GeneralizedDistance {
    assert!(points.len() == g.len() && g.len() == h.len(), "value tables differ in length");
    points
        .iter()
        .zip(g.iter().zip(h))
        .map(|(x, (gx, hx))| ratio(gx.sub(hx).expect("codomain shape").op_norm(), cf6.phi_axis(x)))
        .fold(GeneralizedDistance::ZERO, GeneralizedDistance::max)
}

/// `sup_{x ∈ points} ‖g(x) − h(x)‖ / φ(x, 0, …, 0)`.
pub fn gen_metric(g: &MappingUnderTest, h: &MappingUnderTest, points: &[Element], cf6: &ControlFunction) -> GeneralizedDistance {
    points
        .iter()
        .map(|x| ratio(g.apply(x).sub(&h.apply(x)).expect("codomain shape").op_norm(), cf6.phi_axis(x)))
        .fold(GeneralizedDistance::ZERO, GeneralizedDistance::max)
}

/// `J^m h`, evaluated as `x ↦ g(3^{k+m} x)/3^{k+m}` when `h = J^k g`.
pub fn apply_j_power(h: &MappingUnderTest, m: u32) -> Result<MappingUnderTest> {
    let (origin, k) = match &h.j_origin {
        Some((g, k)) => (g.clone(), *k),
        None => (Arc::new(h.clone()), 0),
    };
    let total = k + m;
    if total > DEPTH_CAP {
        return Err(StabError::DepthExceeded {
            requested: total,
            cap: DEPTH_CAP,
        });
    }
    let inner = origin.clone();
    let mut out = MappingUnderTest::from_fn(
        format!("J^{total} {}", origin.label()),
        origin.domain().clone(),
        origin.codomain().clone(),
        move |x| hyers_iterate(&inner, x, total).expect("orbit within the overflow guard"),
    );
    out.j_origin = Some((origin, total));
    Ok(out)
}

/// `J h(x) = h(3x)/3`.
pub fn apply_j(h: &MappingUnderTest) -> Result<MappingUnderTest> {
    apply_j_power(h, 1)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionWitness {
    /// `d(Jg, Jh)` on levels `0..depth−1`.
    pub lhs: GeneralizedDistance,
    /// `L · d(g, h)` on levels `1..depth`.
    pub rhs: GeneralizedDistance,
    /// Floating-point floor for `lhs`, from the sizes of the values compared.
    pub rounding: f64,
    pub pass: bool,
}

/// Compares `d(Jg, Jh)` with `L·d(g, h)`. The left side is measured on the
/// lower levels of the orbit and the right side on the levels one step up,
/// which are exactly the arguments `J` evaluates at.
pub fn contraction_witness(
    g: &MappingUnderTest,
    h: &MappingUnderTest,
    samples: &SampleSet,
    cf6: &ControlFunction,
) -> Result<ContractionWitness> {
    if samples.depth() == 0 {
        return Err(StabError::InsufficientDepth { needed: 1, have: 0 });
    }
    let lower = samples.levels(0, samples.depth() - 1);
    let upper = samples.levels(1, samples.depth());
    let (jg, jh) = (apply_j(g)?, apply_j(h)?);
    let lhs = gen_metric(&jg, &jh, &lower, cf6);
    let rounding = ROUNDING_FACTOR
        * lower
            .iter()
            .map(|x| (jg.apply(x).op_norm() + jh.apply(x).op_norm()) / cf6.phi_axis(x))
            .fold(0.0, f64::max);
    let d = gen_metric(g, h, &upper, cf6);
    let rhs = scale_dist(cf6.lipschitz_l(), d);
    let pass = !rhs.is_finite() || lhs.value() <= rhs.value() + CONTRACTION_TOL + rounding;
    Ok(ContractionWitness {
        lhs,
        rhs,
        rounding,
        pass,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrbitRecord {
    pub m: u32,
    /// `d(J^m f, J^{m+1} f)` on levels `0..=m_max − m`.
    pub d: GeneralizedDistance,
    /// `Σ_{k ≤ m} d(J^k f, J^{k+1} f)`.
    pub cumulative: GeneralizedDistance,
    /// `L^m/(1 − L) · d(f, Jf)`.
    pub tail_bound: GeneralizedDistance,
    /// `d(J^m f, h)` on the base points.
    pub to_limit: GeneralizedDistance,
    /// Floating-point floor for `d` at this `m`, from the sizes of the values compared.
    pub rounding: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditSettings {
    pub m_max: u32,
    pub hyers_tol: f64,
    pub n_max: u32,
    /// Seeds of the tweak directions for the two alternative starts.
    pub tweak_seeds: [u64; 2],
    /// Size `κ` of the tweaks `κ‖x‖^p E`.
    pub kappa: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            m_max: 20,
            hyers_tol: 1e-12,
            n_max: DEPTH_CAP,
            tweak_seeds: [1001, 2002],
            kappa: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseI {
    /// First `m` with a finite distance, if any.
    pub m0: Option<u32>,
    /// No finite distance at all: the branch no finite run can confirm.
    pub all_infinite: bool,
    pub finite_from_m0: bool,
    /// Largest `d_{m+1}/d_m` among the steps that were checked.
    pub max_ratio: f64,
    pub checked_steps: u32,
    /// `d_{m+1}` against `(L + DECAY_SLACK)·d_m` plus the rounding floor, per checked step.
    pub rows: Vec<MarginRow>,
    pub decay_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseII {
    /// Largest excess of `d(J^m f, h)` over its geometric tail bound.
    pub worst_excess: f64,
    /// `max_x ‖J^{m_max} f(x) − h(x)‖ / max(1, ‖x‖)`.
    pub pointwise_gap: f64,
    /// `d(J^m f, h)` against the tail bound and floors, per `m` with finite values.
    pub rows: Vec<MarginRow>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseIII {
    /// `d(f, g_k)` for the two alternative starts; finite means `g_k ∈ Λ`.
    pub start_distances: [GeneralizedDistance; 2],
    /// `max ‖h_{g_k}(x) − h(x)‖ / max(1, ‖x‖)` over starts and base points.
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseIV {
    pub lhs: GeneralizedDistance,
    pub rhs: GeneralizedDistance,
    /// `rhs` plus `BOUND_TOL` and the rounding and limit floors.
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlternativeAudit {
    pub lipschitz_l: f64,
    pub records: Vec<OrbitRecord>,
    pub clause_i: ClauseI,
    pub clause_ii: ClauseII,
    pub clause_iii: ClauseIII,
    pub clause_iv: ClauseIV,
    /// Limits `h(x)` on the base points.
    #[serde(skip)]
    pub limits: Vec<Element>,
}

impl AlternativeAudit {
    pub fn pass(&self) -> bool {
        self.clause_i.pass && self.clause_ii.pass && self.clause_iii.pass && self.clause_iv.pass
    }
}

/// `g = f + κ‖x‖^p E` with a seeded unit direction `E`.
pub fn tweaked_start(f: &MappingUnderTest, kappa: f64, p: f64, seed: u64) -> MappingUnderTest {
    let e = unit_direction(f.codomain(), seed);
    let inner = f.clone();
    MappingUnderTest::from_fn(
        format!("{}+tweak{seed}", f.label()),
        f.domain().clone(),
        f.codomain().clone(),
        move |x| {
            let n = x.op_norm();
            let amp = if n == 0.0 { 0.0 } else { kappa * n.powf(p) };
            inner.apply(x).add(&e.scale_real(amp)).expect("codomain shape")
        },
    )
}

fn scale_dist(c: f64, d: GeneralizedDistance) -> GeneralizedDistance {
    if d.is_finite() {
        GeneralizedDistance::new(c * d.value())
    } else {
        d
    }
}

/// Runs the orbit `J^m f` for `m = 0..=m_max` on the base points and checks
/// all four clauses of the alternative: eventual finiteness with geometric
/// decay, convergence to the limit map, uniqueness from other starts at
/// finite distance, and the `1/(1 − L)` distance bound.
pub fn alternative_audit(
    f: &MappingUnderTest,
    samples: &SampleSet,
    cf6: &ControlFunction,
    settings: &AuditSettings,
) -> Result<AlternativeAudit> {
    let m_max = settings.m_max;
    if m_max + 1 > DEPTH_CAP {
        return Err(StabError::DepthExceeded {
            requested: m_max + 1,
            cap: DEPTH_CAP,
        });
    }
    let l = cf6.lipschitz_l();
    let pts = samples.base_points();

    let limits: Vec<Element> = pts
        .iter()
        .map(|x| hyers_limit(f, x, settings.hyers_tol, settings.n_max).map(|r| r.limit))
        .collect::<Result<_>>()?;

    // g[j][i] = 3^{-j} f(3^j b_i), so J^m f(3^k b_i) = 3^k g[m + k][i]
    let g: Vec<Vec<Element>> = (0..=m_max + 1)
        .map(|j| pts.iter().map(|x| hyers_iterate(f, x, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let phi: Vec<Vec<f64>> = (0..=m_max)
        .map(|k| pts.iter().map(|x| cf6.phi_axis(&x.scale_real(3f64.powi(k as i32)))).collect())
        .collect();

    // d(J^m f, ·) is measured on levels 0..=m_max − m, the points whose
    // images under J stay inside the previous set; there the decay by L is exact.
    let sup_over = |m: usize, other: &dyn Fn(usize, usize) -> Element| {
        let mut best = GeneralizedDistance::ZERO;
        for k in 0..=(m_max as usize - m) {
            let t = 3f64.powi(k as i32);
            for i in 0..pts.len() {
                let diff = g[m + k][i].sub(&other(k, i)).expect("codomain shape");
                best = best.max(ratio(t * diff.op_norm(), phi[k][i]));
            }
        }
        best
    };
    let d: Vec<GeneralizedDistance> = (0..=m_max as usize)
        .map(|m| sup_over(m, &|k, i| g[m + k + 1][i].clone()))
        .collect();
    let to_limit: Vec<GeneralizedDistance> = (0..=m_max as usize)
        .map(|m| gen_metric_values(pts, &g[m], &limits, cf6))
        .collect();
    let rounding: Vec<f64> = (0..=m_max as usize)
        .map(|m| {
            let mut worst: f64 = 0.0;
            for k in 0..=(m_max as usize - m) {
                let t = 3f64.powi(k as i32);
                for i in 0..pts.len() {
                    worst = worst.max(t * g[m + k][i].op_norm() / phi[k][i]);
                }
            }
            ROUNDING_FACTOR * worst
        })
        .collect();
    // the stopping rule leaves a tail of about hyers_tol·max(1, ‖x‖)
    let limit_slack = pts
        .iter()
        .zip(&phi[0])
        .map(|(x, &ph)| settings.hyers_tol * x.op_norm().max(1.0) / ph)
        .fold(0.0, f64::max);

    let d0 = d[0];
    let mut records = Vec::with_capacity(d.len());
    let mut cumulative = GeneralizedDistance::ZERO;
    for m in 0..=m_max {
        cumulative = cumulative + d[m as usize];
        records.push(OrbitRecord {
            m,
            d: d[m as usize],
            cumulative,
            tail_bound: scale_dist(l.powi(m as i32) / (1.0 - l), d0),
            to_limit: to_limit[m as usize],
            rounding: rounding[m as usize],
        });
    }

    // (i)
    let m0 = d.iter().position(|v| v.is_finite()).map(|m| m as u32);
    let all_infinite = m0.is_none();
    let finite_from_m0 = m0.is_some_and(|m0| d[m0 as usize..].iter().all(|v| v.is_finite()));
    let floor = if let Some(m0) = m0 {
        DECAY_SLACK * d[m0 as usize].value()
    } else {
        f64::INFINITY
    };
    let mut max_ratio: f64 = 0.0;
    let mut checked = 0;
    let mut decay_rows = Vec::new();
    if let Some(m0) = m0 {
        for m in m0 as usize..m_max as usize {
            if d[m].value() < floor.max(rounding[m]) {
                break;
            }
            max_ratio = max_ratio.max(d[m + 1].value() / d[m].value());
            checked += 1;
            decay_rows.push(MarginRow::new(
                d[m + 1].value(),
                (l + DECAY_SLACK) * d[m].value() + rounding[m + 1],
            ));
        }
    }
    let decay_ok = decay_rows.iter().all(|r| r.margin >= 0.0);
    let clause_i = ClauseI {
        m0,
        all_infinite,
        finite_from_m0,
        max_ratio,
        checked_steps: checked,
        rows: decay_rows,
        decay_ok,
        pass: finite_from_m0 && decay_ok,
    };

    // (ii)
    let mut worst_excess = f64::NEG_INFINITY;
    let mut limit_rows = Vec::new();
    for r in &records {
        if !r.tail_bound.is_finite() {
            continue;
        }
        let row = MarginRow::new(
            r.to_limit.value(),
            r.tail_bound.value() * (1.0 + 1e-8) + r.rounding + limit_slack,
        );
        worst_excess = worst_excess.max(-row.margin);
        limit_rows.push(row);
    }
    let pointwise_gap = pts
        .iter()
        .zip(&g[m_max as usize])
        .zip(&limits)
        .map(|((x, jm), h)| jm.sub(h).expect("codomain shape").op_norm() / x.op_norm().max(1.0))
        .fold(0.0, f64::max);
    let clause_ii = ClauseII {
        worst_excess,
        pointwise_gap,
        rows: limit_rows,
        pass: worst_excess <= BOUND_TOL,
    };

    // (iii)
    let mut start_distances = [GeneralizedDistance::ZERO; 2];
    let mut max_deviation: f64 = 0.0;
    for (k, &seed) in settings.tweak_seeds.iter().enumerate() {
        let g = tweaked_start(f, settings.kappa, cf6.p(), seed);
        start_distances[k] = gen_metric(f, &g, pts, cf6);
        for (x, h) in pts.iter().zip(&limits) {
            let hg = hyers_limit(&g, x, settings.hyers_tol, settings.n_max)?.limit;
            max_deviation = max_deviation.max(hg.sub(h)?.op_norm() / x.op_norm().max(1.0));
        }
    }
    let clause_iii = ClauseIII {
        start_distances,
        max_deviation,
        pass: start_distances.iter().all(|d| d.is_finite()) && max_deviation <= UNIQUENESS_TOL,
    };

    // (iv)
    let lhs = to_limit[0];
    let rhs = scale_dist(1.0 / (1.0 - l), d0);
    let allowed = rhs.value() + BOUND_TOL + rounding[0] + limit_slack;
    let clause_iv = ClauseIV {
        lhs,
        rhs,
        allowed,
        pass: lhs.value() <= allowed,
    };

    Ok(AlternativeAudit {
        lipschitz_l: l,
        records,
        clause_i,
        clause_ii,
        clause_iii,
        clause_iv,
        limits,
    })
}

/// `‖3f(x/3) − f(x)‖ ≤ φ(x, 0, …, 0)` on every point.
pub fn third_scaling_check(f: &MappingUnderTest, points: &[Element], cf6: &ControlFunction) -> BoundReport {
    BoundReport::from_rows(
        points
            .iter()
            .map(|x| {
                let lhs = f
                    .apply(&x.scale_real(1.0 / 3.0))
                    .scale_real(3.0)
                    .sub(&f.apply(x))
                    .expect("codomain shape")
                    .op_norm();
                MarginRow::new(lhs, cf6.phi_axis(x))
            })
            .collect(),
    )
}

/// `‖f(3x)/3 − f(x)‖ ≤ L·φ(x, 0, …, 0)` on every point.
pub fn triple_scaling_check(f: &MappingUnderTest, points: &[Element], cf6: &ControlFunction) -> BoundReport {
    let l = cf6.lipschitz_l();
    BoundReport::from_rows(
        points
            .iter()
            .map(|x| {
                let lhs = f
                    .apply(&x.scale_real(3.0))
                    .scale_real(1.0 / 3.0)
                    .sub(&f.apply(x))
                    .expect("codomain shape")
                    .op_norm();
                MarginRow::new(lhs, l * cf6.phi_axis(x))
            })
            .collect(),
    )
}

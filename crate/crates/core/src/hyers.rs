//! Scaled orbits `3^{-n} f(3^n x)`, their limits, and certification of the
//! two explicit distance bounds between `f` and the limit map.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::algebra::{random_element, random_unitary, seeded_rng, AlgebraShape, Element};
use crate::control::{ControlFunction, PhiMode};
use crate::error::{Result, StabError};
use crate::mappings::{MappingUnderTest, MEMBERSHIP_TOL};

/// Largest admissible orbit exponent.
pub const DEPTH_CAP: u32 = 60;
/// Orbit arguments at or beyond this norm are refused.
pub const OVERFLOW_NORM: f64 = 1e250;
/// Certified inequalities pass when every margin is at least `-MARGIN_TOL`.
pub const MARGIN_TOL: f64 = 1e-9;

/// Nonzero base points `b`, their orbits `{3^k b : 0 ≤ k ≤ depth}`, and a
/// few sample unitaries.
#[derive(Debug, Clone)]
pub struct SampleSet {
    base_points: Vec<Element>,
    depth: u32,
    unitaries: Vec<Element>,
}

impl SampleSet {
    pub fn new(base_points: Vec<Element>, depth: u32) -> Result<Self> {
        let Some(first) = base_points.first() else {
            return Err(StabError::Precondition("sample set needs at least one base point".into()));
        };
        if depth > DEPTH_CAP {
            return Err(StabError::DepthExceeded {
                requested: depth,
                cap: DEPTH_CAP,
            });
        }
        let shape = first.shape().clone();
        for b in &base_points {
            if b.shape() != &shape {
                return Err(StabError::ShapeMismatch {
                    left: shape,
                    right: b.shape().clone(),
                });
            }
            if b.is_zero() {
                return Err(StabError::ZeroInput);
            }
            let top = b.op_norm() * 3f64.powi(depth as i32);
            if top >= OVERFLOW_NORM {
                return Err(StabError::Overflow { n: depth, norm: top });
            }
        }
        Ok(Self {
            base_points,
            depth,
            unitaries: Vec::new(),
        })
    }

    pub fn with_unitaries(mut self, unitaries: Vec<Element>) -> Result<Self> {
        for u in &unitaries {
            if u.shape() != self.shape() {
                return Err(StabError::ShapeMismatch {
                    left: self.shape().clone(),
                    right: u.shape().clone(),
                });
            }
            if !u.is_unitary(MEMBERSHIP_TOL) {
                return Err(StabError::NotUnitary {
                    residual: u.unitary_residual(),
                });
            }
        }
        self.unitaries = unitaries;
        Ok(self)
    }

    /// `count` Gaussian base points with norms log-uniform in `[0.1, 10]`,
    /// plus `unitaries` Haar-like unitaries, all from `seed`.
    pub fn random(shape: &AlgebraShape, count: usize, depth: u32, unitaries: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let (lo, hi) = (0.1f64.ln(), 10f64.ln());
        let base: Vec<Element> = (0..count)
            .map(|_| {
                let g = random_element(shape, rng.next_u64());
                let r = rng.random_range(lo..hi).exp();
                g.scale_real(r / g.op_norm())
            })
            .collect();
        let us = (0..unitaries).map(|_| random_unitary(shape, rng.next_u64())).collect();
        Self::new(base, depth)?.with_unitaries(us)
    }

    pub fn shape(&self) -> &AlgebraShape {
        self.base_points[0].shape()
    }

    pub fn base_points(&self) -> &[Element] {
        &self.base_points
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn unitaries(&self) -> &[Element] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.base_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_points.is_empty()
    }

    /// `3^k b` for every base point `b`.
    pub fn level(&self, k: u32) -> impl Iterator<Item = Element> + '_ {
        assert!(k <= self.depth, "level {k} beyond depth {}", self.depth);
        let t = 3f64.powi(k as i32);
        self.base_points.iter().map(move |b| b.scale_real(t))
    }

    /// All orbit points, level by level.
    pub fn orbit_points(&self) -> Vec<Element> {
        (0..=self.depth).flat_map(|k| self.level(k)).collect()
    }

    /// Orbit points on levels `from..=to`.
    pub fn levels(&self, from: u32, to: u32) -> Vec<Element> {
        (from..=to).flat_map(|k| self.level(k)).collect()
    }
}

/// `3^{-n} f(3^n x)`.
pub fn hyers_iterate(f: &MappingUnderTest, x: &Element, n: u32) -> Result<Element> {
    if n > DEPTH_CAP {
        return Err(StabError::DepthExceeded {
            requested: n,
            cap: DEPTH_CAP,
        });
    }
    let t = 3f64.powi(n as i32);
    let norm = x.op_norm() * t;
    if norm >= OVERFLOW_NORM {
        return Err(StabError::Overflow { n, norm });
    }
    Ok(f.apply(&x.scale_real(t)).scale_real(1.0 / t))
}

#[derive(Debug, Clone, Serialize)]
pub struct HyersLimit {
    pub limit: Element,
    /// Estimated geometric ratio of successive increments.
    pub rate: f64,
    pub n_used: u32,
    pub converged: bool,
    /// `‖h_n − h_{n−1}‖` for `n = 1..=n_used`.
    pub increments: Vec<f64>,
}

impl HyersLimit {
    pub fn last_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }
}

fn median3(v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    w.sort_by(f64::total_cmp);
    w[w.len() / 2]
}

/// Least-squares slope of `ln inc_n` against `n` over the leading run of
/// increments above `floor`, exponentiated.
fn regression_rate(increments: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = increments
        .iter()
        .enumerate()
        .take_while(|(_, &d)| d > floor)
        .map(|(i, &d)| (i as f64, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Iterates until the increment drops below `tol·(1 − r̂)·max(1, ‖x‖)`,
/// where `r̂` is the median of the last three increment ratios, or until
/// `n_max`. Running out of steps is reported through `converged`.
pub fn hyers_limit(f: &MappingUnderTest, x: &Element, tol: f64, n_max: u32) -> Result<HyersLimit> {
    if !(tol > 0.0) {
        return Err(StabError::Precondition(format!("tolerance {tol} must be > 0")));
    }
    if n_max > DEPTH_CAP {
        return Err(StabError::DepthExceeded {
            requested: n_max,
            cap: DEPTH_CAP,
        });
    }
    let scale = x.op_norm().max(1.0);
    let f0 = f.apply(x);
    let noise_floor = 1e-8 * f0.op_norm().max(f64::MIN_POSITIVE);
    let mut prev = f0;
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    let mut n_used = 0;
    for n in 1..=n_max {
        let cur = hyers_iterate(f, x, n)?;
        let inc = cur.sub(&prev)?.op_norm();
        if let Some(&last) = increments.last() {
            if last > 0.0 {
                ratios.push(inc / last);
            }
        }
        increments.push(inc);
        prev = cur;
        n_used = n;
        let r_hat = if ratios.is_empty() {
            0.0
        } else {
            median3(&ratios[ratios.len().saturating_sub(3)..])
        };
        if r_hat < 1.0 && inc <= tol * (1.0 - r_hat) * scale {
            converged = true;
            break;
        }
    }
    let tail_ratio = if ratios.is_empty() {
        0.0
    } else {
        median3(&ratios[ratios.len().saturating_sub(3)..])
    };
    let rate = regression_rate(&increments, noise_floor).unwrap_or(tail_ratio);
    Ok(HyersLimit {
        limit: prev,
        rate,
        n_used,
        converged,
        increments,
    })
}

/// Limits at each point, in order.
pub fn hyers_limits(f: &MappingUnderTest, points: &[Element], tol: f64, n_max: u32) -> Result<Vec<HyersLimit>> {
    points.iter().map(|x| hyers_limit(f, x, tol, n_max)).collect()
}

/// The limit map `x ↦ lim 3^{-n} f(3^n x)`, evaluated on demand. Panics if
/// the orbit of an argument overflows.
pub fn limit_map(f: &MappingUnderTest, tol: f64, n_max: u32) -> MappingUnderTest {
    let inner = f.clone();
    MappingUnderTest::from_fn(
        format!("lim {}", f.label()),
        f.domain().clone(),
        f.codomain().clone(),
        move |x| {
            hyers_limit(&inner, x, tol, n_max)
                .expect("orbit stays below the overflow guard")
                .limit
        },
    )
}

/// One row of a certified inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginRow {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl MarginRow {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub rows: Vec<MarginRow>,
    pub min_margin: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn from_rows(rows: Vec<MarginRow>) -> Self {
        let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let pass = rows.iter().all(|r| r.margin >= -MARGIN_TOL);
        Self { rows, min_margin, pass }
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.margin < -MARGIN_TOL).count()
    }
}

fn check_limits(points: &[Element], limits: &[Element]) -> Result<()> {
    if points.len() != limits.len() {
        return Err(StabError::Precondition(format!(
            "{} points but {} limits",
            points.len(),
            limits.len()
        )));
    }
    if points.iter().any(|x| x.is_zero()) {
        return Err(StabError::ZeroInput);
    }
    Ok(())
}

/// `‖f(x) − T(x)‖ ≤ (φ̃(x, −x, 0) + φ̃(−x, 3x, 0))/3` on every point.
pub fn verify_jensen_bound(
    f: &MappingUnderTest,
    points: &[Element],
    limits: &[Element],
    cf: &ControlFunction,
    mode: PhiMode,
) -> Result<BoundReport> {
    if cf.arity() != 3 {
        return Err(StabError::ArityMismatch {
            expected: 3,
            got: cf.arity(),
        });
    }
    check_limits(points, limits)?;
    let zero = Element::zero(f.domain());
    let mut rows = Vec::with_capacity(points.len());
    for (x, t) in points.iter().zip(limits) {
        let mx = x.scale_real(-1.0);
        let x3 = x.scale_real(3.0);
        let rhs = (cf.phi_tilde(&[x, &mx, &zero], mode)? + cf.phi_tilde(&[&mx, &x3, &zero], mode)?) / 3.0;
        let lhs = f.apply(x).sub(t)?.op_norm();
        rows.push(MarginRow::new(lhs, rhs));
    }
    Ok(BoundReport::from_rows(rows))
}

/// `‖f(x) − h(x)‖ ≤ L/(1−L)·φ(x, 0, 0, 0, 0, 0)` on every point.
pub fn verify_fp_bound(
    f: &MappingUnderTest,
    points: &[Element],
    limits: &[Element],
    cf6: &ControlFunction,
) -> Result<BoundReport> {
    if cf6.arity() != 6 {
        return Err(StabError::ArityMismatch {
            expected: 6,
            got: cf6.arity(),
        });
    }
    check_limits(points, limits)?;
    let l = cf6.lipschitz_l();
    let rows = points
        .iter()
        .zip(limits)
        .map(|(x, h)| {
            let rhs = l / (1.0 - l) * cf6.phi_axis(x);
            let lhs = f.apply(x).sub(h).expect("codomain shape").op_norm();
            MarginRow::new(lhs, rhs)
        })
        .collect();
    Ok(BoundReport::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitalityReport {
    pub unitary_residual: f64,
    pub commutator_residual: f64,
    pub unitary: bool,
    pub central: bool,
}

impl UnitalityReport {
    pub fn pass(&self) -> bool {
        self.unitary && self.central
    }
}

/// Whether `T(e)` is unitary and commutes with every probe, within `tau`.
pub fn unitality_check(t_e: &Element, probes: &[Element], tau: f64) -> UnitalityReport {
    let unitary_residual = t_e.unitary_residual();
    let commutator_residual = t_e.commutator_residual(probes);
    UnitalityReport {
        unitary_residual,
        commutator_residual,
        unitary: unitary_residual <= tau,
        central: commutator_residual <= tau,
    }
}

#[cfg(test)]
mod tests;

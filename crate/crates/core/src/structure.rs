//! Structural decompositions of elements.
//!
//! Every `x` splits as `x1 + i x2` with `x1, x2` self-adjoint. A self-adjoint
//! contraction `a` is the mean of the unitaries `a ± i sqrt(e - a²)`, so any
//! nonzero `x` is a combination of at most four unitaries. In finite
//! dimensions the invertible self-adjoint elements of norm one are dense in
//! the self-adjoint unit sphere; [`rr0_approximate`] produces an explicit
//! approximant by moving eigenvalues away from zero.

use crate::algebra::{Element, C64, I};
use crate::error::{Result, StabError};

/// `(x1, x2)` with `x1 = (x + x*)/2`, `x2 = (x - x*)/(2i)`.
pub fn split_self_adjoint(x: &Element) -> (Element, Element) {
    let xa = x.adjoint();
    let x1 = x.add(&xa).expect("same shape").scale_real(0.5);
    let x2 = x
        .sub(&xa)
        .expect("same shape")
        .scale(C64::new(0.0, -0.5));
    (x1, x2)
}

/// One term `c · u` of a unitary decomposition.
#[derive(Debug, Clone)]
pub struct UnitaryTerm {
    pub coefficient: C64,
    pub unitary: Element,
}

#[derive(Debug, Clone)]
pub struct UnitaryDecomposition {
    pub terms: Vec<UnitaryTerm>,
}

impl UnitaryDecomposition {
    /// `Σ c_j u_j`.
    pub fn reconstruct(&self) -> Element {
        let mut it = self.terms.iter();
        let first = it.next().expect("decomposition has at least one term");
        it.fold(first.unitary.scale(first.coefficient), |acc, t| {
            acc.add(&t.unitary.scale(t.coefficient)).expect("same shape")
        })
    }

    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.norm()).sum()
    }
}

/// Writes `a` (self-adjoint, `‖a‖ = 1`) as `(u + u*)/2` and returns `u`.
fn cayley_unitary(a: &Element) -> Result<Element> {
    let e = Element::unit(a.shape());
    let defect = e.sub(&a.mul(a)?)?;
    let s = defect.sqrt_psd()?;
    a.add(&s.scale(I))
}

/// Decomposes a nonzero `x` into at most four unitaries. Zero self-adjoint
/// parts contribute no terms.
pub fn unitary_decompose(x: &Element) -> Result<UnitaryDecomposition> {
    if x.is_zero() {
        return Err(StabError::ZeroInput);
    }
    let (x1, x2) = split_self_adjoint(x);
    let mut terms = Vec::with_capacity(4);
    for (part, factor) in [(x1, C64::new(1.0, 0.0)), (x2, I)] {
        let norm = part.op_norm();
        if norm == 0.0 {
            continue;
        }
        let a = part.scale_real(1.0 / norm);
        let u = cayley_unitary(&a)?;
        let c = factor * (norm / 2.0);
        let ua = u.adjoint();
        terms.push(UnitaryTerm {
            coefficient: c,
            unitary: u,
        });
        terms.push(UnitaryTerm {
            coefficient: c,
            unitary: ua,
        });
    }
    Ok(UnitaryDecomposition { terms })
}

/// Returns an invertible self-adjoint `z` with `‖z‖ = 1` and `‖z - v‖ ≤ ε`.
///
/// Eigenvalues of `v` in `(-ε/2, ε/2)` move to `±ε/2` (zero goes to `+ε/2`)
/// and the result is rescaled to norm one. If no eigenvalue needs moving,
/// `v` is returned unchanged.
pub fn rr0_approximate(v: &Element, eps: f64) -> Result<Element> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(StabError::Precondition(format!(
            "ε = {eps} outside (0, 1/2)"
        )));
    }
    let eig = v.herm_eig()?;
    let norm = eig.max_abs_eigenvalue();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(StabError::Precondition(format!(
            "‖v‖ = {norm} is not 1"
        )));
    }
    let half = eps / 2.0;
    if eig.min_abs_eigenvalue() >= half {
        return Ok(v.clone());
    }
    let shifted: Vec<Vec<f64>> = eig
        .eigenvalues
        .iter()
        .map(|vals| {
            vals.iter()
                .map(|&l| {
                    if l.abs() >= half {
                        l
                    } else if l < 0.0 {
                        -half
                    } else {
                        half
                    }
                })
                .collect()
        })
        .collect();
    let new_norm = shifted.iter().flatten().fold(0.0f64, |m, l| m.max(l.abs()));
    let mut moved = eig.clone();
    moved.eigenvalues = shifted;
    Ok(moved.map_eigenvalues(v.shape(), |l| l / new_norm))
}

/// Membership test for `I_1(A_sa)`: self-adjoint, norm one, invertible.
pub fn in_invertible_unit_sphere(z: &Element, tau: f64) -> bool {
    z.is_self_adjoint(tau) && (z.op_norm() - 1.0).abs() <= tau && z.is_invertible(tau)
}

use stab_core::algebra::{random_element, random_self_adjoint, AlgebraShape};
use stab_core::hyers::MarginRow;
use stab_core::mappings::{jordan_defect, multiplicative_defect, transpose_map};
use stab_core::structure::{rr0_approximate, unitary_decompose};

use super::{seed, stream};
use crate::config::ExperimentConfig;
use crate::report::{Check, Role, StabilityReport};
use crate::RunError;

const RR0_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Randomized invariant suites for the algebra layer, plus the transpose
/// map as a Jordan map that is not multiplicative.
pub fn verify_algebra(cfg: &ExperimentConfig, report: &mut StabilityReport) -> Result<(), RunError> {
    let dom = cfg.domain()?;
    let tol = &cfg.tolerances;
    let trials = cfg.sampling.trials;
    let (mut cstar, mut eig, mut dec, mut near, mut member, mut invertible) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..trials {
        let s = seed(cfg, stream::TRIALS, k);
        let x = random_element(&dom, s);
        let n = x.op_norm();
        let xsx = x.adjoint().mul(&x)?.op_norm();
        cstar.push(MarginRow::new((xsx - n * n).abs(), tol.cstar * n * n));

        let a = random_self_adjoint(&dom, s);
        let rec = a.herm_eig()?.reconstruct(&dom);
        eig.push(MarginRow::new(rec.sub(&a)?.op_norm(), tol.eigen));

        let ud = unitary_decompose(&x)?;
        dec.push(MarginRow::new(ud.reconstruct().sub(&x)?.op_norm(), tol.decomposition));

        let eps = RR0_EPS[k % RR0_EPS.len()];
        let mut v = a.scale_real(1.0 / a.op_norm());
        if k % 2 == 1 {
            let d = v.herm_eig()?;
            let smallest = d.min_abs_eigenvalue();
            v = d.map_eigenvalues(&dom, |l| if l.abs() == smallest { 0.0 } else { l });
            v = v.scale_real(1.0 / v.op_norm());
        }
        let z = rr0_approximate(&v, eps)?;
        near.push(MarginRow::new(z.sub(&v)?.op_norm(), eps));
        member.push(MarginRow::new(
            (z.op_norm() - 1.0).abs().max(z.self_adjoint_residual()),
            stab_core::algebra::TAU_SA,
        ));
        invertible.push(MarginRow::new(eps / 2.0, z.min_singular_value() * (1.0 + 1e-12)));
    }
    report.push(Check::table("C*-identity |‖x*x‖ − ‖x‖²| ≤ tol·‖x‖²", Role::Invariant, cstar, 0.0));
    report.push(Check::table("eigendecomposition reconstructs the input", Role::Invariant, eig, 0.0));
    report.push(Check::table("unitary decomposition reconstructs the input", Role::Invariant, dec, 0.0));
    report.push(Check::table("invertible approximation stays within ε", Role::Invariant, near, 0.0));
    report.push(Check::table("invertible approximation is self-adjoint of norm 1", Role::Invariant, member, 0.0));
    report.push(Check::table(
        "invertible approximation has smallest singular value ≥ ε/2",
        Role::Invariant,
        invertible,
        0.0,
    ));

    let m2 = AlgebraShape::new(vec![2])?;
    let t = transpose_map(&m2);
    let mut worst_mult: f64 = 0.0;
    let mut jordan = Vec::with_capacity(trials);
    for k in 0..trials {
        let x = random_element(&m2, seed(cfg, stream::PAIRS, 2 * k));
        let y = random_element(&m2, seed(cfg, stream::PAIRS, 2 * k + 1));
        worst_mult = worst_mult.max(multiplicative_defect(&t, &x, &y)?);
        jordan.push(MarginRow::new(jordan_defect(&t, &x, &y)?, 1e-12));
    }
    report.push(
        Check::le("transpose on M2 is not multiplicative", Role::NegativeControl, 0.1, worst_mult)
            .note("largest ‖(xy)ᵀ − xᵀyᵀ‖ must exceed 0.1"),
    );
    report.push(Check::table("transpose on M2 is a Jordan map", Role::NegativeControl, jordan, 0.0));
    Ok(())
}

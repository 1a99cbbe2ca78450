use serde_json::json;
use stab_core::algebra::{random_element, random_self_adjoint, Element, I};
use stab_core::hyers::{hyers_limit, unitality_check, MarginRow};
use stab_core::mappings::{jordan_defect, premise21_defect, star_defect, DefectKind, MappingUnderTest, PremisePath};
use stab_core::structure::{rr0_approximate, split_self_adjoint};
use stab_core::{C64, Result as CoreResult};

use super::{seed, stream, samples, theta_for};
use crate::config::ExperimentConfig;
use crate::report::{Check, Role, StabilityReport};
use crate::RunError;

/// The sequence of `ε` for the density surrogate.
pub const DENSITY_EPS: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Hypotheses over unitaries, unitality, and the Jordan and star
/// conclusions for the mapping itself.
pub fn audit_theorem21(cfg: &ExperimentConfig, report: &mut StabilityReport) -> Result<(), RunError> {
    let f = cfg.mapping()?;
    let set = samples(cfg)?;
    let us = set.unitaries().to_vec();
    premise_table(cfg, report, &f, &us, set.base_points(), PremisePath::Unitary)?;
    common_premises(cfg, report, &f, &set)?;
    conclusions(cfg, report, &f, set.base_points())
}

/// As [`audit_theorem21`] with the premise over invertible self-adjoint
/// elements of norm one, plus the continuity surrogate and the three-case
/// reconstruction.
pub fn audit_theorem23(cfg: &ExperimentConfig, report: &mut StabilityReport) -> Result<(), RunError> {
    let f = cfg.mapping()?;
    let dom = cfg.domain()?;
    let set = samples(cfg)?;
    let us = (0..cfg.sampling.unitaries.max(1))
        .map(|k| {
            let v = random_self_adjoint(&dom, seed(cfg, stream::SELF_ADJOINT, k));
            rr0_approximate(&v.scale_real(1.0 / v.op_norm()), cfg.tolerances.rr0_eps)
        })
        .collect::<CoreResult<Vec<_>>>()?;
    premise_table(cfg, report, &f, &us, set.base_points(), PremisePath::InvertibleSelfAdjoint)?;
    common_premises(cfg, report, &f, &set)?;
    density_surrogate(cfg, report, &f, set.base_points())?;
    three_case_table(cfg, report, &f, set.base_points())?;
    conclusions(cfg, report, &f, set.base_points())
}

/// `f(uy + yu) − f(u)f(y) − f(y)f(u)`, with no membership requirement on `u`.
fn premise_term(f: &MappingUnderTest, u: &Element, y: &Element) -> CoreResult<Element> {
    f.apply(&u.jordan_product(y)?).sub(&f.apply(u).jordan_product(&f.apply(y))?)
}

fn premise_table(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    us: &[Element],
    ys: &[Element],
    path: PremisePath,
) -> Result<(), RunError> {
    let mut rows = Vec::new();
    for (k, u) in us.iter().enumerate() {
        for (i, y) in ys.iter().enumerate() {
            let budget = cfg.tolerances.premise * y.op_norm().max(1.0);
            let mut worst: f64 = 0.0;
            for n in 0..=cfg.sampling.premise_depth {
                let d = premise21_defect(f, u, y, n, path)?;
                worst = worst.max(d / 3f64.powi(n as i32));
                rows.push(MarginRow::new(d, budget * 3f64.powi(n as i32)));
            }
            report.record("premise", k * ys.len() + i, None, json!({ "max_scaled_defect": worst }));
        }
    }
    let name = match path {
        PremisePath::Unitary => "premise: f(3^n(uy + yu)) = f(3^n u)f(y) + f(y)f(3^n u), u unitary",
        PremisePath::InvertibleSelfAdjoint => {
            "premise: f(3^n(uy + yu)) = f(3^n u)f(y) + f(y)f(3^n u), u invertible self-adjoint of norm 1"
        }
    };
    report.push(
        Check::table(name, Role::Premise, rows, 0.0)
            .note("budget scales with 3^n·max(1, ‖y‖) to absorb the growth of rounding error"),
    );
    Ok(())
}

fn common_premises(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    set: &stab_core::hyers::SampleSet,
) -> Result<(), RunError> {
    let theta = theta_for(cfg, report, f, set, DefectKind::Jensen)?;
    let fitted = report.fitted["theta_jensen_fitted"].0;
    let budget = cfg.control.theta.unwrap_or(f64::INFINITY);
    report.push(
        Check::le("premise: Jensen inequality with φ = θ Σ‖·‖^p", Role::Premise, fitted, budget)
            .note(format!("θ = {theta}; φ̃ is finite for p < 1")),
    );

    let tol = &cfg.tolerances;
    let e = Element::unit(f.domain());
    let t_e = hyers_limit(f, &e, tol.hyers, tol.hyers_max_steps)?.limit;
    let cod = f.codomain().clone();
    let probes: Vec<Element> = (0..cfg.sampling.probes)
        .map(|k| random_element(&cod, seed(cfg, stream::PROBES, k)))
        .collect();
    let u = unitality_check(&t_e, &probes, tol.unitality);
    report.record("unitality", 0, None, u);
    report.push(Check::le("premise: lim 3^-n f(3^n e) is unitary", Role::Premise, u.unitary_residual, tol.unitality));
    report.push(Check::le(
        "premise: lim 3^-n f(3^n e) is central",
        Role::Premise,
        u.commutator_residual,
        tol.unitality,
    ));
    Ok(())
}

/// A norm-one self-adjoint element whose smallest eigenvalue is moved to 0,
/// so that the invertible approximation has to move it.
fn singular_self_adjoint(cfg: &ExperimentConfig, k: usize) -> Result<Element, RunError> {
    let dom = cfg.domain()?;
    let v = random_self_adjoint(&dom, seed(cfg, stream::SELF_ADJOINT, 500 + k));
    let dec = v.herm_eig()?;
    let smallest = dec.min_abs_eigenvalue();
    let w = dec.map_eigenvalues(&dom, |l| if l.abs() == smallest { 0.0 } else { l });
    Ok(w.scale_real(1.0 / w.op_norm()))
}

fn density_surrogate(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    ys: &[Element],
) -> Result<(), RunError> {
    let mut rows = Vec::new();
    for k in 0..cfg.sampling.unitaries.max(1) {
        let v = singular_self_adjoint(cfg, k)?;
        let y = &ys[k % ys.len()];
        let fv = f.apply(&v);
        let pv = premise_term(f, &v, y)?;
        let mut deltas = Vec::with_capacity(DENSITY_EPS.len());
        for (j, &eps) in DENSITY_EPS.iter().enumerate() {
            let z = rr0_approximate(&v, eps)?;
            let delta = f.apply(&z).sub(&fv)?.op_norm() + premise_term(f, &z, y)?.sub(&pv)?.op_norm();
            report.record(
                "density",
                k,
                Some(j as u32),
                json!({"eps": eps, "delta": delta, "distance": z.sub(&v)?.op_norm()}),
            );
            deltas.push(delta);
        }
        let c0 = deltas[0] / DENSITY_EPS[0];
        for (d, &eps) in deltas.iter().zip(&DENSITY_EPS).skip(1) {
            rows.push(MarginRow::new(*d, cfg.tolerances.density_factor * c0 * eps));
        }
    }
    report.push(
        Check::table(
            "premise (continuity surrogate): deltas at the invertible approximations shrink linearly in ε",
            Role::Premise,
            rows,
            0.0,
        )
        .surrogate()
        .note("δ(ε) = ‖f(z_ε) − f(v)‖ + ‖P(z_ε) − P(v)‖ with P(u) = f(uy + yu) − f(u)f(y) − f(y)f(u), v singular"),
    );
    Ok(())
}

/// Jordan defect rebuilt from the self-adjoint parts `x = ‖x1‖ w1 + i‖x2‖ w2`,
/// against the direct one, for `x` self-adjoint, skew-adjoint and general.
fn three_case_table(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    pts: &[Element],
) -> Result<(), RunError> {
    let mut rows = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        let y = &pts[(i + 1) % pts.len()];
        let (x1, x2) = split_self_adjoint(x);
        let cases = [("x2 = 0", x1.clone()), ("x1 = 0", x2.scale(I)), ("both nonzero", x.clone())];
        for (case, xc) in cases {
            let (a, b) = split_self_adjoint(&xc);
            let mut acc = Element::zero(f.codomain());
            for (part, c) in [(a, C64::new(1.0, 0.0)), (b, I)] {
                let n = part.op_norm();
                if n == 0.0 {
                    continue;
                }
                let w = part.scale_real(1.0 / n);
                acc = acc.add(&premise_term(f, &w, y)?.scale(c * n))?;
            }
            let route = acc.op_norm();
            let direct = jordan_defect(f, &xc, y)?;
            report.record("three-case", i, None, json!({"case": case, "route": route, "direct": direct}));
            rows.push(MarginRow::new((route - direct).abs(), cfg.tolerances.two_route));
        }
    }
    report.push(Check::table(
        "three-case reconstruction matches the direct Jordan defect",
        Role::Intermediate,
        rows,
        0.0,
    ));
    Ok(())
}

fn conclusions(
    cfg: &ExperimentConfig,
    report: &mut StabilityReport,
    f: &MappingUnderTest,
    pts: &[Element],
) -> Result<(), RunError> {
    let tol = cfg.tolerances.conclusion;
    let mut jd = Vec::new();
    let mut sd = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        let y = &pts[(i + 1) % pts.len()];
        jd.push(MarginRow::new(jordan_defect(f, x, y)?, tol));
        sd.push(MarginRow::new(star_defect(f, x), tol));
        report.record("conclusion", i, None, json!({"jordan": jd[i].lhs, "star": sd[i].lhs}));
    }
    report.push(Check::table("conclusion: f(xy + yx) = f(x)f(y) + f(y)f(x)", Role::Conclusion, jd, 0.0));
    report.push(Check::table("conclusion: f(x*) = f(x)*", Role::Conclusion, sd, 0.0));
    Ok(())
}

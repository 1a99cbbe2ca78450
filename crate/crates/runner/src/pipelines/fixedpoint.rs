use stab_core::fixedpoint::{
    alternative_audit, contraction_witness, third_scaling_check, triple_scaling_check, tweaked_start, AuditSettings,
    BOUND_TOL, CONTRACTION_TOL, UNIQUENESS_TOL,
};
use stab_core::hyers::verify_fp_bound;
use stab_core::mappings::DefectKind;

use super::{control, samples, theta_for};
use crate::config::ExperimentConfig;
use crate::report::{Check, Role, StabilityReport};
use crate::RunError;

/// The fixed-point alternative for `J h(x) = h(3x)/3`, with the two scaling
/// inequalities as intermediate steps.
pub fn run_fixedpoint(cfg: &ExperimentConfig, report: &mut StabilityReport) -> Result<(), RunError> {
    let f = cfg.mapping()?;
    let set = samples(cfg)?;
    let pts = set.base_points();
    let theta = theta_for(cfg, report, &f, &set, DefectKind::Composite)?;
    let cf6 = control(theta, cfg.control.p, 6)?;
    let l = cf6.lipschitz_l();
    report.fit("lipschitz_l", l);

    let settings = AuditSettings {
        m_max: cfg.sampling.m_max,
        hyers_tol: cfg.tolerances.hyers,
        n_max: cfg.tolerances.hyers_max_steps,
        ..AuditSettings::default()
    };
    let audit = alternative_audit(&f, &set, &cf6, &settings)?;
    for r in &audit.records {
        report.record("orbit", 0, Some(r.m), r);
    }
    if let Some(r0) = audit.records.first() {
        report.fit("d(f, Jf)", r0.d.value());
        report.fit("d(f, h)", r0.to_limit.value());
    }

    let c1 = &audit.clause_i;
    let infinite_after_m0 = match c1.m0 {
        Some(m0) => audit.records[m0 as usize..].iter().filter(|r| !r.d.is_finite()).count(),
        None => audit.records.len(),
    };
    let mut finiteness = Check::le(
        "(i) d(J^m f, J^{m+1} f) finite from m0 on",
        Role::Conclusion,
        infinite_after_m0 as f64,
        0.0,
    )
    .note(match c1.m0 {
        Some(m0) => format!("m0 = {m0}"),
        None => "every distance is infinite; that branch cannot be confirmed by a finite run".into(),
    });
    if c1.all_infinite {
        finiteness.verdict = crate::Verdict::NotApplicable;
    }
    report.push(finiteness);
    report.push(
        Check::table("(i) geometric decay with ratio ≤ L + 1e-6", Role::Conclusion, c1.rows.clone(), 0.0)
            .note(format!("largest ratio {}, {} steps above the floors", c1.max_ratio, c1.checked_steps)),
    );
    report.push(
        Check::table("(ii) d(J^m f, h) ≤ L^m/(1 − L)·d(f, Jf)", Role::Conclusion, audit.clause_ii.rows.clone(), BOUND_TOL)
            .note(format!("pointwise gap at m_max: {}", audit.clause_ii.pointwise_gap)),
    );
    let c3 = &audit.clause_iii;
    let in_lambda = c3.start_distances.iter().all(|d| d.is_finite());
    report.push(
        Check::le(
            "(iii) limits from other starts in Λ agree",
            Role::Conclusion,
            if in_lambda { c3.max_deviation } else { f64::INFINITY },
            UNIQUENESS_TOL,
        )
        .note(format!("d(f, g_k) = {}, {}", c3.start_distances[0], c3.start_distances[1])),
    );
    let c4 = &audit.clause_iv;
    let mut iv = Check::le("(iv) d(f, h) ≤ d(f, Jf)/(1 − L)", Role::Conclusion, c4.lhs.value(), c4.allowed);
    iv.verdict = if c4.pass { crate::Verdict::Pass } else { crate::Verdict::Fail };
    report.push(iv.note(format!(
        "d(f, Jf)/(1 − L) = {}; rhs adds {BOUND_TOL} and the rounding and limit floors",
        c4.rhs
    )));

    let fp = verify_fp_bound(&f, pts, &audit.limits, &cf6)?;
    report.push(Check::bound("fixed-point stability bound ‖f − h‖ ≤ L/(1 − L)·φ(x,0,…,0)", Role::Conclusion, &fp));
    let orbit = set.orbit_points();
    report.push(Check::bound("‖3f(x/3) − f(x)‖ ≤ φ(x,0,…,0)", Role::Intermediate, &third_scaling_check(&f, &orbit, &cf6)));
    report.push(Check::bound("‖f(3x)/3 − f(x)‖ ≤ L·φ(x,0,…,0)", Role::Intermediate, &triple_scaling_check(&f, &orbit, &cf6)));

    let name = "d(Jf, Jg) ≤ L·d(f, g)";
    if set.depth() == 0 {
        report.push(Check::le(name, Role::Invariant, 0.0, 0.0).not_applicable("needs orbit depth ≥ 1"));
    } else {
        let g = tweaked_start(&f, settings.kappa, cfg.control.p, settings.tweak_seeds[0]);
        let w = contraction_witness(&f, &g, &set, &cf6)?;
        let mut c = Check::le(name, Role::Invariant, w.lhs.value(), w.rhs.value() + CONTRACTION_TOL + w.rounding);
        c.verdict = if w.pass { crate::Verdict::Pass } else { crate::Verdict::Fail };
        report.push(c.note(format!(
            "L·d(f, g) = {}; rhs adds {CONTRACTION_TOL} and a rounding floor of {}",
            w.rhs, w.rounding
        )));
    }
    Ok(())
}

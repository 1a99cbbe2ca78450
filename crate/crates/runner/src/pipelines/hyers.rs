use serde_json::json;
use stab_core::algebra::Element;
use stab_core::control::fp_bound_constant_forms;
use stab_core::hyers::{hyers_limits, limit_map, verify_fp_bound, verify_jensen_bound, MarginRow, MARGIN_TOL};
use stab_core::mappings::{
    additivity_defect, homogeneity_defect, jordan_defect, mu_net, star_defect, DefectKind, PerturbationSpec,
};
use stab_core::control::PhiMode;

use super::{control, samples, theta_for};
use crate::config::ExperimentConfig;
use crate::report::{Check, Role, StabilityReport};
use crate::RunError;

/// Perturbed mapping, fitted controls, Hyers limits, the two stability
/// bounds, the convergence rate and the recovered map.
pub fn run_hyers(cfg: &ExperimentConfig, report: &mut StabilityReport) -> Result<(), RunError> {
    let f = cfg.mapping()?;
    let h0 = cfg.base_mapping()?;
    let pert = cfg.perturbation_spec(f.codomain())?;
    let set = samples(cfg)?;
    let pts = set.base_points();
    let p = cfg.control.p;
    let tol = &cfg.tolerances;

    let theta3 = theta_for(cfg, report, &f, &set, DefectKind::Jensen)?;
    let theta6 = theta_for(cfg, report, &f, &set, DefectKind::Composite)?;
    let theta_s = stab_core::mappings::fit_theta(&f, &set, p, DefectKind::Scaling)?;
    report.fit("theta_scaling_fitted", theta_s);
    let cf3 = control(theta3, p, 3)?;
    let cf6 = control(theta6, p, 6)?;
    let l = cf6.lipschitz_l();
    report.fit("lipschitz_l", l);
    report.fit("fp_bound_constant", cf6.fp_bound_constant());

    let limits = hyers_limits(&f, pts, tol.hyers, tol.hyers_max_steps)?;
    for (i, r) in limits.iter().enumerate() {
        report.record(
            "hyers-limit",
            i,
            Some(r.n_used),
            json!({
                "rate": r.rate,
                "converged": r.converged,
                "last_increment": r.last_increment(),
                "increments": r.increments,
            }),
        );
    }
    let limit_values: Vec<Element> = limits.iter().map(|r| r.limit.clone()).collect();

    let (a, b) = fp_bound_constant_forms(theta6, p);
    report.push(
        Check::le("bound constant: 3^p θ/(3 − 3^p) = L θ/(1 − L)", Role::Invariant, (a - b).abs(), 1e-12 * a.max(1.0))
            .note(format!("constant {a}")),
    );

    let zero = Element::zero(f.domain());
    let mut rows = Vec::with_capacity(2 * pts.len());
    for x in pts {
        let mx = x.scale_real(-1.0);
        let x3 = x.scale_real(3.0);
        for args in [[x, &mx, &zero], [&mx, &x3, &zero]] {
            let closed = cf3.phi_tilde(&args, PhiMode::Closed)?;
            let partial = cf3.phi_tilde(&args, PhiMode::Partial(cfg.control.partial_n))?;
            let rel = if closed == 0.0 { 0.0 } else { (closed - partial).abs() / closed };
            rows.push(MarginRow::new(rel, tol.partial_sum));
        }
    }
    report.push(Check::table(
        &format!("φ̃ closed form against {} partial terms", cfg.control.partial_n),
        Role::Invariant,
        rows,
        0.0,
    ));

    let jensen = verify_jensen_bound(&f, pts, &limit_values, &cf3, cfg.control.phi_mode())?;
    report.push(Check::bound("Jensen stability bound ‖f − T‖ ≤ (φ̃(x,−x,0) + φ̃(−x,3x,0))/3", Role::Conclusion, &jensen));
    let fp = verify_fp_bound(&f, pts, &limit_values, &cf6)?;
    report.push(Check::bound("fixed-point stability bound ‖f − h‖ ≤ L/(1 − L)·φ(x,0,…,0)", Role::Conclusion, &fp));

    let rate_name = "Hyers increment ratio equals L";
    let rate_check = match &pert {
        PerturbationSpec::Radial { theta_prime, .. } if *theta_prime > 0.0 => {
            let rows = limits
                .iter()
                .map(|r| MarginRow::new((r.rate - l).abs() / l, tol.rate))
                .collect();
            Check::table(rate_name, Role::Conclusion, rows, 0.0)
        }
        _ => Check::le(rate_name, Role::Conclusion, 0.0, tol.rate)
            .not_applicable("the increments are geometric only under a homogeneous radial perturbation"),
    };
    report.push(rate_check);

    let rows = pts
        .iter()
        .zip(&limit_values)
        .map(|(x, h)| {
            let d = h.sub(&h0.apply(x)).expect("codomain shape").op_norm();
            MarginRow::new(d, tol.recovery * x.op_norm().max(1.0))
        })
        .collect();
    report.push(Check::table("recovered map equals the planted map", Role::Conclusion, rows, 0.0));

    let h = limit_map(&f, tol.hyers, tol.hyers_max_steps);
    let net = mu_net();
    let (mut jd, mut sd, mut ad, mut hd) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, x) in pts.iter().enumerate() {
        let y = &pts[(i + 1) % pts.len()];
        jd.push(MarginRow::new(jordan_defect(&h, x, y)?, tol.recovery));
        sd.push(MarginRow::new(star_defect(&h, x), tol.recovery));
        ad.push(MarginRow::new(additivity_defect(&h, x, y)?, tol.recovery));
        hd.push(MarginRow::new(homogeneity_defect(&h, net[i % net.len()], x), tol.recovery));
        report.record(
            "recovered-defects",
            i,
            None,
            json!({"jordan": jd[i].lhs, "star": sd[i].lhs, "additivity": ad[i].lhs, "homogeneity": hd[i].lhs}),
        );
    }
    report.push(Check::table("recovered map: Jordan defect", Role::Conclusion, jd, 0.0));
    report.push(Check::table("recovered map: star defect", Role::Conclusion, sd, 0.0));
    report.push(Check::table("recovered map: additivity defect", Role::Conclusion, ad, 0.0));
    report.push(Check::table("recovered map: homogeneity defect", Role::Conclusion, hd, 0.0));

    let name = "halved scaling θ is caught by the fixed-point bound";
    let check = if theta_s > tol.theta_floor {
        let half = control(theta_s / 2.0, p, 6)?;
        let rep = verify_fp_bound(&f, pts, &limit_values, &half)?;
        Check::le(name, Role::NegativeControl, rep.min_margin, -MARGIN_TOL)
            .note(format!("{} of {} rows violated", rep.violations(), rep.rows.len()))
    } else {
        Check::le(name, Role::NegativeControl, 0.0, -MARGIN_TOL).not_applicable("no perturbation to detect")
    };
    report.push(check);
    Ok(())
}

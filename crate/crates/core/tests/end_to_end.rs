//! Planted map → perturbation → fitted control → Hyers limit → bounds, through
//! the public API only.

use stab_core::control::{ControlFunction, ControlParams, PhiMode};
use stab_core::fixedpoint::{alternative_audit, AuditSettings};
use stab_core::hyers::{hyers_limits, verify_fp_bound, verify_jensen_bound, SampleSet};
use stab_core::mappings::{
    fit_theta, jordan_defect, make_jordan_hom, make_perturbed, star_defect, unit_direction, DefectKind, MappingSpec,
    PerturbationSpec,
};
use stab_core::{AlgebraShape, Element};

const TP: f64 = 0.1;
const P: f64 = 0.5;

fn scenario() -> (stab_core::mappings::MappingUnderTest, stab_core::mappings::MappingUnderTest, SampleSet) {
    let shape = AlgebraShape::new(vec![2, 3]).unwrap();
    let h0 = make_jordan_hom(&MappingSpec::planted(&shape, 7)).unwrap();
    let pert = PerturbationSpec::Radial {
        theta_prime: TP,
        p: P,
        direction: unit_direction(&shape, 99),
    };
    let f = make_perturbed(&h0, &pert).unwrap();
    let set = SampleSet::random(&shape, 12, 12, 3, 42).unwrap();
    (h0, f, set)
}

fn control(theta: f64, arity: usize) -> ControlFunction {
    ControlFunction::new(ControlParams::new(theta, P).unwrap(), arity).unwrap()
}

#[test]
fn radial_perturbation_is_recovered_and_bounded() {
    let (h0, f, set) = scenario();
    let pts = set.base_points();

    // f − h0 is θ'‖x‖^p times a unit vector
    for x in pts {
        let gap = f.apply(x).sub(&h0.apply(x)).unwrap().op_norm();
        assert!((gap - TP * x.op_norm().powf(P)).abs() <= 1e-12 * gap.max(1.0));
    }

    let limits = hyers_limits(&f, pts, 1e-12, 60).unwrap();
    for (x, r) in pts.iter().zip(&limits) {
        let d = r.limit.sub(&h0.apply(x)).unwrap().op_norm();
        assert!(d <= 1e-8 * x.op_norm().max(1.0), "‖h − h0‖ = {d}");
        assert!((r.rate - 3f64.powf(P - 1.0)).abs() <= 1e-6 * 3f64.powf(P - 1.0));
    }
    let values: Vec<Element> = limits.iter().map(|r| r.limit.clone()).collect();

    let theta3 = fit_theta(&f, &set, P, DefectKind::Jensen).unwrap();
    let theta6 = fit_theta(&f, &set, P, DefectKind::Composite).unwrap();
    let theta_s = fit_theta(&f, &set, P, DefectKind::Scaling).unwrap();
    assert!((theta_s - TP * (3f64.powf(1.0 - P) - 1.0)).abs() <= 1e-12);
    assert!(theta6 >= theta_s);

    let jensen = verify_jensen_bound(&f, pts, &values, &control(theta3, 3), PhiMode::Closed).unwrap();
    assert_eq!(jensen.violations(), 0, "worst margin {}", jensen.min_margin);
    let fp = verify_fp_bound(&f, pts, &values, &control(theta6, 6)).unwrap();
    assert_eq!(fp.violations(), 0, "worst margin {}", fp.min_margin);

    // the scaling instance alone makes the bound exact; half of it is too small
    let tight = verify_fp_bound(&f, pts, &values, &control(theta_s, 6)).unwrap();
    assert!(tight.min_margin.abs() <= 1e-9, "tight margin {}", tight.min_margin);
    let half = verify_fp_bound(&f, pts, &values, &control(theta_s / 2.0, 6)).unwrap();
    assert_eq!(half.violations(), pts.len());
}

#[test]
fn fixed_point_audit_passes_on_the_radial_family() {
    let (_, f, set) = scenario();
    let theta6 = fit_theta(&f, &set, P, DefectKind::Composite).unwrap();
    let settings = AuditSettings { m_max: 10, ..AuditSettings::default() };
    let audit = alternative_audit(&f, &set, &control(theta6, 6), &settings).unwrap();
    assert!(audit.pass(), "{:?} {:?} {:?} {:?}", audit.clause_i.pass, audit.clause_ii.pass, audit.clause_iii.pass, audit.clause_iv.pass);
    assert_eq!(audit.records.len(), 11);
    assert_eq!(audit.clause_i.m0, Some(0));
}

#[test]
fn exact_map_has_no_defects_and_fits_zero() {
    let (h0, _, set) = scenario();
    for kind in [DefectKind::Jensen, DefectKind::Composite, DefectKind::Scaling] {
        assert!(fit_theta(&h0, &set, P, kind).unwrap() <= 1e-9);
    }
    let pts = set.base_points();
    for (i, x) in pts.iter().enumerate() {
        let y = &pts[(i + 1) % pts.len()];
        assert!(jordan_defect(&h0, x, y).unwrap() <= 1e-9 * x.op_norm().max(1.0) * y.op_norm().max(1.0));
        assert!(star_defect(&h0, x) <= 1e-12 * x.op_norm().max(1.0));
    }
}

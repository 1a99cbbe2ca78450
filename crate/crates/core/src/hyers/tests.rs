use super::*;
use crate::algebra::AlgebraShape;
use crate::control::ControlParams;
use crate::mappings::{make_jordan_hom, make_perturbed, unit_direction, MappingSpec, PerturbationSpec};

fn shape(d: &[usize]) -> AlgebraShape {
    AlgebraShape::new(d.to_vec()).unwrap()
}

fn planted(s: &AlgebraShape) -> MappingUnderTest {
    make_jordan_hom(&MappingSpec::planted(s, 7)).unwrap()
}

fn radial(s: &AlgebraShape, tp: f64, p: f64) -> (MappingUnderTest, MappingUnderTest) {
    let h0 = planted(s);
    let f = make_perturbed(
        &h0,
        &PerturbationSpec::Radial {
            theta_prime: tp,
            p,
            direction: unit_direction(s, 99),
        },
    )
    .unwrap();
    (h0, f)
}

fn cf(theta: f64, p: f64, arity: usize) -> ControlFunction {
    ControlFunction::new(ControlParams::new(theta, p).unwrap(), arity).unwrap()
}

fn dist(a: &Element, b: &Element) -> f64 {
    a.sub(b).unwrap().op_norm()
}

#[test]
fn sample_set_validation() {
    let s = shape(&[2, 3]);
    assert!(SampleSet::new(vec![], 3).is_err());
    assert!(matches!(SampleSet::new(vec![Element::zero(&s)], 3), Err(StabError::ZeroInput)));
    let x = random_element(&s, 1);
    assert!(matches!(
        SampleSet::new(vec![x.clone()], 61),
        Err(StabError::DepthExceeded { .. })
    ));
    assert!(SampleSet::new(vec![x.clone()], 60).is_ok());
    assert!(SampleSet::new(vec![x.scale_real(1e230)], 60).is_err());
    assert!(SampleSet::new(vec![x.clone(), random_element(&shape(&[2]), 1)], 3).is_err());
    let set = SampleSet::new(vec![x.clone()], 3).unwrap();
    assert!(set.clone().with_unitaries(vec![x.clone()]).is_err());
    assert!(set.with_unitaries(vec![random_unitary(&s, 2)]).is_ok());
}

#[test]
fn random_sample_sets() {
    let s = shape(&[2, 3]);
    let a = SampleSet::random(&s, 64, 40, 8, 42).unwrap();
    let b = SampleSet::random(&s, 64, 40, 8, 42).unwrap();
    assert_eq!(a.base_points(), b.base_points());
    assert_eq!(a.len(), 64);
    assert_eq!(a.unitaries().len(), 8);
    for x in a.base_points() {
        let n = x.op_norm();
        assert!((0.1 - 1e-12..=10.0 + 1e-12).contains(&n));
    }
    let lvl: Vec<Element> = a.level(2).collect();
    assert!(dist(&lvl[0], &a.base_points()[0].scale_real(9.0)) == 0.0);
    assert_eq!(a.orbit_points().len(), 64 * 41);
    assert_eq!(a.levels(1, 40).len(), 64 * 40);
}

#[test]
fn iterate_examples() {
    let s = shape(&[2, 3]);
    let h0 = planted(&s);
    let x = random_element(&s, 3);
    for n in [0u32, 1, 10, 40, 60] {
        let v = hyers_iterate(&h0, &x, n).unwrap();
        assert!(dist(&v, &h0.apply(&x)) <= 1e-12 * x.op_norm());
    }
    let (_, f) = radial(&s, 0.1, 0.5);
    assert_eq!(hyers_iterate(&f, &x, 0).unwrap(), f.apply(&x));
    assert!(matches!(hyers_iterate(&f, &x, 61), Err(StabError::DepthExceeded { .. })));
    assert!(matches!(
        hyers_iterate(&f, &x.scale_real(1e240), 30),
        Err(StabError::Overflow { .. })
    ));
}

#[test]
fn iterate_radial_closed_form() {
    let s = shape(&[2, 3]);
    for p in [0.2, 0.5, 0.8] {
        let (h0, f) = radial(&s, 0.1, p);
        let x = random_element(&s, 5).scale_real(2.5);
        let nx = x.op_norm();
        for n in 0..=15u32 {
            let got = dist(&hyers_iterate(&f, &x, n).unwrap(), &h0.apply(&x));
            let want = 0.1 * 3f64.powf(n as f64 * (p - 1.0)) * nx.powf(p);
            assert!((got - want).abs() <= 1e-12 * want + 1e-15 * nx, "p={p} n={n}");
        }
    }
}

#[test]
fn geometric_convergence_ratio() {
    // Ratios are resolved to 1e-10 while ‖h_n − h₀‖ stays well above the
    // rounding floor of h₀(x), i.e. for the first dozen steps.
    let s = shape(&[2, 3]);
    let (tp, p) = (0.1, 0.5);
    let (h0, f) = radial(&s, tp, p);
    let l = 3f64.powf(p - 1.0);
    let x = random_element(&s, 8);
    let x = x.scale_real(1.0 / x.op_norm());
    let mut prev = dist(&f.apply(&x), &h0.apply(&x));
    for n in 1..=12u32 {
        let cur = dist(&hyers_iterate(&f, &x, n).unwrap(), &h0.apply(&x));
        assert!((cur / prev - l).abs() <= 1e-10 * l, "n={n}");
        prev = cur;
    }
}

#[test]
fn limit_of_exact_map_stops_at_once() {
    let s = shape(&[2, 3]);
    let h0 = planted(&s);
    let x = random_element(&s, 2);
    let r = hyers_limit(&h0, &x, 1e-12, 60).unwrap();
    assert!(r.converged);
    assert_eq!(r.n_used, 1);
    assert!(dist(&r.limit, &h0.apply(&x)) <= 1e-13);
    assert!(hyers_limit(&h0, &x, 0.0, 60).is_err());
    assert!(hyers_limit(&h0, &x, 1e-12, 61).is_err());
}

#[test]
fn limit_of_radial_perturbation() {
    let s = shape(&[2, 3]);
    for p in [0.2, 0.5, 0.8] {
        let (h0, f) = radial(&s, 0.1, p);
        let l = 3f64.powf(p - 1.0);
        let x = random_element(&s, 4).scale_real(3.0);
        let r = hyers_limit(&f, &x, 1e-12, 60).unwrap();
        assert!((r.rate - l).abs() <= 1e-6 * l, "p={p} rate={}", r.rate);
        if p <= 0.5 {
            assert!(r.converged);
            assert!(r.rate > 0.0 && r.rate < 1.0);
            assert!(dist(&r.limit, &h0.apply(&x)) <= 1e-8 * x.op_norm().max(1.0));
        } else {
            // L^60 is still above the stopping threshold
            assert!(!r.converged);
            assert_eq!(r.n_used, 60);
        }
    }
}

#[test]
fn limit_of_hashed_perturbation() {
    let s = shape(&[2, 3]);
    let h0 = planted(&s);
    let f = make_perturbed(
        &h0,
        &PerturbationSpec::HashedRadial {
            theta_prime: 0.1,
            p: 0.5,
            seed: 12,
        },
    )
    .unwrap();
    let l = 3f64.powf(-0.5);
    for seed in 0..8 {
        let x = random_element(&s, seed);
        let r = hyers_limit(&f, &x, 1e-12, 60).unwrap();
        assert!(r.rate <= l + 0.05, "rate {}", r.rate);
        assert!(dist(&r.limit, &h0.apply(&x)) <= 1e-8 * x.op_norm().max(1.0));
    }
}

#[test]
fn limit_map_recovers_planted_map() {
    let s = shape(&[2, 3]);
    let (h0, f) = radial(&s, 0.1, 0.5);
    let h = limit_map(&f, 1e-12, 60);
    for seed in 0..5 {
        let x = random_element(&s, seed);
        assert!(dist(&h.apply(&x), &h0.apply(&x)) <= 1e-8 * x.op_norm().max(1.0));
    }
    assert!(h.apply(&Element::zero(&s)).is_zero());
}

#[test]
fn jensen_bound_examples() {
    let s = shape(&[2, 3]);
    let (tp, p) = (0.1, 0.5);
    let (h0, f) = radial(&s, tp, p);
    let samples = SampleSet::random(&s, 16, 0, 0, 3).unwrap();
    let pts = samples.base_points().to_vec();

    let exact: Vec<Element> = pts.iter().map(|x| h0.apply(x)).collect();
    let r = verify_jensen_bound(&h0, &pts, &exact, &cf(0.2, p, 3), PhiMode::Closed).unwrap();
    assert!(r.pass);
    for row in &r.rows {
        assert_eq!(row.lhs, 0.0);
        assert_eq!(row.margin, row.rhs);
    }

    // closed forms on both sides with θ = 2θ′
    let limits: Vec<Element> = pts.iter().map(|x| hyers_limit(&f, x, 1e-12, 60).unwrap().limit).collect();
    let r = verify_jensen_bound(&f, &pts, &limits, &cf(2.0 * tp, p, 3), PhiMode::Closed).unwrap();
    assert!(r.pass);
    let l = 3f64.powf(p - 1.0);
    for (row, x) in r.rows.iter().zip(&pts) {
        let nx = x.op_norm().powf(p);
        assert!((row.lhs - tp * nx).abs() <= 1e-10);
        let rhs = 2.0 * tp * (3.0 + 3f64.powf(p)) * nx / (3.0 * (1.0 - l));
        assert!((row.rhs - rhs).abs() <= 1e-12 * rhs);
    }

    let r = verify_jensen_bound(&f, &pts, &limits, &cf(0.0, p, 3), PhiMode::Closed).unwrap();
    assert!(!r.pass);
    assert_eq!(r.violations(), pts.len());

    assert!(verify_jensen_bound(&f, &pts, &limits, &cf(0.1, p, 6), PhiMode::Closed).is_err());
    assert!(verify_jensen_bound(&f, &pts, &limits[..2], &cf(0.1, p, 3), PhiMode::Closed).is_err());
}

#[test]
fn fp_bound_examples() {
    let s = shape(&[2, 3]);
    let (tp, p) = (0.1, 0.5);
    let (h0, f) = radial(&s, tp, p);
    let samples = SampleSet::random(&s, 32, 0, 0, 5).unwrap();
    let pts = samples.base_points().to_vec();
    let limits: Vec<Element> = pts.iter().map(|x| hyers_limit(&f, x, 1e-12, 60).unwrap().limit).collect();

    let r = verify_fp_bound(&f, &pts, &limits, &cf(tp, p, 6)).unwrap();
    assert!(r.pass);
    let c = cf(tp, p, 6).fp_bound_constant();
    for (row, x) in r.rows.iter().zip(&pts) {
        let nx = x.op_norm().powf(p);
        assert!((row.margin - (c - tp) * nx).abs() <= 1e-10);
        // LHS/RHS = (1 − L)/L, so margin/RHS ≈ 0.268
        assert!(row.margin / row.rhs <= 0.37);
    }

    let fx: Vec<Element> = pts.iter().map(|x| f.apply(x)).collect();
    let r = verify_fp_bound(&f, &pts, &fx, &cf(tp, p, 6)).unwrap();
    assert!(r.rows.iter().all(|row| row.margin == row.rhs));

    let r = verify_fp_bound(&f, &pts, &limits, &cf(tp / 2.0, p, 6)).unwrap();
    assert!(!r.pass);
    assert_eq!(r.violations(), pts.len());

    let exact: Vec<Element> = pts.iter().map(|x| h0.apply(x)).collect();
    assert!(verify_fp_bound(&h0, &pts, &exact, &cf(0.0, p, 6)).unwrap().pass);
    assert!(verify_fp_bound(&f, &pts, &limits, &cf(tp, p, 3)).is_err());
}

#[test]
fn unitality_examples() {
    let s = shape(&[2, 3]);
    let h0 = planted(&s);
    let e = Element::unit(&s);
    let t_e = hyers_limit(&h0, &e, 1e-12, 60).unwrap().limit;
    let probes: Vec<Element> = (0..50).map(|k| random_element(&s, 1000 + k)).collect();
    let r = unitality_check(&t_e, &probes, 1e-10);
    assert!(r.pass());

    let doubled = h0.scaled(2.0);
    let t2 = hyers_limit(&doubled, &e, 1e-12, 60).unwrap().limit;
    let r = unitality_check(&t2, &probes, 1e-10);
    assert!(!r.unitary);
    assert!(r.central);
    assert!(!r.pass());

    let not_central = random_unitary(&s, 3);
    assert!(!unitality_check(&not_central, &probes, 1e-10).central);
}

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;

fn shape(dims: &[usize]) -> AlgebraShape {
    AlgebraShape::new(dims.to_vec()).unwrap()
}

fn real2(rows: [[f64; 2]; 2]) -> Element {
    Element::from_blocks(vec![Block::from_real_rows(&[&rows[0], &rows[1]]).unwrap()]).unwrap()
}

fn diag(values: &[f64]) -> Element {
    Element::from_blocks(vec![Block::diag_real(values)]).unwrap()
}

fn dist(a: &Element, b: &Element) -> f64 {
    a.sub(b).unwrap().op_norm()
}

#[test]
fn shape_rejects_empty_and_zero_blocks() {
    assert!(AlgebraShape::new(vec![]).is_err());
    assert!(AlgebraShape::new(vec![2, 0]).is_err());
    assert_eq!(shape(&[2, 3]).dimension(), 13);
}

#[test]
fn element_rejects_mismatched_blocks_and_nan() {
    let s = shape(&[2]);
    assert!(Element::new(s.clone(), vec![Block::zeros(3)]).is_err());
    let mut b = Block::zeros(2);
    b.set(0, 0, C64::new(f64::NAN, 0.0));
    assert!(Element::new(s, vec![b]).is_err());
}

#[test]
fn shape_mismatch_is_an_error() {
    let a = Element::unit(&shape(&[2]));
    let b = Element::unit(&shape(&[3]));
    assert!(matches!(a.add(&b), Err(StabError::ShapeMismatch { .. })));
    assert!(a.mul(&b).is_err());
    assert!(a.jordan_product(&b).is_err());
}

#[test]
fn unit_laws() {
    let s = shape(&[2, 3]);
    let e = Element::unit(&s);
    let x = random_element(&s, 3);
    assert_eq!(e.mul(&x).unwrap(), x);
    assert_eq!(x.mul(&e).unwrap(), x);
    assert!(dist(&e.jordan_product(&x).unwrap(), &x.scale_real(2.0)) <= 1e-15);
}

#[test]
fn jordan_product_of_matrix_units_is_identity() {
    let x = real2([[0.0, 1.0], [0.0, 0.0]]);
    let y = real2([[0.0, 0.0], [1.0, 0.0]]);
    assert_eq!(x.jordan_product(&y).unwrap(), diag(&[1.0, 1.0]));
}

#[test]
fn jordan_square_is_twice_square() {
    let x = random_element(&shape(&[3]), 11);
    let j = x.jordan_product(&x).unwrap();
    let sq = x.mul(&x).unwrap().scale_real(2.0);
    assert!(dist(&j, &sq) <= 1e-14);
}

#[test]
fn herm_eig_examples() {
    let e = Element::unit(&shape(&[2, 3])).herm_eig().unwrap();
    for vals in &e.eigenvalues {
        for v in vals {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    let d = diag(&[3.0, -1.0]).herm_eig().unwrap();
    assert_eq!(d.eigenvalues[0], vec![-1.0, 3.0]);

    // det([[2-λ, 1], [1, 2-λ]]) = (2-λ)² - 1 → λ ∈ {1, 3}
    let m = real2([[2.0, 1.0], [1.0, 2.0]]).herm_eig().unwrap();
    assert_relative_eq!(m.eigenvalues[0][0], 1.0, epsilon = 1e-14);
    assert_relative_eq!(m.eigenvalues[0][1], 3.0, epsilon = 1e-14);
}

#[test]
fn herm_eig_complex_hermitian_2x2() {
    // [[1, i], [-i, 1]] has characteristic polynomial (1-λ)² - 1 → {0, 2}.
    let b = Block::from_rows(vec![
        vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
        vec![C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
    ])
    .unwrap();
    let x = Element::from_blocks(vec![b]).unwrap();
    let eig = x.herm_eig().unwrap();
    assert!(eig.eigenvalues[0][0].abs() < 1e-15);
    assert_relative_eq!(eig.eigenvalues[0][1], 2.0, epsilon = 1e-14);
    assert!(dist(&eig.reconstruct(x.shape()), &x) <= 1e-14);
}

#[test]
fn herm_eig_rejects_non_hermitian() {
    let x = real2([[0.0, 1.0], [0.0, 0.0]]);
    assert!(matches!(x.herm_eig(), Err(StabError::NotSelfAdjoint { .. })));
}

#[test]
fn op_norm_examples() {
    assert_eq!(Element::unit(&shape(&[2, 3])).op_norm(), 1.0);
    assert_relative_eq!(real2([[0.0, 2.0], [0.0, 0.0]]).op_norm(), 2.0, epsilon = 1e-15);
    assert_eq!(Element::zero(&shape(&[2])).op_norm(), 0.0);
    // direct sum norm is the max over blocks
    let x = Element::from_blocks(vec![Block::diag_real(&[1.0, -4.0]), Block::diag_real(&[2.0, 3.0, 0.5])])
        .unwrap();
    assert_relative_eq!(x.op_norm(), 4.0, epsilon = 1e-15);
}

#[test]
fn sqrt_psd_examples() {
    let e = Element::unit(&shape(&[2, 3]));
    assert!(dist(&e.sqrt_psd().unwrap(), &e) <= 1e-15);
    let r = diag(&[4.0, 9.0]).sqrt_psd().unwrap();
    assert!(dist(&r, &diag(&[2.0, 3.0])) <= 1e-15);
    assert!(matches!(
        diag(&[1.0, -0.5]).sqrt_psd(),
        Err(StabError::NotPositiveSemidefinite { .. })
    ));
    // tiny negative eigenvalues are clamped
    let r = diag(&[1.0, -1e-13]).sqrt_psd().unwrap();
    assert_eq!(r.block(0).get(1, 1), C64::new(0.0, 0.0));
}

#[test]
fn func_calc_applies_function_to_spectrum() {
    let s = shape(&[3]);
    let a = random_self_adjoint(&s, 4);
    let sq = a.func_calc(|v| v * v).unwrap();
    assert!(dist(&sq, &a.mul(&a).unwrap()) <= 1e-12);
}

#[test]
fn predicate_examples() {
    let s = shape(&[2, 3]);
    let e = Element::unit(&s);
    assert!(e.is_unitary(1e-12));
    let probes: Vec<Element> = (0..5).map(|k| random_element(&s, k)).collect();
    assert!(e.is_central(&probes, 1e-12));
    assert!(!diag(&[1.0, 0.0]).is_invertible(1e-8));
    assert!(diag(&[1.0, 1e-3]).is_invertible(1e-8));
    assert!(!e.scale_real(2.0).is_unitary(1e-6));
    assert!(!random_element(&s, 1).is_central(&probes, 1e-6));
}

#[test]
fn random_generators_are_deterministic_and_well_formed() {
    let s = shape(&[2, 3]);
    assert_eq!(random_element(&s, 9), random_element(&s, 9));
    assert_ne!(random_element(&s, 9), random_element(&s, 10));
    for seed in 0..50 {
        assert!(random_unitary(&s, seed).is_unitary(1e-10));
        assert!(random_self_adjoint(&s, seed).is_self_adjoint(1e-12));
    }
}

fn arb_shape() -> impl Strategy<Value = AlgebraShape> {
    prop_oneof![
        Just(vec![2]),
        Just(vec![3]),
        Just(vec![2, 3]),
        Just(vec![1, 4]),
    ]
    .prop_map(|v| AlgebraShape::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn involution_and_antihomomorphism(s in arb_shape(), a in any::<u64>(), b in any::<u64>()) {
        let x = random_element(&s, a);
        let y = random_element(&s, b);
        prop_assert_eq!(x.adjoint().adjoint(), x.clone());
        let lhs = x.mul(&y).unwrap().adjoint();
        let rhs = y.adjoint().mul(&x.adjoint()).unwrap();
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * lhs.op_norm().max(1.0));
    }

    #[test]
    fn c_star_identity(s in arb_shape(), seed in any::<u64>(), r in 0.01f64..10.0) {
        let x = random_element(&s, seed);
        let x = x.scale_real(r / x.op_norm());
        let n = x.op_norm();
        let xx = x.adjoint().mul(&x).unwrap().op_norm();
        prop_assert!((xx - n * n).abs() <= 1e-8 * n * n);
    }

    #[test]
    fn eig_reconstruction(s in arb_shape(), seed in any::<u64>(), r in 0.01f64..100.0) {
        let a = random_self_adjoint(&s, seed).scale_real(r);
        let eig = a.herm_eig().unwrap();
        let rec = eig.reconstruct(&s);
        prop_assert!(dist(&rec, &a) <= TAU_EIG * a.op_norm().max(1.0));
        for (vals, u) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let ue = Element::from_blocks(vec![u.clone()]).unwrap();
            prop_assert!(ue.is_unitary(1e-12));
        }
    }

    #[test]
    fn op_norm_homogeneity(s in arb_shape(), seed in any::<u64>(), k in 0i32..40) {
        let x = random_element(&s, seed);
        let t = 3f64.powi(k);
        let lhs = x.scale_real(t).op_norm();
        let rhs = t * x.op_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn jordan_product_commutes(s in arb_shape(), a in any::<u64>(), b in any::<u64>()) {
        let x = random_element(&s, a);
        let y = random_element(&s, b);
        prop_assert_eq!(x.jordan_product(&y).unwrap(), y.jordan_product(&x).unwrap());
    }

    #[test]
    fn sqrt_psd_squares_back(s in arb_shape(), seed in any::<u64>()) {
        let b = random_element(&s, seed);
        let a = b.adjoint().mul(&b).unwrap();
        let r = a.sqrt_psd().unwrap();
        let back = r.mul(&r).unwrap();
        prop_assert!(dist(&back, &a) <= TAU_EIG * a.op_norm().max(1.0));
    }
}

#[test]
fn norms_survive_extreme_magnitudes() {
    let s = shape(&[2, 3]);
    let x = random_element(&s, 21);
    let n = x.op_norm();
    for k in [-150i32, -60, 60, 150, 200] {
        let t = 3f64.powi(k);
        let scaled = x.scale_real(t).op_norm();
        assert!((scaled - t * n).abs() <= 1e-12 * t * n, "k={k}");
    }
    let d = diag(&[1e200, -3e199]);
    assert_relative_eq!(d.op_norm(), 1e200, max_relative = 1e-15);
    assert_relative_eq!(d.min_singular_value(), 3e199, max_relative = 1e-15);
}

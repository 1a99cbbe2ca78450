//! Control functions `φ = θ Σ ‖·‖^p` and their weighted series
//! `φ̃(args) = Σ_{n≥0} 3^{-n} φ(3^n args)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::Element;
use crate::error::{Result, StabError};

/// `(θ, p)` with `θ ≥ 0` and `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ControlParams {
    theta: f64,
    p: f64,
}

#[derive(Deserialize)]
struct RawParams {
    theta: f64,
    p: f64,
}

impl TryFrom<RawParams> for ControlParams {
    type Error = StabError;
    fn try_from(r: RawParams) -> Result<Self> {
        ControlParams::new(r.theta, r.p)
    }
}

impl ControlParams {
    pub fn new(theta: f64, p: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(StabError::InvalidControl(format!("θ = {theta} must be finite and ≥ 0")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(StabError::InvalidControl(format!("p = {p} outside (0, 1)")));
        }
        Ok(Self { theta, p })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `L = 3^{p-1}`.
    pub fn lipschitz_l(&self) -> f64 {
        3f64.powf(self.p - 1.0)
    }
}

/// How `φ̃` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiMode {
    Closed,
    /// Sum of the first `n` terms.
    Partial(usize),
}

/// Anything usable as a control function: a nonnegative function of a fixed
/// number of element arguments.
pub trait Control: Send + Sync {
    fn arity(&self) -> usize;
    fn value(&self, args: &[&Element]) -> f64;
}

fn check_arity(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(StabError::ArityMismatch { expected, got });
    }
    Ok(())
}

/// `Σ_{n=0}^{terms-1} 3^{-n} φ(3^n args)`, scaling the arguments themselves.
pub fn partial_series(ctrl: &dyn Control, args: &[&Element], terms: usize) -> Result<f64> {
    check_arity(ctrl.arity(), args.len())?;
    let mut sum = 0.0;
    let mut t = 1.0f64;
    for _ in 0..terms {
        let scaled: Vec<Element> = args.iter().map(|a| a.scale_real(t)).collect();
        let refs: Vec<&Element> = scaled.iter().collect();
        sum += ctrl.value(&refs) / t;
        t *= 3.0;
    }
    Ok(sum)
}

/// The power family `θ Σ_j ‖a_j‖^p` with arity 3 or 6. `0^p` is taken as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlFunction {
    pub params: ControlParams,
    arity: usize,
}

impl ControlFunction {
    pub fn new(params: ControlParams, arity: usize) -> Result<Self> {
        if arity != 3 && arity != 6 {
            return Err(StabError::InvalidControl(format!("arity {arity} is not 3 or 6")));
        }
        Ok(Self { params, arity })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn theta(&self) -> f64 {
        self.params.theta
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    /// Same exponent and arity, different `θ`.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Ok(Self {
            params: ControlParams::new(theta, self.params.p)?,
            arity: self.arity,
        })
    }

    fn power(&self, norm: f64) -> f64 {
        if norm == 0.0 {
            0.0
        } else {
            norm.powf(self.params.p)
        }
    }

    pub fn phi_from_norms(&self, norms: &[f64]) -> f64 {
        self.params.theta * norms.iter().map(|&n| self.power(n)).sum::<f64>()
    }

    pub fn phi(&self, args: &[&Element]) -> Result<f64> {
        check_arity(self.arity, args.len())?;
        Ok(self.phi_from_norms(&args.iter().map(|a| a.op_norm()).collect::<Vec<_>>()))
    }

    /// `φ(x, 0, …, 0) = θ‖x‖^p`.
    pub fn phi_axis(&self, x: &Element) -> f64 {
        self.params.theta * self.power(x.op_norm())
    }

    pub fn phi_tilde(&self, args: &[&Element], mode: PhiMode) -> Result<f64> {
        match mode {
            PhiMode::Closed => {
                let l = self.lipschitz_l();
                if l >= 1.0 {
                    return Err(StabError::InvalidControl("series diverges for p ≥ 1".into()));
                }
                Ok(self.phi(args)? / (1.0 - l))
            }
            PhiMode::Partial(terms) => partial_series(self, args, terms),
        }
    }

    pub fn lipschitz_l(&self) -> f64 {
        self.params.lipschitz_l()
    }

    /// `φ(args) − 3L·φ(args/3)`; zero for the power family.
    pub fn contraction_residual(&self, args: &[&Element]) -> Result<f64> {
        let thirds: Vec<Element> = args.iter().map(|a| a.scale_real(1.0 / 3.0)).collect();
        let refs: Vec<&Element> = thirds.iter().collect();
        Ok(self.phi(args)? - 3.0 * self.lipschitz_l() * self.phi(&refs)?)
    }

    /// `L/(1−L)·θ`, cross-checked against `3^p θ/(3 − 3^p)`.
    pub fn fp_bound_constant(&self) -> f64 {
        let (a, b) = fp_bound_constant_forms(self.params.theta, self.params.p);
        debug_assert!((a - b).abs() <= 1e-13 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        a
    }
}

impl Control for ControlFunction {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, args: &[&Element]) -> f64 {
        self.phi(args).expect("arity checked by caller")
    }
}

/// The two closed forms of the fixed-point bound constant.
pub fn fp_bound_constant_forms(theta: f64, p: f64) -> (f64, f64) {
    let l = 3f64.powf(p - 1.0);
    let three_p = 3f64.powf(p);
    (l / (1.0 - l) * theta, three_p * theta / (3.0 - three_p))
}

/// A general control given as a function of the argument norms. Only the
/// partial-sum series is available for it.
#[derive(Clone)]
pub struct NormControl {
    arity: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl NormControl {
    pub fn new(arity: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { arity, f: Arc::new(f) }
    }
}

impl fmt::Debug for NormControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormControl").field("arity", &self.arity).finish_non_exhaustive()
    }
}

impl Control for NormControl {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, args: &[&Element]) -> f64 {
        let norms: Vec<f64> = args.iter().map(|a| a.op_norm()).collect();
        (self.f)(&norms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_element, AlgebraShape};
    use proptest::prelude::*;

    fn cf(theta: f64, p: f64, arity: usize) -> ControlFunction {
        ControlFunction::new(ControlParams::new(theta, p).unwrap(), arity).unwrap()
    }

    fn shape() -> AlgebraShape {
        AlgebraShape::new(vec![2, 3]).unwrap()
    }

    fn unit_norm(seed: u64) -> Element {
        let x = random_element(&shape(), seed);
        x.scale_real(1.0 / x.op_norm())
    }

    #[test]
    fn params_validation() {
        assert!(ControlParams::new(-0.1, 0.5).is_err());
        assert!(ControlParams::new(0.1, 0.0).is_err());
        assert!(ControlParams::new(0.1, 1.0).is_err());
        assert!(ControlParams::new(0.1, 1.5).is_err());
        assert!(ControlParams::new(f64::NAN, 0.5).is_err());
        assert!(ControlParams::new(0.0, 0.5).is_ok());
        assert!(ControlFunction::new(ControlParams::new(1.0, 0.5).unwrap(), 5).is_err());
    }

    #[test]
    fn phi_examples() {
        let s = shape();
        let e = Element::unit(&s);
        let z = Element::zero(&s);
        let c = cf(1.0, 0.5, 3);
        assert_eq!(c.phi(&[&e, &e, &z]).unwrap(), 2.0);
        assert_eq!(c.phi(&[&z, &z, &z]).unwrap(), 0.0);
        let e3 = e.scale_real(3.0);
        let v = c.phi(&[&e3, &e3, &z]).unwrap();
        assert!((v - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        assert!(matches!(c.phi(&[&e, &e]), Err(StabError::ArityMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn phi_tilde_examples() {
        let s = shape();
        let z = Element::zero(&s);
        let c = cf(1.0, 0.5, 3);
        assert_eq!(c.phi_tilde(&[&z, &z, &z], PhiMode::Closed).unwrap(), 0.0);

        let x = unit_norm(1);
        let y = unit_norm(2);
        let closed = c.phi_tilde(&[&x, &y, &z], PhiMode::Closed).unwrap();
        let expected = 2.0 / (1.0 - 1.0 / 3f64.sqrt());
        assert!((closed - expected).abs() < 1e-12 * expected);
        assert!((closed - 4.73205).abs() < 1e-5);
        let partial = c.phi_tilde(&[&x, &y, &z], PhiMode::Partial(200)).unwrap();
        assert!((partial - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn lipschitz_examples() {
        let c = cf(1.0, 0.5, 3);
        assert!((c.lipschitz_l() - 0.5773502691896258).abs() < 1e-15);
        // ratio oracle φ(3x)/(3φ(x))
        let s = shape();
        let x = random_element(&s, 5);
        let x3 = x.scale_real(3.0);
        let z = Element::zero(&s);
        let ratio = c.phi(&[&x3, &z, &z]).unwrap() / (3.0 * c.phi(&[&x, &z, &z]).unwrap());
        assert!((ratio - c.lipschitz_l()).abs() < 1e-12);
        let ls: Vec<f64> = [0.1, 0.5, 0.9, 0.99, 0.999999]
            .iter()
            .map(|&p| cf(1.0, p, 3).lipschitz_l())
            .collect();
        assert!(ls.windows(2).all(|w| w[0] < w[1]));
        assert!(ls.iter().all(|&l| l < 1.0));
    }

    #[test]
    fn fp_bound_constant_examples() {
        let c = cf(0.1, 0.5, 6);
        assert!((c.fp_bound_constant() - 0.136603).abs() < 1e-6);
        let (a, b) = fp_bound_constant_forms(0.1, 0.5);
        assert!((a - b).abs() <= 1e-14 * a);
        assert_eq!(cf(0.0, 0.5, 6).fp_bound_constant(), 0.0);
        assert!((cf(1.0, 1e-9, 6).fp_bound_constant() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn series_tail_bound() {
        // Partial sums of N terms miss exactly L^N φ̃ in exact arithmetic;
        // the extra 1e-13 covers rounding in the floating-point sum.
        let s = shape();
        let z = Element::zero(&s);
        for (i, p) in [0.2, 0.5, 0.8, 0.95].into_iter().enumerate() {
            let c = cf(0.7, p, 3);
            let x = random_element(&s, 10 + i as u64).scale_real(4.0);
            let y = random_element(&s, 20 + i as u64).scale_real(0.3);
            let args = [&x, &y, &z];
            let closed = c.phi_tilde(&args, PhiMode::Closed).unwrap();
            for n in [10usize, 50, 200] {
                let partial = c.phi_tilde(&args, PhiMode::Partial(n)).unwrap();
                let tail = c.lipschitz_l().powi(n as i32) * closed;
                assert!(partial <= closed * (1.0 + 1e-13));
                assert!(closed - partial <= tail + 1e-13 * closed, "p={p} N={n} closed={closed} partial={partial} tail={tail}");
            }
        }
    }

    #[test]
    fn norm_control_partial_series_matches_power_family() {
        let s = shape();
        let x = random_element(&s, 3);
        let z = Element::zero(&s);
        let general = NormControl::new(3, |n| 0.4 * n.iter().map(|v| if *v == 0.0 { 0.0 } else { v.powf(0.3) }).sum::<f64>());
        let power = cf(0.4, 0.3, 3);
        let a = partial_series(&general, &[&x, &x, &z], 100).unwrap();
        let b = power.phi_tilde(&[&x, &x, &z], PhiMode::Closed).unwrap();
        assert!((a - b).abs() <= 1e-10 * b);
        assert!(partial_series(&general, &[&x], 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn homogeneity_and_contraction(seed in any::<u64>(), theta in 0.0f64..10.0, p in 0.01f64..0.99, six in any::<bool>()) {
            let arity = if six { 6 } else { 3 };
            let c = cf(theta, p, arity);
            let s = shape();
            let args: Vec<Element> = (0..arity as u64).map(|k| random_element(&s, seed.wrapping_add(k))).collect();
            let refs: Vec<&Element> = args.iter().collect();
            let tripled: Vec<Element> = args.iter().map(|a| a.scale_real(3.0)).collect();
            let trefs: Vec<&Element> = tripled.iter().collect();
            let base = c.phi(&refs).unwrap();
            prop_assert!((c.phi(&trefs).unwrap() - 3f64.powf(p) * base).abs() <= 1e-12 * base.max(f64::MIN_POSITIVE));
            prop_assert!(c.contraction_residual(&refs).unwrap().abs() <= 1e-12 * base.max(1.0));
        }

        // the truncation tail L^100 is below 1e-12 for p ≤ 0.75
        #[test]
        fn closed_matches_partial_100(seed in any::<u64>(), theta in 0.01f64..10.0, p in 0.01f64..0.75) {
            let c = cf(theta, p, 3);
            let s = shape();
            let x = random_element(&s, seed);
            let y = random_element(&s, seed ^ 0x9e37);
            let z = Element::zero(&s);
            let closed = c.phi_tilde(&[&x, &y, &z], PhiMode::Closed).unwrap();
            let partial = c.phi_tilde(&[&x, &y, &z], PhiMode::Partial(100)).unwrap();
            prop_assert!((closed - partial).abs() <= 1e-10 * closed);
        }

        #[test]
        fn bound_constant_forms_agree(theta in 0.0f64..100.0, p in 0.01f64..0.95) {
            let (a, b) = fp_bound_constant_forms(theta, p);
            prop_assert!((a - b).abs() <= 1e-14 * a.max(b).max(f64::MIN_POSITIVE));
        }
    }
}

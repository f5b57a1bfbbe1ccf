//! The degenerate double-well family W_m(x) = (1-x^2)^m (optionally scaled by
//! 1/(2m)), its structural hypotheses, and the recursive polynomials that
//! certify the well condition near x = -1.
//!
//! Two normalizations are exposed because both appear in practice: the scaled
//! form (1-x^2)^m / (2m) is the default for energy experiments, while the
//! unscaled form (1-x^2)^m is the one whose k-th derivative factors exactly as
//! W_{m-k} * P_m^k.

use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Which scaling of the prototype well is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// W_m(x) = (1 - x^2)^m / (2m)
    Intro,
    /// W_m(x) = (1 - x^2)^m
    Appendix,
}

/// Anything that can act as the potential term of the energy.
pub trait Potential: Sync {
    fn eval(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
}

/// A potential that is identically zero; handy for isolating kinetic terms.
#[derive(Debug, Clone, Copy)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn eval(&self, _: f64) -> f64 {
        0.0
    }
    fn deriv(&self, _: f64) -> f64 {
        0.0
    }
}

/// The double-well W with its structural parameters.
///
/// `lambda` and `big_lambda` are the sandwich constants
/// lambda * 1_{x<=theta} |1+x|^m <= W(x) <= big_lambda |1+x|^m; the defaults
/// are derived for the W_m family (they are not quoted values, see
/// `well_defaults`). `c1` and `q` certify the one-sided well condition
/// W(t) - W(r) >= c1 (t-r) |1+r|^{m-1} + c1 (t-r)^k on -1 <= r <= t <= -1+q.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub m: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub theta: f64,
    pub c1: f64,
    pub q: f64,
    pub k: u32,
    pub normalization: Normalization,
}

/// k = m for integer m, floor(m) + 1 otherwise.
pub fn order_k(m: f64) -> u32 {
    if m.fract() == 0.0 {
        m as u32
    } else {
        m.floor() as u32 + 1
    }
}

impl PotentialSpec {
    /// W_m with derived sandwich constants, theta = 0, and (c1, q) calibrated
    /// at margin c. The sandwich constants are computed, not quoted: the
    /// minimum of (1-x)^m over x <= theta gives the lower constant.
    pub fn calibrated(m: f64, normalization: Normalization, c: f64) -> Result<Self> {
        let (c1, q) = calibrate_c1_q(m, c)?;
        Ok(Self::with_params(m, normalization, c1, q))
    }

    /// W_m with explicitly chosen (c1, q); sandwich constants derived.
    pub fn with_params(m: f64, normalization: Normalization, c1: f64, q: f64) -> Self {
        let theta = 0.0;
        let (lambda, big_lambda) = well_defaults(m, theta, normalization);
        PotentialSpec {
            m,
            lambda,
            big_lambda,
            theta,
            c1,
            q,
            k: order_k(m),
            normalization,
        }
    }

    pub fn scale(&self) -> f64 {
        match self.normalization {
            Normalization::Intro => 1.0 / (2.0 * self.m),
            Normalization::Appendix => 1.0,
        }
    }

    /// The constant lambda_mu of the strengthened lower bound
    /// lambda_mu 1_{x<=mu} |1+x|^m <= W(x): for W_m it is the minimum of
    /// scale * (1-x)^m over x <= mu, attained at x = mu.
    pub fn lambda_mu(&self, mu: f64) -> f64 {
        self.scale() * (1.0 - mu).powf(self.m)
    }
}

impl Potential for PotentialSpec {
    fn eval(&self, x: f64) -> f64 {
        self.scale() * (1.0 - x * x).max(0.0).powf(self.m)
    }

    fn deriv(&self, x: f64) -> f64 {
        self.scale() * (-2.0 * self.m * x) * (1.0 - x * x).max(0.0).powf(self.m - 1.0)
    }
}

/// Derived sandwich constants (lambda, Lambda) for W_m at the given theta.
///
/// (1-x^2)^m = (1-x)^m (1+x)^m, and (1-x)^m ranges over [(1-theta)^m, 2^m]
/// on [-1, theta], so the stated constants are valid; they are clamped into
/// the admissible intervals (0,1] and [1,oo).
pub fn well_defaults(m: f64, theta: f64, normalization: Normalization) -> (f64, f64) {
    let scale = match normalization {
        Normalization::Intro => 1.0 / (2.0 * m),
        Normalization::Appendix => 1.0,
    };
    let lambda = (scale * (1.0 - theta).powf(m)).min(1.0);
    let big_lambda = (scale * 2f64.powf(m)).max(1.0);
    (lambda, big_lambda)
}

/// Evaluates the well at x, rejecting |x| > 1.
pub fn eval_potential(spec: &PotentialSpec, x: f64) -> Result<f64> {
    if !((-1.0..=1.0).contains(&x)) {
        return Err(Error::Domain(format!("potential argument {x} outside [-1, 1]")));
    }
    Ok(spec.eval(x))
}

/// P_m^k stored as an exact rational coefficient list (ascending powers).
///
/// P_m^1 = -2mx and P_m^k = P_{m-k+1}^1 P_m^{k-1} + (1-x^2) (P_m^{k-1})'.
/// Every f64 is an exact rational, so the recursion is carried out without
/// rounding and deg P_m^k = k holds exactly.
#[derive(Debug, Clone)]
pub struct RecursivePolynomial {
    pub m: f64,
    pub k: u32,
    coeffs: Vec<BigRational>,
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

fn poly_deriv(a: &[BigRational]) -> Vec<BigRational> {
    if a.len() <= 1 {
        return vec![BigRational::zero()];
    }
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(i, ai)| ai * BigRational::from_integer(i.into()))
        .collect()
}

fn trim(mut a: Vec<BigRational>) -> Vec<BigRational> {
    while a.len() > 1 && a.last().map(|c| c.is_zero()).unwrap_or(false) {
        a.pop();
    }
    a
}

impl RecursivePolynomial {
    pub fn build(m: f64, k: u32) -> Result<Self> {
        if k == 0 || (k as f64) > m.floor() {
            return Err(Error::Domain(format!(
                "order k = {k} outside 1..=floor(m) for m = {m}"
            )));
        }
        let m_rat = BigRational::from_float(m)
            .ok_or_else(|| Error::Input(format!("non-finite exponent m = {m}")))?;
        let first = |mu: &BigRational| -> Vec<BigRational> {
            // -2 * mu * x
            vec![
                BigRational::zero(),
                BigRational::from_integer((-2).into()) * mu,
            ]
        };
        let one_minus_x2 = vec![
            BigRational::one(),
            BigRational::zero(),
            -BigRational::one(),
        ];
        let mut p = first(&m_rat);
        for j in 2..=k {
            let shift = m_rat.clone() - BigRational::from_integer((j as i64 - 1).into());
            let term1 = poly_mul(&first(&shift), &p);
            let term2 = poly_mul(&one_minus_x2, &poly_deriv(&p));
            p = trim(poly_add(&term1, &term2));
        }
        Ok(RecursivePolynomial { m, k, coeffs: p })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        // Horner over f64; coefficients are exact, magnitudes are tame.
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + rational_to_f64(c);
        }
        acc
    }

    /// Exact rational evaluation, used by the coefficient-level tests.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn derivative_coefficients(&self) -> Vec<BigRational> {
        trim(poly_deriv(&self.coeffs))
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Extremely large intermediates would be a bug in the recursion.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Value of P_m^k at x.
pub fn eval_p(m: f64, k: u32, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("P_m^k argument {x} outside [-1, 1]")));
    }
    Ok(RecursivePolynomial::build(m, k)?.eval(x))
}

/// Order-4 central finite-difference of the k-th derivative, k in 1..=4.
/// Step h must keep the stencil inside [-1, 1].
fn central_kth(f: &dyn Fn(f64) -> f64, x: f64, k: u32, h: f64) -> f64 {
    let v = |j: i32| f(x + j as f64 * h);
    match k {
        1 => (v(-2) - 8.0 * v(-1) + 8.0 * v(1) - v(2)) / (12.0 * h),
        2 => (-v(-2) + 16.0 * v(-1) - 30.0 * v(0) + 16.0 * v(1) - v(2)) / (12.0 * h * h),
        3 => {
            (v(-3) / 8.0 - v(-2) + 13.0 / 8.0 * v(-1) - 13.0 / 8.0 * v(1) + v(2) - v(3) / 8.0)
                / (h * h * h)
        }
        4 => {
            (-v(-3) / 6.0 + 2.0 * v(-2) - 13.0 / 2.0 * v(-1) + 28.0 / 3.0 * v(0)
                - 13.0 / 2.0 * v(1)
                + 2.0 * v(2)
                - v(3) / 6.0)
                / (h * h * h * h)
        }
        _ => unreachable!("stencil order checked by caller"),
    }
}

/// Max over the sample grid of |D^k W_m - W_{m-k} P_m^k| (Appendix
/// normalization). D^k is an order-4 central stencil with step 1e-3; orders
/// above 4 are reached by iterating the first-derivative stencil.
pub fn check_derivative_identity(m: f64, k: u32, xs: &[f64]) -> Result<f64> {
    if k == 0 || (k as f64) > m.floor() {
        return Err(Error::Domain(format!(
            "derivative order k = {k} outside 1..=floor(m) for m = {m}"
        )));
    }
    let poly = RecursivePolynomial::build(m, k)?;
    let w = move |x: f64| (1.0 - x * x).max(0.0).powf(m);
    let h = 1e-3;
    // Stay clear of the endpoints so the stencil never leaves [-1, 1].
    let margin = 10.0 * h;
    let mut worst = 0.0f64;
    for &x in xs {
        if x.abs() > 1.0 - margin {
            continue;
        }
        let fd = if k <= 4 {
            central_kth(&w, x, k, h)
        } else {
            // Iterated first derivatives for high orders.
            let mut g: Box<dyn Fn(f64) -> f64> = Box::new(w);
            for _ in 0..k {
                let prev = g;
                g = Box::new(move |t: f64| central_kth(&*prev, t, 1, 1e-2));
            }
            g(x)
        };
        let exact = (1.0 - x * x).max(0.0).powf(m - k as f64) * poly.eval(x);
        worst = worst.max((fd - exact).abs());
    }
    Ok(worst)
}

/// Dense check of the well condition on the triangle -1 <= r <= t <= -1+q.
/// Returns (holds, worst margin); the margin is the minimum slack of
/// W(t) - W(r) - c1 (t-r) |1+r|^{m-1} - c1 (t-r)^k.
pub fn check_well_condition(spec: &PotentialSpec, samples: usize) -> Result<(bool, f64)> {
    if spec.q >= 1.0 || spec.q <= 0.0 {
        return Err(Error::Config(format!("q = {} outside (0, 1)", spec.q)));
    }
    if samples < 2 {
        return Err(Error::Config("need at least 2 samples per axis".into()));
    }
    let top = -1.0 + spec.q;
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let r = -1.0 + (top + 1.0) * i as f64 / (samples - 1) as f64;
        let wr = spec.eval(r);
        for j in i..samples {
            let t = -1.0 + (top + 1.0) * j as f64 / (samples - 1) as f64;
            let lhs = spec.eval(t) - wr;
            let d = t - r;
            let rhs = spec.c1 * d * (1.0 + r).abs().powf(spec.m - 1.0)
                + spec.c1 * d.powi(spec.k as i32);
            worst = worst.min(lhs - rhs);
        }
    }
    Ok((worst >= -1e-12, worst))
}

/// Largest dyadic q (resolution 2^-20) such that every P_m^k with
/// k <= floor(m), plus the fractional-order derivative when m is not an
/// integer, stays >= c on [-1, -1+q]. Returns (c1, q) with
/// c1 = min{ c (2-q)^{m-1}, c / k! }.
pub fn calibrate_c1_q(m: f64, c: f64) -> Result<(f64, f64)> {
    if m <= 1.0 {
        return Err(Error::Domain(format!("calibration needs m > 1, got {m}")));
    }
    if !(0.0 < c && c < 1.0) {
        return Err(Error::Domain(format!("margin c = {c} outside (0, 1)")));
    }
    let kmax = m.floor() as u32;
    let polys: Vec<RecursivePolynomial> = (1..=kmax)
        .map(|k| RecursivePolynomial::build(m, k))
        .collect::<Result<_>>()?;
    let fractional = m.fract() != 0.0;
    let top_poly = polys.last().expect("kmax >= 1");
    let top_deriv = top_poly.derivative_coefficients();
    let eval_deriv = |x: f64| {
        let mut acc = 0.0;
        for cf in top_deriv.iter().rev() {
            acc = acc * x + rational_to_f64(cf);
        }
        acc
    };
    let frac = m - m.floor();

    let admissible = |q: f64| -> bool {
        let grid = 512;
        for j in 1..=grid {
            let x = -1.0 + q * j as f64 / grid as f64;
            for p in &polys {
                if p.eval(x) < c {
                    return false;
                }
            }
            if fractional {
                // d/dx [ (1-x^2)^{m-[m]} P_m^{[m]}(x) ] >= c
                let base = (1.0 - x * x).max(0.0);
                let val = -2.0 * x * frac * base.powf(frac - 1.0) * top_poly.eval(x)
                    + base.powf(frac) * eval_deriv(x);
                if val < c {
                    return false;
                }
            }
        }
        true
    };

    let floor_q = 2f64.powi(-20);
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo < floor_q {
        return Err(Error::Calibration(format!(
            "no admissible q above 2^-20 for m = {m}, c = {c}"
        )));
    }
    let k = order_k(m);
    let kfact: f64 = (1..=k).map(|j| j as f64).product();
    let c1 = (c * (2.0 - lo).powf(m - 1.0)).min(c / kfact);
    Ok((c1, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn wells_vanish_at_pure_phases() {
        let spec = PotentialSpec::with_params(2.0, Normalization::Appendix, 0.25, 0.3876);
        assert_eq!(eval_potential(&spec, -1.0).unwrap(), 0.0);
        assert_eq!(eval_potential(&spec, 1.0).unwrap(), 0.0);
        assert_eq!(eval_potential(&spec, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn intro_normalization_scales_by_2m() {
        let spec = PotentialSpec::with_params(3.0, Normalization::Intro, 0.25, 0.2);
        assert_relative_eq!(eval_potential(&spec, 0.0).unwrap(), 1.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn potential_rejects_out_of_range() {
        let spec = PotentialSpec::with_params(2.0, Normalization::Intro, 0.25, 0.3);
        assert!(eval_potential(&spec, 1.0001).is_err());
    }

    #[test]
    fn potential_is_even() {
        let spec = PotentialSpec::with_params(2.5, Normalization::Intro, 0.25, 0.3);
        for &x in &uniform_grid(101) {
            assert_relative_eq!(spec.eval(x), spec.eval(-x), max_relative = 1e-14);
        }
    }

    #[test]
    fn p1_is_minus_2xm() {
        assert_relative_eq!(eval_p(2.0, 1, -1.0).unwrap(), 4.0);
        assert_eq!(eval_p(7.3, 1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn p22_matches_symbolic_expansion() {
        // P_2^2 = P_1^1 P_2^1 + (1-x^2)(P_2^1)' = 12x^2 - 4
        assert_relative_eq!(eval_p(2.0, 2, 0.0).unwrap(), -4.0);
        assert_relative_eq!(eval_p(2.0, 2, 0.5).unwrap(), -1.0);
    }

    #[test]
    fn p_degree_is_k() {
        for &m in &[2.0f64, 2.5, 3.0, 4.0] {
            for k in 1..=(m as u32) {
                if (k as f64) <= m.floor() {
                    let p = RecursivePolynomial::build(m, k).unwrap();
                    assert_eq!(p.degree(), k as usize);
                }
            }
        }
    }

    #[test]
    fn p_out_of_range_order_rejected() {
        assert!(eval_p(2.0, 3, 0.0).is_err());
        assert!(RecursivePolynomial::build(2.5, 3).is_err());
    }

    #[test]
    fn recursion_matches_exact_binomial_derivatives_for_integer_m() {
        // For integer m, W_m is a polynomial; differentiate its coefficient
        // list k times and compare with W_{m-k} * P_m^k exactly.
        use num::BigInt;
        for &m in &[2u32, 3, 4] {
            // coefficients of (1 - x^2)^m
            let mut w = vec![BigRational::zero(); 2 * m as usize + 1];
            let mut binom = BigInt::from(1);
            for j in 0..=m {
                if j > 0 {
                    binom = binom.clone() * BigInt::from(m - j + 1) / BigInt::from(j);
                }
                let sign = if j % 2 == 0 { 1 } else { -1 };
                w[2 * j as usize] = BigRational::from_integer(binom.clone() * BigInt::from(sign));
            }
            for k in 1..=m {
                let mut dk = w.clone();
                for _ in 0..k {
                    dk = poly_deriv(&dk);
                }
                let p = RecursivePolynomial::build(m as f64, k).unwrap();
                // W_{m-k} * P_m^k as coefficient list
                let mk = m - k;
                let mut wmk = vec![BigRational::zero(); 2 * mk as usize + 1];
                let mut b = BigInt::from(1);
                for j in 0..=mk {
                    if j > 0 {
                        b = b.clone() * BigInt::from(mk - j + 1) / BigInt::from(j);
                    }
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    wmk[2 * j as usize] = BigRational::from_integer(b.clone() * BigInt::from(sign));
                }
                let rhs = trim(poly_mul(&wmk, p.coefficients()));
                let lhs = trim(dk);
                assert_eq!(lhs, rhs, "coefficient mismatch at m={m}, k={k}");
            }
        }
    }

    #[test]
    fn derivative_identity_residuals_small() {
        let xs = uniform_grid(101);
        let r = check_derivative_identity(2.0, 1, &xs).unwrap();
        assert!(r <= 1e-6, "residual {r}");
        let r = check_derivative_identity(3.0, 3, &xs).unwrap();
        assert!(r <= 1e-4, "residual {r}");
    }

    #[test]
    fn calibration_m2_matches_hand_values() {
        let (c1, q) = calibrate_c1_q(2.0, 0.5).unwrap();
        // P_2^1 alone allows q <= 1 - c/(2m) = 0.875; P_2^2 = 12x^2-4 cuts
        // it down to 1 - sqrt(4.5/12) ~ 0.3876.
        assert!(q <= 0.875);
        assert!(q <= 0.3877 && q > 0.35, "q = {q}");
        // c (2-q)^{m-1} > c/k! here, so c1 = 0.5 / 2! = 0.25.
        assert_relative_eq!(c1, 0.25);
    }

    #[test]
    fn calibration_near_boundary_m() {
        let (c1, q) = calibrate_c1_q(1.0001, 0.5).unwrap();
        assert!(q > 0.0 && q < 1e-3, "q = {q}");
        assert_relative_eq!(c1, 0.25, max_relative = 1e-3);
        assert_eq!(order_k(1.0001), 2);
    }

    #[test]
    fn well_condition_holds_for_calibrated_specs() {
        for &m in &[2.0, 2.5, 3.0] {
            let spec = PotentialSpec::calibrated(m, Normalization::Appendix, 0.5).unwrap();
            let (ok, margin) = check_well_condition(&spec, 200).unwrap();
            assert!(ok, "m = {m}, margin = {margin}");
        }
    }

    #[test]
    fn well_condition_detects_oversized_c1() {
        let mut spec = PotentialSpec::with_params(2.0, Normalization::Appendix, 10.0, 0.9);
        spec.q = 0.9;
        let (ok, margin) = check_well_condition(&spec, 200).unwrap();
        assert!(!ok);
        assert!(margin < 0.0);
    }

    #[test]
    fn well_condition_rejects_bad_q() {
        let mut spec = PotentialSpec::with_params(2.0, Normalization::Appendix, 0.25, 0.5);
        spec.q = 1.0;
        assert!(check_well_condition(&spec, 50).is_err());
    }

    #[test]
    fn sandwich_with_derived_constants() {
        // Intro normalization, lambda = 1/(2m 2^m), Lambda = 2^m/(2m): valid
        // whenever theta <= 1/2; assert pointwise on a 1000-point grid.
        for &m in &[2.0, 2.5, 3.0] {
            let spec = PotentialSpec::with_params(m, Normalization::Intro, 0.25, 0.3);
            let lam = 1.0 / (2.0 * m * 2f64.powf(m));
            let big = 2f64.powf(m) / (2.0 * m);
            for &x in &uniform_grid(1000) {
                let w = spec.eval(x);
                let env = (1.0 + x).abs().powf(m);
                assert!(w <= big * env + 1e-14, "upper bound fails at {x}");
                if x <= spec.theta {
                    assert!(w + 1e-14 >= lam * env, "lower bound fails at {x}");
                }
            }
        }
    }
}

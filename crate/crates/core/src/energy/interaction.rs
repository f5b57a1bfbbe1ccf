//! The interaction functional L(A, D) for a ball against the complement of a
//! larger concentric ball, plus the cone-based tail lower bound.

use crate::error::{Error, Result};
use crate::util::{adaptive_simpson, gauss_legendre, gauss_on};

use super::EnergyParams;

/// L(B_r2, R^n \ B_{r2 + r1}) = int int |x-y|^{-n-sp}.
///
/// 1D is closed form; 2D reduces to an outer radial quadrature of the exact
/// angular tail integral. Relative accuracy target 1e-4.
pub fn interaction_l(r2: f64, r1: f64, params: &EnergyParams) -> Result<f64> {
    if !(r2 > 0.0) || r1 < 0.0 {
        return Err(Error::Domain(format!("need r2 > 0 and r1 >= 0, got ({r2}, {r1})")));
    }
    let alpha = params.alpha();
    match params.n {
        1 => Ok(interaction_l_1d(r2, r1, alpha)),
        _ => Ok(interaction_l_2d(r2, r1, alpha)),
    }
}

fn interaction_l_1d(r2: f64, r1: f64, alpha: f64) -> f64 {
    // (2/alpha) int_{-r2}^{r2} (r2 + r1 - x)^{-alpha} dx
    if r1 == 0.0 && alpha >= 1.0 {
        return f64::INFINITY;
    }
    if alpha == 1.0 {
        2.0 * ((2.0 * r2 + r1).ln() - r1.ln())
    } else {
        2.0 / (alpha * (1.0 - alpha)) * ((2.0 * r2 + r1).powf(1.0 - alpha) - r1.powf(1.0 - alpha))
    }
}

/// Exit distance from a point at radius a to the circle of radius big_s
/// along polar angle theta (measured against the point's own direction).
#[inline]
fn circle_exit(a: f64, big_s: f64, theta: f64) -> f64 {
    let c = theta.cos();
    -a * c + (big_s * big_s - a * a * (1.0 - c * c)).sqrt()
}

/// Angular tail integral (1/alpha) int_0^{2pi} rho(theta)^{-alpha} d(theta)
/// for the kernel mass from a point at radius a to {|y| > big_s}.
pub(crate) fn disk_tail(a: f64, big_s: f64, alpha: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let f = |theta: f64| circle_exit(a, big_s, theta).powf(-alpha);
    // symmetric in theta; the integrand peaks at theta = 0
    2.0 * (gauss_on(&f, 0.0, 0.3, nodes, weights)
        + gauss_on(&f, 0.3, std::f64::consts::PI, nodes, weights))
        / alpha
}

fn interaction_l_2d(r2: f64, r1: f64, alpha: f64) -> f64 {
    if r1 == 0.0 && alpha >= 1.0 {
        return f64::INFINITY;
    }
    let big_s = r2 + r1;
    let (gn, gw) = gauss_legendre(48);
    let f = |a: f64| {
        if a == 0.0 {
            return 0.0;
        }
        2.0 * std::f64::consts::PI * a * disk_tail(a, big_s, alpha, &gn, &gw)
    };
    // the integrand steepens toward a = r2 when r1 << r2; split there
    let split = (r2 - 2.0 * r1).max(0.5 * r2);
    adaptive_simpson(&f, 0.0, split, 1e-7 * big_s.powf(-alpha))
        + adaptive_simpson(&f, split, r2, 1e-7 * big_s.powf(-alpha))
}

/// Certified cone lower bound for int_{R^n \ B_R} |x-y|^{-n-sigma} dy at a
/// point with |x| = x_norm < R:
///
///   (2 m)^{n-1} / (sigma ((n-1) m^2 + 1)^{(n+sigma)/2}) * (R - x_norm)^{-sigma}
///
/// For n = 1 the cone degenerates and the bound is (R - x)^{-sigma}/sigma.
pub fn cone_lower_bound(x_norm: f64, big_r: f64, sigma: f64, n: usize, m_aperture: f64) -> Result<f64> {
    if x_norm < 0.0 || x_norm >= big_r {
        return Err(Error::Domain(format!(
            "need 0 <= |x| < R, got |x| = {x_norm}, R = {big_r}"
        )));
    }
    if !(sigma > 0.0) || !(m_aperture > 0.0) {
        return Err(Error::Domain("sigma and the aperture must be positive".into()));
    }
    let nf = n as f64;
    let constant = (2.0 * m_aperture).powf(nf - 1.0)
        / (sigma * ((nf - 1.0) * m_aperture * m_aperture + 1.0).powf((nf + sigma) / 2.0));
    Ok(constant * (big_r - x_norm).powf(-sigma))
}

/// Numerically integrated tail int_{R^n \ B_R} |x - y|^{-n-sigma} dy, used
/// as the oracle the cone bound must stay below.
pub fn tail_integral_numeric(x_norm: f64, big_r: f64, sigma: f64, n: usize) -> Result<f64> {
    if x_norm >= big_r {
        return Err(Error::Domain("point must lie inside the ball".into()));
    }
    match n {
        1 => Ok(((big_r - x_norm).powf(-sigma) + (big_r + x_norm).powf(-sigma)) / sigma),
        2 => {
            let (gn, gw) = gauss_legendre(48);
            Ok(disk_tail(x_norm, big_r, sigma, &gn, &gw))
        }
        _ => Err(Error::Domain("tail oracle supports n in {1, 2}".into())),
    }
}

/// The paper-style lower bound for L(B_R, R^n \ B_{R+r}) with
/// delta = min(2^-n, 2^{-n+2-p}), valid for r < delta R.
pub fn interaction_lower_bound(big_r: f64, r: f64, params: &EnergyParams) -> Result<f64> {
    let n = params.n as f64;
    let p = params.p;
    let alpha = params.alpha();
    let delta = (2f64.powf(-n)).min(2f64.powf(-n + 2.0 - p));
    if !(r > 0.0 && r < delta * big_r) {
        return Err(Error::Domain(format!(
            "bound needs 0 < r < delta R = {}",
            delta * big_r
        )));
    }
    let value = if alpha < 1.0 {
        delta * big_r.powf(n - alpha)
    } else if alpha == 1.0 {
        delta * big_r.powf(n - 1.0) * (big_r / r).ln()
    } else {
        delta * big_r.powf(n - alpha) * (r / big_r).powf(1.0 - alpha)
    };
    Ok(value)
}

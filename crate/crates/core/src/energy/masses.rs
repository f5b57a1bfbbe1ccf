//! Exact and semi-analytic kernel masses over cell products.
//!
//! For the kernel |x - y|^(-n - sp) the contribution of a cell pair splits
//! into the field factor and a pure kernel mass. In 1D every mass has a
//! closed form (a second difference of the kernel's double antiderivative).
//! In 2D the touching masses reduce, after scaling to unit cells, to a small
//! set of reference constants computed once per exponent.
//!
//! For sp >= 1 the piecewise-constant interpretation has infinite energy on
//! touching cell pairs, so those pairs switch to a linear local model: the
//! field difference is g * (x - y) with g the finite-difference slope, and
//! the kernel mass carries the extra |x - y|^p factor.

use crate::util::{gauss_legendre, gauss_on, tanh_sinh};

/// Double antiderivative of r^(-1-alpha): F'' = r^(-1-alpha), F(0) = 0 when
/// alpha < 1.
fn f2(r: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        -r.ln()
    } else {
        r.powf(1.0 - alpha) / (alpha * (alpha - 1.0))
    }
}

/// Exact mass of |x-y|^(-1-alpha) over two 1D cells of width h whose centers
/// are d apart (d >= h; d = h needs alpha < 1).
pub fn pair_mass_1d(d: f64, h: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        let dd = d * d;
        (dd / (dd - h * h)).ln()
    } else {
        f2(d + h, alpha) - 2.0 * f2(d, alpha) + f2(d - h, alpha)
    }
}

/// Exact mass of |x-y|^(-1-alpha) over cell [a, a+h] times the half line
/// [l, +inf), for l >= a + h. Finite at l = a + h only when alpha < 1.
pub fn tail_mass_1d(a: f64, h: f64, l: f64, alpha: f64) -> f64 {
    let b = a + h;
    if alpha == 1.0 {
        ((l - a) / (l - b)).ln()
    } else {
        ((l - a).powf(1.0 - alpha) - (l - b).powf(1.0 - alpha)) / (alpha * (1.0 - alpha))
    }
}

/// Masses for the 1D linear local model on touching pairs: the kernel picks
/// up |x - y|^p, i.e. exponent beta = alpha - p < 0.
pub struct GradMasses1d {
    /// integral of |x-y|^(p-1-alpha) over adjacent cells, times h^-p
    pub adjacent: f64,
    /// same over a cell with itself, times h^-p (self pairs use the central
    /// difference slope over 2h, so the h^-p normalization is external)
    pub self_cell: f64,
}

pub fn grad_masses_1d(h: f64, alpha: f64, p: f64) -> GradMasses1d {
    let beta = alpha - p; // < 0
    let g2 = |r: f64| -> f64 {
        if r == 0.0 {
            0.0
        } else {
            r.powf(1.0 - beta) / (beta * (beta - 1.0))
        }
    };
    GradMasses1d {
        adjacent: g2(2.0 * h) - 2.0 * g2(h),
        self_cell: 2.0 * g2(h),
    }
}

// ---------------------------------------------------------------------------
// 2D reference masses at unit cell size.
//
// M(offset, h) = h^(4-e) * Mhat(offset) for the kernel |z|^(-e), where Mhat
// integrates the kernel against the tensor hat overlap of two unit cells.
// ---------------------------------------------------------------------------

/// int_0^top cos^nu(theta) d(theta) for nu in (-2, 1], top < pi/2.
///
/// The integrand can blow up at pi/2 (nu < 0), so past pi/4 the substitution
/// phi = pi/2 - theta is used with the power-law endpoint split off in
/// closed form; the remainder sin^nu(phi) - phi^nu is bounded.
fn theta_integral(top: f64, nu: f64, gauss: &(Vec<f64>, Vec<f64>)) -> f64 {
    use std::f64::consts::FRAC_PI_4;
    let head = gauss_on(
        &|t: f64| t.cos().powf(nu),
        0.0,
        top.min(FRAC_PI_4),
        &gauss.0,
        &gauss.1,
    );
    if top <= FRAC_PI_4 {
        return head;
    }
    let phi0 = std::f64::consts::FRAC_PI_2 - top;
    let power_part = if nu == -1.0 {
        (FRAC_PI_4 / phi0).ln()
    } else {
        (FRAC_PI_4.powf(nu + 1.0) - phi0.powf(nu + 1.0)) / (nu + 1.0)
    };
    let remainder = tanh_sinh(&|phi: f64| phi.sin().powf(nu) - phi.powf(nu), phi0, FRAC_PI_4);
    head + power_part + remainder
}

/// inner integral A(z1) = int_0^1 (z1^2 + t^2)^(-e/2) dt via the angular
/// substitution t = z1 tan(theta); exact in the singular limit z1 -> 0.
fn inner_plain(z1: f64, e: f64, gauss: &(Vec<f64>, Vec<f64>)) -> f64 {
    if z1 == 0.0 {
        return f64::INFINITY;
    }
    let top = (1.0 / z1).atan();
    z1.powf(1.0 - e) * theta_integral(top, e - 2.0, gauss)
}

/// inner integral B(z1) = int_0^1 t (z1^2 + t^2)^(-e/2) dt, closed form.
fn inner_weighted(z1: f64, e: f64) -> f64 {
    ((z1 * z1 + 1.0).powf((2.0 - e) / 2.0) - z1.powf(2.0 - e)) / (2.0 - e)
}

/// Reference mass for two unit cells sharing an edge, offset (1, 0).
/// The outer integrand behaves like z1^(2-e) near the contact; tanh-sinh
/// quadrature absorbs the singularity.
pub fn ref_mass_edge(e: f64) -> f64 {
    let gauss = gauss_legendre(48);
    // I(z1) = int_{-1}^{1} (1 - |z2|) (z1^2 + z2^2)^(-e/2) dz2
    //       = 2 [A(z1) - B(z1)]
    let inner = |z1: f64| 2.0 * (inner_plain(z1, e, &gauss) - inner_weighted(z1, e));
    tanh_sinh(&|z1: f64| z1 * inner(z1), 0.0, 1.0)
        + tanh_sinh(&|z1: f64| (2.0 - z1) * inner(z1), 1.0, 2.0)
}

/// Reference mass for two unit cells sharing a corner, offset (1, 1).
pub fn ref_mass_corner(e: f64) -> f64 {
    let gauss = gauss_legendre(48);
    // inner over z2 in [0, 2] with weight (1 - |z2 - 1|):
    // int_0^1 z2 (...) dz2 = B(z1) exactly, plus a smooth piece on [1, 2].
    let inner = |z1: f64| {
        let smooth = |z2: f64| (2.0 - z2) * (z1 * z1 + z2 * z2).powf(-e / 2.0);
        inner_weighted(z1, e) + gauss_on(&smooth, 1.0, 2.0, &gauss.0, &gauss.1)
    };
    tanh_sinh(&|z1: f64| z1 * inner(z1), 0.0, 1.0)
        + tanh_sinh(&|z1: f64| (2.0 - z1) * inner(z1), 1.0, 2.0)
}

/// Reference self mass: both cells coincide (used by the 2D linear model,
/// where e = 2 + sp - p < 2 keeps it finite).
pub fn ref_mass_self(e: f64) -> f64 {
    let gauss = gauss_legendre(48);
    let inner = |z1: f64| 2.0 * (inner_plain(z1, e, &gauss) - inner_weighted(z1, e));
    2.0 * tanh_sinh(&|z1: f64| (1.0 - z1) * inner(z1), 0.0, 1.0)
}

/// Reference mass for a non-touching offset at unit scale, by tensor Gauss.
pub fn ref_mass_far(dx: f64, dy: f64, e: f64) -> f64 {
    let (gn, gw) = gauss_legendre(32);
    let inner = |z1: f64| {
        let f = |z2: f64| (1.0 - (z2 - dy).abs()) * (z1 * z1 + z2 * z2).powf(-e / 2.0);
        gauss_on(&f, dy - 1.0, dy, &gn, &gw) + gauss_on(&f, dy, dy + 1.0, &gn, &gw)
    };
    let f = |z1: f64| (1.0 - (z1 - dx).abs()) * inner(z1);
    gauss_on(&f, dx - 1.0, dx, &gn, &gw) + gauss_on(&f, dx, dx + 1.0, &gn, &gw)
}

/// Midpoint kernel mass with the second-order moment correction; good to a
/// fraction of a percent for center distances of 4h and beyond.
#[inline]
pub fn corrected_midpoint_2d(d2: f64, h: f64, e: f64) -> f64 {
    let k = d2.powf(-e / 2.0);
    let h4 = h * h * h * h;
    h4 * k * (1.0 + e * e * h * h / (12.0 * d2))
}

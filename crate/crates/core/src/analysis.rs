//! Empirical verification of the scaling statements: density-estimate scans,
//! local-limit sweeps, and log-log exponent fits.

use crate::energy::{inner_integral_kinetic, total_energy, EnergyParams};
use crate::error::{Error, Result};
use crate::fields::{interface_integral, level_set_volume, Field};
use crate::potentials::PotentialSpec;
use crate::util::abs_pow;

/// Least squares on (log x, log y); returns (slope, intercept, r^2).
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Input(format!(
            "exponent fit needs at least 3 pairs, got {}",
            xs.len().min(ys.len())
        )));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Input("exponent fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("exponent fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Volume of the unit ball in n dimensions (n = 1, 2).
pub fn omega_n(n: usize) -> f64 {
    match n {
        1 => 2.0,
        _ => std::f64::consts::PI,
    }
}

#[derive(Debug, Clone)]
pub struct DensityScan {
    pub theta1: f64,
    pub theta2: f64,
    pub theta_star: f64,
    pub theta_sup: f64,
    /// the band weight (1 + theta_star)^{-m}
    pub c_m_theta: f64,
    pub radii: Vec<f64>,
    pub v_values: Vec<f64>,
    pub interface_values: Vec<f64>,
    pub lhs_values: Vec<f64>,
    pub lhs_over_rn: Vec<f64>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// running minimum of LHS / r^n (the measured density constant)
    pub c_tilde_hat: f64,
    /// the recorded nondegeneracy seed: measure of B_{r0} cap {u > theta1}
    pub seed_radius: f64,
    pub seed_volume: f64,
}

fn scan_thresholds(spec: &PotentialSpec, theta1: f64, theta2: f64) -> (f64, f64) {
    let base = -1.0 + spec.q;
    let theta_star = theta1.min(theta2).min(base);
    let theta_sup = theta1.max(theta2).max(base);
    (theta_star, theta_sup)
}

fn validate_radii(u: &Field, radii: &[f64], factor: f64) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::Config("density scans need at least 3 radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan radii must be strictly increasing".into()));
    }
    let rmax = radii[radii.len() - 1];
    if factor * rmax > u.grid.outer_edge() + 1e-9 {
        return Err(Error::Config(format!(
            "largest radius {rmax} violates the B_{{{factor}r}} within Omega constraint \
             (need {factor}r <= box radius {})",
            u.grid.outer_edge()
        )));
    }
    Ok(())
}

/// The combined density scan: for each radius computes
/// c_{m,theta_*} * band integral + volume above theta2, divides by r^n, and
/// fits the growth exponent (expected to be near n).
pub fn density_scan(
    u: &Field,
    spec: &PotentialSpec,
    thetas: (f64, f64),
    radii: &[f64],
) -> Result<DensityScan> {
    validate_radii(u, radii, 3.0)?;
    let (theta1, theta2) = thetas;
    let (theta_star, theta_sup) = scan_thresholds(spec, theta1, theta2);
    let seed_radius = radii[0];
    let seed_volume = level_set_volume(u, theta1, seed_radius)?;
    if !(seed_volume > 0.0) {
        return Err(Error::Domain(format!(
            "nondegeneracy seed unmet: B_{seed_radius} cap {{u > {theta1}}} has measure 0"
        )));
    }
    let c_m_theta = (1.0 + theta_star).powf(-spec.m);
    let n = u.grid.n;
    let mut v_values = Vec::new();
    let mut interface_values = Vec::new();
    let mut lhs_values = Vec::new();
    let mut lhs_over_rn = Vec::new();
    for &r in radii {
        let v = level_set_volume(u, theta2, r)?;
        let band = if theta_star < theta_sup {
            interface_integral(u, theta_star, theta_sup, r, spec.m)?
        } else {
            0.0
        };
        let lhs = c_m_theta * band + v;
        v_values.push(v);
        interface_values.push(band);
        lhs_values.push(lhs);
        lhs_over_rn.push(lhs / r.powi(n as i32));
    }
    let (fitted_exponent, _, r_squared) = fit_exponent(radii, &lhs_values)?;
    let c_tilde_hat = lhs_over_rn.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DensityScan {
        theta1,
        theta2,
        theta_star,
        theta_sup,
        c_m_theta,
        radii: radii.to_vec(),
        v_values,
        interface_values,
        lhs_values,
        lhs_over_rn,
        fitted_exponent,
        r_squared,
        c_tilde_hat,
        seed_radius,
        seed_volume,
    })
}

#[derive(Debug, Clone)]
pub struct ReabsorptionRow {
    pub radius: f64,
    pub band_integral: f64,
    /// lambda_{theta_sup}^{-1} * E(u, B_r), the bound that reabsorbs the band
    pub energy_bound: f64,
}

#[derive(Debug, Clone)]
pub struct FullDensityScan {
    pub theta2: f64,
    pub radii: Vec<f64>,
    pub v_values: Vec<f64>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    pub c_tilde_hat: f64,
    pub margins: Vec<ReabsorptionRow>,
}

/// Volume-only density scan under the strengthened potential lower bound;
/// also reports, per radius, the band integral against the energy bound that
/// absorbs it.
pub fn full_density_scan(
    u: &Field,
    spec: &PotentialSpec,
    thetas: (f64, f64),
    radii: &[f64],
    params: &EnergyParams,
) -> Result<FullDensityScan> {
    validate_radii(u, radii, 4.0)?;
    let (theta1, theta2) = thetas;
    let (theta_star, theta_sup) = scan_thresholds(spec, theta1, theta2);
    let seed_volume = level_set_volume(u, theta1, radii[0])?;
    if !(seed_volume > 0.0) {
        return Err(Error::Domain("nondegeneracy seed unmet".into()));
    }
    let n = u.grid.n;
    let lambda_inv = 1.0 / spec.lambda_mu(theta_sup);
    let quiet = params.clone().without_divergence_check();
    let mut v_values = Vec::new();
    let mut margins = Vec::new();
    for &r in radii {
        let v = level_set_volume(u, theta2, r)?;
        v_values.push(v);
        let band = if theta_star < theta_sup {
            interface_integral(u, theta_star, theta_sup, r, spec.m)?
        } else {
            0.0
        };
        let energy = total_energy(u, r, &quiet, spec)?.total;
        margins.push(ReabsorptionRow {
            radius: r,
            band_integral: band,
            energy_bound: lambda_inv * energy,
        });
    }
    let (fitted_exponent, _, r_squared) = fit_exponent(radii, &v_values)?;
    let c_tilde_hat = radii
        .iter()
        .zip(&v_values)
        .map(|(r, v)| v / r.powi(n as i32))
        .fold(f64::INFINITY, f64::min);
    Ok(FullDensityScan {
        theta2,
        radii: radii.to_vec(),
        v_values,
        fitted_exponent,
        r_squared,
        c_tilde_hat,
        margins,
    })
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub s_values: Vec<f64>,
    pub measured: Vec<f64>,
    pub limit: f64,
    pub relative_errors: Vec<f64>,
    /// true when the kernel scale at this s is resolved by the grid
    /// (the working rule is s <= 1 - 4h)
    pub resolved: Vec<bool>,
}

/// Measures (1-s) * int_O int_{R^n} |v(x)-v(y)|^p K against the local limit
/// (K_{n,p}/p) * int_O |grad v|^p computed on the same grid.
pub fn gamma_sweep(v: &Field, omega_radius: f64, p: f64, s_list: &[f64]) -> Result<GammaSweep> {
    if s_list.is_empty() {
        return Err(Error::Config("empty s list".into()));
    }
    if s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("s values must be strictly increasing".into()));
    }
    let grid = v.grid;
    let h = grid.h;
    let knp = crate::energy::knp_constant(grid.n, p);
    // discrete local limit on the same grid
    let nn = grid.cells_per_axis as i64;
    let val = |row: i64, col: i64| -> f64 {
        if row < 0 || col < 0 || row >= nn || col >= nn {
            let half = (nn - 1) as f64 / 2.0;
            v.exterior
                .eval(grid.n, [(col as f64 - half) * h, (row as f64 - half) * h])
        } else {
            match grid.n {
                1 => v.values[col as usize],
                _ => v.values[(row * nn + col) as usize],
            }
        }
    };
    let mut limit = 0.0;
    for i in 0..grid.num_cells() {
        if grid.radius(i) > omega_radius + 1e-12 {
            continue;
        }
        let gn = match grid.n {
            1 => ((val(0, i as i64 + 1) - val(0, i as i64 - 1)) / (2.0 * h)).abs(),
            _ => {
                let (r, c) = ((i as i64) / nn, (i as i64) % nn);
                let gx = (val(r, c + 1) - val(r, c - 1)) / (2.0 * h);
                let gy = (val(r + 1, c) - val(r - 1, c)) / (2.0 * h);
                (gx * gx + gy * gy).sqrt()
            }
        };
        limit += abs_pow(gn, p) * grid.cell_volume();
    }
    limit *= knp / p;

    let mut measured = Vec::new();
    let mut relative_errors = Vec::new();
    let mut resolved = Vec::new();
    for &s in s_list {
        let params = EnergyParams::new(s, p, grid.n)?;
        let raw = inner_integral_kinetic(v, omega_radius, &params)?;
        let m = (1.0 - s) * raw;
        measured.push(m);
        relative_errors.push(if limit != 0.0 {
            (m - limit).abs() / limit
        } else {
            m.abs()
        });
        resolved.push(s <= 1.0 - 4.0 * h);
    }
    Ok(GammaSweep {
        s_values: s_list.to_vec(),
        measured,
        limit,
        relative_errors,
        resolved,
    })
}

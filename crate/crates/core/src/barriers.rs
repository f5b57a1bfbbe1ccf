//! The explicit radial comparison function psi (worth -1 on B_{R+1}, +1
//! outside B_{R+2}) and the three-regime energy upper bound experiment built
//! on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::fit_exponent;
use crate::error::{Error, Result};
use crate::fields::{make_field, Exterior, Field, Grid, Profile};
use crate::energy::{cross_interaction, total_energy, EnergyParams};
use crate::potentials::Potential;

/// psi(x) = -1 + 2 min((|x| - R - 1)^+, 1).
pub fn eval_psi(big_r: f64, r_norm: f64) -> f64 {
    -1.0 + 2.0 * ((r_norm - big_r - 1.0).max(0.0)).min(1.0)
}

/// d(x) = max(R - |x|, 1).
pub fn eval_d(big_r: f64, r_norm: f64) -> f64 {
    (big_r - r_norm).max(1.0)
}

/// The barrier with its ball radius; psi is radial, nondecreasing in |x| and
/// globally 2-Lipschitz.
#[derive(Debug, Clone, Copy)]
pub struct BarrierPsi {
    pub big_r: f64,
}

impl BarrierPsi {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        eval_psi(self.big_r, (x[0] * x[0] + x[1] * x[1]).sqrt())
    }
}

/// Which side of s = 1/p the parameters sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Sub,
    Crit,
    Super,
}

pub fn regime(s: f64, p: f64) -> Regime {
    let alpha = s * p;
    if alpha < 1.0 {
        Regime::Sub
    } else if alpha == 1.0 {
        Regime::Crit
    } else {
        Regime::Super
    }
}

/// The regime envelope F(R) with unit front constant:
/// R^{n-sp}/(s(1-sp)), R^{n-1} log(R)/s, or R^{n-1}/(s(sp-1)).
pub fn regime_f(big_r: f64, params: &EnergyParams) -> (Regime, f64) {
    let alpha = params.alpha();
    let n = params.n as f64;
    let reg = regime(params.s, params.p);
    let value = match reg {
        Regime::Sub => big_r.powf(n - alpha) / (params.s * (1.0 - alpha)),
        Regime::Crit => big_r.powf(n - 1.0) * big_r.ln() / params.s,
        Regime::Super => big_r.powf(n - 1.0) / (params.s * (alpha - 1.0)),
    };
    (reg, value)
}

/// Samples random pairs and checks |psi(x) - psi(y)| <= 2 d(x)^{-1} |x - y|
/// when |x - y| < d(x), and <= 2 otherwise. Returns the worst slack deficit,
/// which must be <= 0.
pub fn lipschitz_bound_check(big_r: f64, samples: usize, n: usize, seed: u64) -> Result<f64> {
    if samples < 100 {
        return Err(Error::Config("need at least 100 sample pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = big_r + 4.0;
    let mut worst = f64::NEG_INFINITY;
    let psi = BarrierPsi { big_r };
    for _ in 0..samples {
        let draw = |rng: &mut ChaCha8Rng| -> [f64; 2] {
            match n {
                1 => [rng.gen_range(-span..span), 0.0],
                _ => [rng.gen_range(-span..span), rng.gen_range(-span..span)],
            }
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        let dpsi = (psi.eval(x) - psi.eval(y)).abs();
        let dx = eval_d(big_r, (x[0] * x[0] + x[1] * x[1]).sqrt());
        let bound = if dist < dx { 2.0 * dist / dx } else { 2.0 };
        worst = worst.max(dpsi - bound);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct BarrierSweepRow {
    pub big_r: f64,
    pub s: f64,
    pub p: f64,
    pub n: usize,
    pub energy_kinetic: f64,
    pub energy_potential: f64,
    pub f_r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct BarrierSweep {
    pub rows: Vec<BarrierSweepRow>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// max observed ratio, the measured stand-in for the front constant
    pub c_bar_hat: f64,
}

/// Measures E(psi, B_{R+2}) across radii against the regime envelope F(R).
pub fn barrier_energy_sweep<P: Potential>(
    r_list: &[f64],
    params: &EnergyParams,
    pot: &P,
    h: f64,
) -> Result<BarrierSweep> {
    if h > 0.25 {
        return Err(Error::Config(format!(
            "h = {h} does not resolve the unit ramp of psi (need h <= 0.25)"
        )));
    }
    let mut rows = Vec::new();
    for &big_r in r_list {
        if big_r < 2.0 {
            return Err(Error::Config(format!("barrier radius {big_r} below 2")));
        }
        let grid = Grid::from_box(params.n, h, big_r + 3.0)?;
        let psi = make_field(
            grid,
            &Profile::BarrierPsi { big_r },
            Exterior::Constant(1.0),
        )?;
        let bd = total_energy(&psi, big_r + 2.0, params, pot)?;
        let (_, f_r) = regime_f(big_r, params);
        rows.push(BarrierSweepRow {
            big_r,
            s: params.s,
            p: params.p,
            n: params.n,
            energy_kinetic: (1.0 - params.s) * (bd.kinetic_interior + bd.kinetic_cross),
            energy_potential: bd.potential,
            f_r,
            ratio: bd.total / f_r,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.big_r).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.energy_kinetic + r.energy_potential)
        .collect();
    let (slope, _, r2) = fit_exponent(&xs, &ys)?;
    let c_bar_hat = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(BarrierSweep {
        rows,
        fitted_exponent: slope,
        r_squared: r2,
        c_bar_hat,
    })
}

#[derive(Debug, Clone)]
pub struct EnergyBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub barrier_energy: f64,
    pub cross_term: f64,
    pub pass: bool,
}

/// Checks the computable endpoint of the comparison argument:
/// E(u, B_R) <= E(psi, B_{R+2}) + (1-s) * u(B_R, complement of B_{R+1}).
pub fn minimizer_energy_bound_check<P: Potential>(
    u: &Field,
    big_r: f64,
    params: &EnergyParams,
    pot: &P,
) -> Result<EnergyBoundCheck> {
    if u.grid.outer_edge() < big_r + 2.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "field box {} does not contain B_{{R+2}} = B_{}",
            u.grid.outer_edge(),
            big_r + 2.0
        )));
    }
    let lhs = total_energy(u, big_r, params, pot)?.total;
    let psi = make_field(
        u.grid,
        &Profile::BarrierPsi { big_r },
        Exterior::Constant(1.0),
    )?;
    let barrier_energy = total_energy(&psi, big_r + 2.0, params, pot)?.total;
    let cross = cross_interaction(u, big_r, big_r + 1.0, params)?;
    let rhs = barrier_energy + (1.0 - params.s) * cross;
    Ok(EnergyBoundCheck {
        lhs,
        rhs,
        barrier_energy,
        cross_term: cross,
        pass: lhs <= rhs * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_piecewise_values() {
        assert_eq!(eval_psi(5.0, 5.0), -1.0);
        assert_eq!(eval_psi(5.0, 6.0), -1.0);
        assert_eq!(eval_psi(5.0, 6.5), 0.0);
        assert_eq!(eval_psi(5.0, 7.0), 1.0);
        assert_eq!(eval_psi(5.0, 8.0), 1.0);
    }

    #[test]
    fn d_floors_at_one() {
        assert_eq!(eval_d(5.0, 0.0), 5.0);
        assert_eq!(eval_d(5.0, 5.0), 1.0);
        assert_eq!(eval_d(5.0, 4.5), 1.0);
        assert_eq!(eval_d(5.0, 9.0), 1.0);
    }

    #[test]
    fn psi_is_radial_monotone_and_2_lipschitz() {
        let prev = |r: f64| eval_psi(4.0, r);
        let mut last = -1.0;
        for i in 0..200 {
            let r = i as f64 * 0.05;
            let v = prev(r);
            assert!(v + 1e-12 >= last);
            assert!((-1.0..=1.0).contains(&v));
            last = v;
        }
        for i in 0..199 {
            let r = i as f64 * 0.05;
            assert!((prev(r + 0.05) - prev(r)).abs() <= 2.0 * 0.05 + 1e-12);
        }
    }

    #[test]
    fn lipschitz_check_clean_on_seeded_pairs() {
        let worst = lipschitz_bound_check(5.0, 10_000, 2, 7).unwrap();
        assert!(worst <= 0.0, "worst violation {worst}");
    }

    #[test]
    fn regime_selection_is_exhaustive_and_exclusive() {
        let p = 2.0;
        for &(s, want) in &[
            (0.25, Regime::Sub),
            (0.5, Regime::Crit),
            (0.75, Regime::Super),
        ] {
            assert_eq!(regime(s, p), want);
        }
    }

    #[test]
    fn sweep_rejects_coarse_grid() {
        let params = EnergyParams::new(0.25, 2.0, 1).unwrap();
        let pot = crate::potentials::ZeroPotential;
        assert!(barrier_energy_sweep(&[4.0], &params, &pot, 0.3).is_err());
    }
}

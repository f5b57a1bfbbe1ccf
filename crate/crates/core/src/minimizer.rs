//! Projected gradient descent over the box constraint |u| <= 1 with frozen
//! exterior data, and finite-suite certificates of epsilon- and Q-minimality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{kinetic_gradient_raw, total_energy, EnergyParams};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::potentials::Potential;

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub backtrack: f64,
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            max_iters: 2000,
            grad_tol: 1e-7,
            step_init: 1.0,
            backtrack: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeStatus {
    Converged,
    MaxIters,
    /// The line search found no descent at the minimal step.
    Stagnated,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub status: MinimizeStatus,
    pub iterations: usize,
    pub final_energy: f64,
    pub trace: Vec<TraceRow>,
}

/// Per-cell partial derivatives of the discrete total energy; exterior cells
/// (outside Omega) are frozen and get exactly zero.
pub fn energy_gradient<P: Potential>(
    u: &Field,
    omega_radius: f64,
    params: &EnergyParams,
    pot: &P,
) -> Result<Vec<f64>> {
    let mut grad = kinetic_gradient_raw(u, omega_radius, params)?;
    let vol = u.grid.cell_volume();
    let one_minus_s = 1.0 - params.s;
    for (i, gi) in grad.iter_mut().enumerate() {
        if u.grid.radius(i) <= omega_radius + 1e-12 {
            *gi = one_minus_s * *gi + pot.deriv(u.values[i]) * vol;
        } else {
            *gi = 0.0;
        }
    }
    Ok(grad)
}

/// Projected gradient descent with backtracking; every iterate stays in
/// [-1, 1] cell-wise with exterior cells untouched, and the accepted energy
/// sequence is strictly decreasing.
pub fn minimize<P: Potential>(
    u0: &Field,
    omega_radius: f64,
    params: &EnergyParams,
    pot: &P,
    cfg: &MinimizeConfig,
) -> Result<(Field, MinimizeReport)> {
    if cfg.max_iters == 0 || !(cfg.grad_tol > 0.0) {
        return Err(Error::Config("max_iters >= 1 and grad_tol > 0 required".into()));
    }
    if !(0.0 < cfg.backtrack && cfg.backtrack < 1.0) {
        return Err(Error::Config("backtracking factor must lie in (0, 1)".into()));
    }
    let quiet = params.clone().without_divergence_check();
    let free: Vec<bool> = (0..u0.grid.num_cells())
        .map(|i| u0.grid.radius(i) <= omega_radius + 1e-12)
        .collect();

    let mut current = u0.clone();
    current.profile = None;
    let mut energy = total_energy(&current, omega_radius, &quiet, pot)?.total;
    let mut step = cfg.step_init;
    let mut trace = Vec::new();
    let mut status = MinimizeStatus::MaxIters;
    let mut iterations = 0;

    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let grad = energy_gradient(&current, omega_radius, &quiet, pot)?;
        // fixed-point residual of the projected gradient map
        let resid = current
            .values
            .iter()
            .zip(&grad)
            .zip(&free)
            .map(|((v, g), f)| {
                if *f {
                    (v - (v - g).clamp(-1.0, 1.0)).abs()
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max);
        trace.push(TraceRow {
            iter,
            energy,
            grad_norm: resid,
            step,
        });
        if resid <= cfg.grad_tol {
            status = MinimizeStatus::Converged;
            break;
        }

        // backtracking along the projection arc
        let mut accepted = false;
        while step > 1e-18 {
            let mut trial = current.clone();
            let mut decrease_model = 0.0;
            for i in 0..trial.values.len() {
                if free[i] {
                    let next = (trial.values[i] - step * grad[i]).clamp(-1.0, 1.0);
                    decrease_model += grad[i] * (trial.values[i] - next);
                    trial.values[i] = next;
                }
            }
            let trial_energy = total_energy(&trial, omega_radius, &quiet, pot)?.total;
            if trial_energy <= energy - 1e-4 * decrease_model && trial_energy < energy {
                current = trial;
                energy = trial_energy;
                accepted = true;
                // cautiously regrow the step for the next iteration
                step = (step / cfg.backtrack).min(cfg.step_init * 1e3);
                break;
            }
            step *= cfg.backtrack;
        }
        if !accepted {
            status = MinimizeStatus::Stagnated;
            break;
        }
    }

    Ok((
        current,
        MinimizeReport {
            status,
            iterations,
            final_energy: energy,
            trace,
        },
    ))
}

#[derive(Debug, Clone)]
pub enum CertKind {
    Epsilon(f64),
    Q { q: f64, e0: f64, implied_epsilon: f64 },
}

#[derive(Debug, Clone)]
pub struct MinimalityCertificate {
    pub kind: CertKind,
    pub candidates_tested: usize,
    pub worst_violation: f64,
    pub pass: bool,
}

/// A named competitor field that agrees with the base field outside Omega.
pub type Candidate = (String, Field);

/// The documented, seeded candidate suite: the field itself, constants,
/// clipped translates, a projected-gradient refinement, and random
/// perturbations; all agree with u outside Omega.
pub fn standard_candidate_suite<P: Potential>(
    u: &Field,
    omega_radius: f64,
    params: &EnergyParams,
    pot: &P,
    seed: u64,
) -> Result<Vec<Candidate>> {
    let free: Vec<bool> = (0..u.grid.num_cells())
        .map(|i| u.grid.radius(i) <= omega_radius + 1e-12)
        .collect();
    let overwrite = |name: &str, f: &dyn Fn(usize, f64) -> f64| -> Candidate {
        let mut v = u.clone();
        v.profile = None;
        for i in 0..v.values.len() {
            if free[i] {
                v.values[i] = f(i, v.values[i]).clamp(-1.0, 1.0);
            }
        }
        (name.to_string(), v)
    };

    let mut suite = vec![("itself".to_string(), u.clone())];
    for c in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        suite.push(overwrite(&format!("const {c}"), &|_, _| c));
    }
    // clipped translates of the interior values
    for shift in [-2i64, -1, 1, 2] {
        let g = u.grid;
        let nn = g.cells_per_axis as i64;
        let translated = move |i: usize, old: f64| -> f64 {
            let (r, c) = ((i as i64) / nn, (i as i64) % nn);
            let cs = c - shift;
            if cs < 0 || cs >= nn {
                old
            } else {
                match g.n {
                    1 => u.values[cs as usize],
                    _ => u.values[(r * nn + cs) as usize],
                }
            }
        };
        suite.push(overwrite(&format!("translate {shift}"), &translated));
    }
    // a short projected-gradient refinement of u
    let cfg = MinimizeConfig {
        max_iters: 30,
        grad_tol: 1e-12,
        seed,
        ..MinimizeConfig::default()
    };
    let (refined, _) = minimize(u, omega_radius, params, pot, &cfg)?;
    suite.push(("pgd refinement".to_string(), refined));
    // seeded random perturbations
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..3 {
        let noise: Vec<f64> = (0..u.values.len())
            .map(|_| rng.gen_range(-0.1..0.1))
            .collect();
        suite.push(overwrite(&format!("perturbation {k}"), &|i, old| {
            old + noise[i]
        }));
    }
    Ok(suite)
}

fn check_candidate(u: &Field, v: &Field, omega_radius: f64) -> Result<()> {
    if u.grid != v.grid {
        return Err(Error::Input("candidate lives on a different grid".into()));
    }
    if u.exterior != v.exterior {
        return Err(Error::Input("candidate has mismatched exterior data".into()));
    }
    for i in 0..u.values.len() {
        if u.grid.radius(i) > omega_radius + 1e-12 && u.values[i] != v.values[i] {
            return Err(Error::Input(format!(
                "candidate differs from the base field outside Omega at cell {i}"
            )));
        }
    }
    Ok(())
}

/// Tests E(u, Omega) <= eps + E(v, Omega) against every candidate; the
/// certificate records the worst violation (positive means failure).
pub fn certify_epsilon<P: Potential>(
    u: &Field,
    omega_radius: f64,
    params: &EnergyParams,
    pot: &P,
    eps: f64,
    suite: &[Candidate],
) -> Result<MinimalityCertificate> {
    let quiet = params.clone().without_divergence_check();
    let base = total_energy(u, omega_radius, &quiet, pot)?.total;
    let mut worst = f64::NEG_INFINITY;
    for (_, v) in suite {
        check_candidate(u, v, omega_radius)?;
        let ev = total_energy(v, omega_radius, &quiet, pot)?.total;
        worst = worst.max(base - eps - ev);
    }
    Ok(MinimalityCertificate {
        kind: CertKind::Epsilon(eps),
        candidates_tested: suite.len(),
        worst_violation: worst,
        pass: worst <= 1e-9 * (1.0 + base.abs()),
    })
}

/// Tests E(u, A) <= Q E(v, A) over balls A = B_r and candidates restricted to
/// each A; also reports the implied epsilon = (Q - 1) E_0 with E_0 the
/// measured energy of u on the widest tested ball.
pub fn certify_q<P: Potential>(
    u: &Field,
    params: &EnergyParams,
    pot: &P,
    q: f64,
    subdomain_radii: &[f64],
    suite: &[Candidate],
) -> Result<MinimalityCertificate> {
    if q < 1.0 {
        return Err(Error::Config(format!("Q = {q} must be >= 1")));
    }
    let quiet = params.clone().without_divergence_check();
    let mut worst = f64::NEG_INFINITY;
    let mut e0 = 0.0f64;
    for &r in subdomain_radii {
        let base = total_energy(u, r, &quiet, pot)?.total;
        e0 = e0.max(base);
        for (_, cand) in suite {
            if cand.grid != u.grid {
                return Err(Error::Input("candidate lives on a different grid".into()));
            }
            // restrict the candidate to A = B_r
            let mut v = u.clone();
            v.profile = None;
            for i in 0..v.values.len() {
                if u.grid.radius(i) <= r + 1e-12 {
                    v.values[i] = cand.values[i];
                }
            }
            let ev = total_energy(&v, r, &quiet, pot)?.total;
            worst = worst.max(base - q * ev);
        }
    }
    Ok(MinimalityCertificate {
        kind: CertKind::Q {
            q,
            e0,
            implied_epsilon: (q - 1.0) * e0,
        },
        candidates_tested: suite.len() * subdomain_radii.len(),
        worst_violation: worst,
        pass: worst <= 1e-9 * (1.0 + e0.abs()),
    })
}

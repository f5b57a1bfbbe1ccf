//! Closed-form and independent-quadrature oracles for the energy module.

use fracwell::energy::{inner_integral_kinetic, kinetic_energy, total_energy, EnergyParams};
use fracwell::fields::{make_field, Exterior, Field, Grid, Profile};
use fracwell::potentials::{Normalization, PotentialSpec, ZeroPotential};
use fracwell::util::adaptive_simpson;
use fracwell::{knp_constant, knp_gamma_closed_form, local_energy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full-space kinetic of the +-1 jump indicator of B_eta in 1D:
/// 2^p * I with I = int_{B_eta} int_{R \ B_eta} |x-y|^{-1-sp},
/// where I = 2 (2 eta)^{1-sp} / (sp (1-sp)).
fn jump_kinetic_closed_form(eta: f64, s: f64, p: f64) -> f64 {
    let alpha = s * p;
    2f64.powf(p) * 2.0 * (2.0 * eta).powf(1.0 - alpha) / (alpha * (1.0 - alpha))
}

/// The same tail integral by独 independent quadrature (endpoint tails split
/// off analytically).
fn jump_tail_numeric(eta: f64, alpha: f64) -> f64 {
    let inner = |x: f64| ((eta - x).powf(-alpha) + (eta + x).powf(-alpha)) / alpha;
    let cut = eta * 1e-6;
    let analytic_ends = 2.0 * cut.powf(1.0 - alpha) / (alpha * (1.0 - alpha));
    adaptive_simpson(&inner, -eta + cut, eta - cut, 1e-11) + analytic_ends
}

#[test]
fn indicator_kinetic_matches_closed_form() {
    let h = 1.0 / 512.0;
    let grid = Grid::from_box(1, h, 2.0).unwrap();
    for &(s, p) in &[(0.25, 2.0), (0.3, 1.5)] {
        let params = EnergyParams::new(s, p, 1).unwrap();
        let eta = 0.25;
        let u = make_field(grid, &Profile::Indicator { eta }, Exterior::Constant(-1.0)).unwrap();
        let bd = kinetic_energy(&u, grid.box_radius(), &params).unwrap();
        let raw = bd.kinetic_interior + bd.kinetic_cross;
        let expect = jump_kinetic_closed_form(eta, s, p);
        let rel = (raw - expect).abs() / expect;
        assert!(rel < 0.02, "(s,p)=({s},{p}): raw {raw} vs {expect}, rel {rel}");
        // cross-check the closed form itself against independent quadrature
        let alpha = s * p;
        let tail = jump_tail_numeric(eta, alpha);
        assert!(
            (2f64.powf(p) * tail - expect).abs() < 1e-4 * expect,
            "oracle self-check failed"
        );
    }
}

#[test]
fn indicator_eta_exponent_is_one_minus_sp() {
    let h = 1.0 / 512.0;
    let grid = Grid::from_box(1, h, 2.0).unwrap();
    let (s, p) = (0.25, 2.0);
    let params = EnergyParams::new(s, p, 1).unwrap();
    let etas = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];
    let mut kin = Vec::new();
    for &eta in &etas {
        let u = make_field(grid, &Profile::Indicator { eta }, Exterior::Constant(-1.0)).unwrap();
        let bd = kinetic_energy(&u, grid.box_radius(), &params).unwrap();
        kin.push(bd.kinetic_interior + bd.kinetic_cross);
    }
    let (slope, _, _) = fracwell::fit_exponent(&etas, &kin).unwrap();
    assert!(
        (slope - (1.0 - s * p)).abs() < 0.1,
        "fitted exponent {slope}"
    );
}

#[test]
fn constant_field_has_zero_kinetic() {
    let grid = Grid::from_box(1, 0.05, 2.0).unwrap();
    let u = make_field(grid, &Profile::Const(0.3), Exterior::Constant(0.3)).unwrap();
    let params = EnergyParams::new(0.4, 2.0, 1).unwrap();
    let bd = kinetic_energy(&u, 1.5, &params).unwrap();
    assert_eq!(bd.kinetic_interior, 0.0);
    assert_eq!(bd.kinetic_cross, 0.0);

    let grid2 = Grid::from_box(2, 0.25, 2.0).unwrap();
    let u2 = make_field(grid2, &Profile::Const(-1.0), Exterior::Constant(-1.0)).unwrap();
    let params2 = EnergyParams::new(0.4, 2.0, 2).unwrap();
    let bd2 = total_energy(&u2, 1.5, &params2, &ZeroPotential).unwrap();
    assert_eq!(bd2.total, 0.0);
}

#[test]
fn pure_phase_total_energy_is_zero() {
    let grid = Grid::from_box(1, 0.02, 2.0).unwrap();
    let u = make_field(grid, &Profile::Const(-1.0), Exterior::Constant(-1.0)).unwrap();
    let spec = PotentialSpec::calibrated(2.0, Normalization::Intro, 0.5).unwrap();
    let params = EnergyParams::new(0.3, 2.0, 1).unwrap();
    let bd = total_energy(&u, 1.5, &params, &spec).unwrap();
    assert_eq!(bd.total, 0.0);
}

#[test]
fn potential_part_of_zero_field() {
    // u = 0 on B_1, exterior 0, m = 2 Intro: potential = |B_1| W(0) = 0.5
    let grid = Grid::from_box(1, 1.0 / 512.0, 1.0).unwrap();
    let u = make_field(grid, &Profile::Const(0.0), Exterior::Constant(0.0)).unwrap();
    let spec = PotentialSpec::calibrated(2.0, Normalization::Intro, 0.5).unwrap();
    let params = EnergyParams::new(0.3, 2.0, 1).unwrap();
    let bd = total_energy(&u, 1.0, &params, &spec).unwrap();
    assert!((bd.potential - 0.5).abs() < 2e-3, "potential {}", bd.potential);
    assert_eq!(bd.kinetic_interior, 0.0);
}

#[test]
fn breakdown_invariant_holds() {
    let grid = Grid::from_box(1, 1.0 / 128.0, 2.0).unwrap();
    let u = make_field(
        grid,
        &Profile::Ramp { width: 1.0 },
        Exterior::TwoSided { left: -1.0, right: 1.0 },
    )
    .unwrap();
    let spec = PotentialSpec::calibrated(2.0, Normalization::Intro, 0.5).unwrap();
    let params = EnergyParams::new(0.25, 2.0, 1).unwrap();
    let bd = total_energy(&u, 1.5, &params, &spec).unwrap();
    assert!(bd.kinetic_interior >= 0.0 && bd.kinetic_cross >= 0.0 && bd.potential >= 0.0);
    let recon = (1.0 - params.s) * (bd.kinetic_interior + bd.kinetic_cross) + bd.potential;
    assert!((bd.total - recon).abs() < 1e-14 * bd.total.abs().max(1.0));
}

#[test]
fn domain_monotonicity_on_random_fields() {
    let grid = Grid::from_box(1, 1.0 / 64.0, 2.0).unwrap();
    let params = EnergyParams::new(0.35, 2.0, 1).unwrap();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..grid.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = Field::from_values(grid, values, Exterior::Constant(0.0)).unwrap();
        let quiet = params.clone().without_divergence_check();
        let small = kinetic_energy(&u, 1.0, &quiet).unwrap();
        let big = kinetic_energy(&u, 2.0, &quiet).unwrap();
        let ks = small.kinetic_interior + small.kinetic_cross;
        let kb = big.kinetic_interior + big.kinetic_cross;
        assert!(ks <= kb * (1.0 + 1e-12), "seed {seed}: {ks} > {kb}");
    }
}

#[test]
fn scaling_law_for_rescaled_fields() {
    // K(u_r, Omega/r) = r^{sp-n} K(u, Omega) for u_r(x) = u(r x):
    // resample the bump on a grid scaled by 1/r with the same cell count.
    let p = 2.0;
    for &s in &[0.25, 0.75] {
        let params = EnergyParams::new(s, p, 1).unwrap();
        let base = Grid::from_box(1, 1.0 / 256.0, 2.0).unwrap();
        let u = make_field(base, &Profile::CosSquared, Exterior::Constant(0.0)).unwrap();
        let bd = kinetic_energy(&u, base.box_radius(), &params.clone().without_divergence_check()).unwrap();
        for &r in &[0.5, 2.0] {
            let scaled_grid = Grid::new(1, base.h / r, base.cells_per_axis).unwrap();
            let prof = ScaledCos { r };
            let mut vals = Vec::with_capacity(scaled_grid.num_cells());
            for i in 0..scaled_grid.num_cells() {
                vals.push(prof.eval(scaled_grid.center(i)[0]));
            }
            let ur = Field::from_values(scaled_grid, vals, Exterior::Constant(0.0)).unwrap();
            let bdr = kinetic_energy(
                &ur,
                scaled_grid.box_radius(),
                &params.clone().without_divergence_check(),
            )
            .unwrap();
            let lhs = bdr.kinetic_interior + bdr.kinetic_cross;
            let rhs = r.powf(s * p - 1.0) * (bd.kinetic_interior + bd.kinetic_cross);
            let rel = (lhs - rhs).abs() / rhs;
            assert!(rel < 0.02, "s={s}, r={r}: {lhs} vs {rhs} (rel {rel})");
        }
    }
}

struct ScaledCos {
    r: f64,
}

impl ScaledCos {
    fn eval(&self, x: f64) -> f64 {
        let t = (self.r * x).abs();
        if t < 1.0 {
            let c = (std::f64::consts::FRAC_PI_2 * t).cos();
            c * c
        } else {
            0.0
        }
    }
}

#[test]
fn grid_convergence_on_smooth_field() {
    let params = EnergyParams::new(0.4, 2.0, 1).unwrap();
    let vals = |h: f64| {
        let grid = Grid::from_box(1, h, 2.0).unwrap();
        let u = make_field(grid, &Profile::CosSquared, Exterior::Constant(0.0)).unwrap();
        let bd = kinetic_energy(&u, grid.box_radius(), &params).unwrap();
        bd.kinetic_interior
    };
    let coarse = vals(1.0 / 128.0);
    let fine = vals(1.0 / 256.0);
    assert!(
        (coarse - fine).abs() / fine < 0.02,
        "coarse {coarse} vs fine {fine}"
    );
}

#[test]
fn divergence_flag_on_jump_data_for_sp_above_one() {
    let grid = Grid::from_box(1, 1.0 / 128.0, 1.0).unwrap();
    let u = make_field(grid, &Profile::Indicator { eta: 0.25 }, Exterior::Constant(-1.0)).unwrap();
    let params = EnergyParams::new(0.95, 2.0, 1).unwrap(); // sp = 1.9
    match kinetic_energy(&u, grid.box_radius(), &params) {
        Err(fracwell::Error::Divergent { ratio, .. }) => {
            assert!(ratio > 1.5, "ratio {ratio}");
        }
        other => panic!("expected a divergence flag, got {other:?}"),
    }
    // smooth data at the same parameters stays finite
    let v = make_field(grid, &Profile::CosSquared, Exterior::Constant(0.0)).unwrap();
    assert!(kinetic_energy(&v, grid.box_radius(), &params).is_ok());
}

#[test]
fn knp_values() {
    for &p in &[1.5, 2.0, 3.0] {
        assert_eq!(knp_constant(1, p), 2.0);
    }
    assert!((knp_constant(2, 2.0) - std::f64::consts::PI).abs() < 1e-8);
    assert!((knp_constant(2, 3.0) - 8.0 / 3.0).abs() < 1e-8);
    for &p in &[1.5, 2.0, 2.5, 3.0, 4.5] {
        let q = knp_constant(2, p);
        let cf = knp_gamma_closed_form(p);
        assert!((q - cf).abs() < 1e-8, "p={p}: {q} vs {cf}");
    }
}

#[test]
fn local_energy_of_linear_ramp() {
    // u(x) = x on B_{1/2}, p = 2, W = 0: (K_{1,2}/4) * |Omega| = 0.5
    let grid = Grid::from_box(1, 1.0 / 256.0, 1.0).unwrap();
    let u = make_field(
        grid,
        &Profile::Ramp { width: 1.0 },
        Exterior::TwoSided { left: -1.0, right: 1.0 },
    )
    .unwrap();
    let e = local_energy(&u, 0.5, 2.0, &ZeroPotential).unwrap();
    assert!((e - 0.5).abs() < 5e-3, "local energy {e}");
    // constant field: potential term only
    let c = make_field(grid, &Profile::Const(0.5), Exterior::Constant(0.5)).unwrap();
    let spec = PotentialSpec::calibrated(2.0, Normalization::Intro, 0.5).unwrap();
    let ec = local_energy(&c, 0.5, 2.0, &spec).unwrap();
    let expect = spec_eval(&spec, 0.5);
    assert!((ec - expect).abs() < 1e-2 * expect, "{ec} vs {expect}");
}

fn spec_eval(spec: &PotentialSpec, v: f64) -> f64 {
    use fracwell::potentials::Potential;
    spec.eval(v) * 1.0 // |B_{1/2}| = 1 in 1D
}

#[test]
fn gamma_form_accuracy_at_large_s() {
    // (1-s) * int_O int_R |v(x)-v(y)|^2 K -> pi^2/4 for the cos^2 bump;
    // at s = 0.95, h = 1/1024 the relative error must be below 10%.
    let grid = Grid::from_box(1, 1.0 / 1024.0, 2.0).unwrap();
    let v = make_field(grid, &Profile::CosSquared, Exterior::Constant(0.0)).unwrap();
    let limit = std::f64::consts::PI.powi(2) / 4.0;
    let mut errs = Vec::new();
    for &s in &[0.8, 0.9, 0.95] {
        let params = EnergyParams::new(s, 2.0, 1).unwrap();
        let measured = (1.0 - s) * inner_integral_kinetic(&v, 1.5, &params).unwrap();
        errs.push((measured - limit).abs() / limit);
    }
    assert!(errs[2] < 0.10, "rel err at s=0.95: {}", errs[2]);
    assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "errors {errs:?} not decreasing");
}

#[test]
fn bump_energy_upper_bound_from_scaling() {
    // u_eps total energy <= eps^{n-sp} (C (1-s) + eps^{sp} Lambda 2^m |B_1|),
    // with C the measured kinetic of the unscaled bump on B_1.
    let (s, p) = (0.25, 2.0);
    let params = EnergyParams::new(s, p, 1).unwrap();
    let spec = PotentialSpec::calibrated(2.0, Normalization::Intro, 0.5).unwrap();
    let grid = Grid::from_box(1, 1.0 / 1024.0, 1.5).unwrap();
    let base = make_field(grid, &Profile::LogBump { eps: 1.0 }, Exterior::Constant(-1.0)).unwrap();
    let c_meas = {
        let bd = kinetic_energy(&base, 1.0, &params).unwrap();
        bd.kinetic_interior + bd.kinetic_cross
    };
    let eps = 0.25;
    let u = make_field(grid, &Profile::LogBump { eps }, Exterior::Constant(-1.0)).unwrap();
    let bd = total_energy(&u, 1.0, &params, &spec).unwrap();
    let alpha = s * p;
    let bound = eps.powf(1.0 - alpha)
        * (c_meas * (1.0 - s) * 1.02 + eps.powf(alpha) * spec.big_lambda * 4.0 * 2.0);
    assert!(
        bd.total <= bound,
        "total {} exceeds the scaling bound {bound}",
        bd.total
    );
    // and the kinetic scaling itself: K(u_eps, B_1) = eps^{1-sp} K(u, B_{1/eps})
    let keps = kinetic_energy(&u, 1.0, &params).unwrap();
    let ratio = (keps.kinetic_interior + keps.kinetic_cross) / (eps.powf(1.0 - alpha) * c_meas);
    assert!((ratio - 1.0).abs() < 0.02, "scaling ratio {ratio}");
}

//! Numerical laboratory for nonlocal Allen-Cahn-type energies with
//! degenerate double-well potentials on bounded grids.
//!
//! The crate evaluates the renormalized free energy
//! (1-s) K_s^p(u, Omega) + int_Omega W(u), minimizes it over fields with
//! prescribed exterior data, and measures the quantitative scaling laws that
//! govern it: density-estimate growth, kernel interaction lower bounds,
//! barrier energy upper bounds, rearrangement inequalities, and the s -> 1
//! local limit with constant K_{n,p}.

pub mod analysis;
pub mod barriers;
pub mod energy;
pub mod error;
pub mod fields;
pub mod minimizer;
pub mod potentials;
pub mod util;

pub use analysis::{density_scan, fit_exponent, full_density_scan, gamma_sweep, DensityScan, FullDensityScan, GammaSweep};
pub use barriers::{barrier_energy_sweep, eval_d, eval_psi, lipschitz_bound_check, minimizer_energy_bound_check, BarrierPsi, BarrierSweep, Regime};
pub use energy::interaction::{cone_lower_bound, interaction_l, interaction_lower_bound, tail_integral_numeric};
pub use energy::{chat_p, inner_integral_kinetic, kinetic_energy, knp_constant, knp_gamma_closed_form, local_energy, total_energy, EnergyBreakdown, EnergyParams, SingularRule};
pub use error::{Error, Result};
pub use fields::{interface_integral, level_set_volume, make_field, symmetric_decreasing_rearrangement, Exterior, Field, Grid, LevelSetReport, Profile};
pub use minimizer::{certify_epsilon, certify_q, energy_gradient, minimize, standard_candidate_suite, CertKind, MinimalityCertificate, MinimizeConfig, MinimizeReport, MinimizeStatus};
pub use potentials::{calibrate_c1_q, check_derivative_identity, check_well_condition, eval_p, eval_potential, Normalization, Potential, PotentialSpec, RecursivePolynomial, ZeroPotential};

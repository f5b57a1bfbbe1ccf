use fracwell::energy::{inner_integral_kinetic, EnergyParams};
use fracwell::fields::{make_field, Exterior, Grid, Profile};

#[test]
fn diag() {
    let grid = Grid::from_box(1, 1.0/1024.0, 2.0).unwrap();
    let v = make_field(grid, &Profile::CosSquared, Exterior::Constant(0.0)).unwrap();
    let limit = std::f64::consts::PI.powi(2)/4.0;
    // discrete same-grid limit
    let sweep = fracwell::gamma_sweep(&v, 1.5, 2.0, &[0.5]).unwrap();
    println!("closed limit {limit}, discrete limit {}", sweep.limit);
    for s in [0.8, 0.85, 0.9, 0.925, 0.95, 0.975] {
        let params = EnergyParams::new(s, 2.0, 1).unwrap();
        let m = (1.0 - s)*inner_integral_kinetic(&v, 1.5, &params).unwrap();
        println!("s={s}: measured {m}, dev_closed {:+.5e}, dev_discrete {:+.5e}", m-limit, m-sweep.limit);
    }
}

//! Infiltration into a square domain with no-flux sides. With uniform
//! initial and top/bottom data the exact solution does not depend on x, so
//! the spread of θ across each row measures discretization asymmetry.
//!
//! cargo run --release --example infiltration_2d -- [sandy-clay|loam] [T] [n]

use std::time::Instant;

use richards_rbf::constitutive::SoilParams;
use richards_rbf::metrics::total_mass;
use richards_rbf::pointset::grid_2d;
use richards_rbf::rbf::KernelParams;
use richards_rbf::timestepper::{run_transient, PicardSettings, TransientSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let soil_name = args.first().map(String::as_str).unwrap_or("sandy-clay");
    let t_end: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(60.0);
    let n: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(41);
    let soil = SoilParams::by_name(soil_name).ok_or("unknown soil")?;

    let nodes = grid_2d(100.0, 100.0, n, n)?;
    let settings = PicardSettings {
        max_cutbacks: 6,
        ..PicardSettings::default()
    };
    let start = Instant::now();
    let mut solver = TransientSolver::new(soil, nodes.clone(), 5, KernelParams::new(0.6)?, settings)?;
    let times: Vec<f64> = (1..=4).map(|k| t_end * k as f64 / 4.0).collect();
    let traj = run_transient(&mut solver, t_end, 0.05, &times, &mut |_| {})?;
    let cut = traj.steps.iter().filter(|s| !s.nominal()).count();
    println!(
        "{} nodes, {} steps in {:.2?}, {cut} with cutback",
        nodes.len(),
        traj.steps.len(),
        start.elapsed()
    );

    for field in &traj.fields {
        let spread = (0..n)
            .map(|j| {
                let row = &field.theta[j * n..(j + 1) * n];
                let hi = row.iter().cloned().fold(f64::MIN, f64::max);
                let lo = row.iter().cloned().fold(f64::MAX, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max);
        println!(
            "t = {:7.2}  mass per unit length {:.6}  max row spread {:.3e}",
            field.t,
            total_mass(&field.theta, &nodes)?,
            spread
        );
    }
    Ok(())
}

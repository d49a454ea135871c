//! Vertical infiltration into a dry soil column.
//!
//! cargo run --release --example infiltration_1d -- [sandy-clay|loam] [T] [nz] [max_cutbacks]

use std::time::Instant;

use richards_rbf::constitutive::SoilParams;
use richards_rbf::pointset::grid_1d;
use richards_rbf::rbf::KernelParams;
use richards_rbf::timestepper::{run_transient, PicardSettings, TransientSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let soil_name = args.first().map(String::as_str).unwrap_or("sandy-clay");
    let t_end: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(600.0);
    let nz: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(201);
    let max_cutbacks: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(4);

    let soil = SoilParams::by_name(soil_name).ok_or("unknown soil")?;
    let nodes = grid_1d(100.0, nz)?;
    let settings = PicardSettings {
        max_cutbacks,
        ..PicardSettings::default()
    };
    let mut solver = TransientSolver::new(soil, nodes, 3, KernelParams::new(0.6)?, settings)?;

    let start = Instant::now();
    let mut cut_steps = 0;
    let mut max_iter = 0;
    let traj = run_transient(&mut solver, t_end, 0.05, &[t_end], &mut |rec| {
        max_iter = max_iter.max(rec.max_iterations());
        if !rec.nominal() {
            cut_steps += 1;
        }
    })?;
    println!(
        "{} steps in {:.2?}, largest Picard count {max_iter}, {cut_steps} steps needed cutback",
        traj.steps.len(),
        start.elapsed()
    );

    let field = traj.last().expect("initial field is always present");
    let z = solver.nodes().coords();
    let stride = (nz - 1) / 50;
    for i in (0..nz).step_by(stride.max(1)) {
        println!("{:8.3} {:.6}", z[i][1], field.theta[i]);
    }
    Ok(())
}

//! Meshless solver against the finite-difference reference on one column.
//!
//! cargo run --release --example compare_oracle -- [sandy-clay|loam] [T] [nz] [oracle_nz]

use std::time::Instant;

use richards_rbf::constitutive::SoilParams;
use richards_rbf::metrics::{compare_profiles, total_mass};
use richards_rbf::oracle_fd::{solve_fd_1d, FdConfig};
use richards_rbf::pointset::grid_1d;
use richards_rbf::rbf::KernelParams;
use richards_rbf::timestepper::{run_transient, PicardSettings, TransientSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let soil_name = args.first().map(String::as_str).unwrap_or("sandy-clay");
    let t_end: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(600.0);
    let nz: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(201);
    let oracle_nz: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(401);
    let soil = SoilParams::by_name(soil_name).ok_or("unknown soil")?;

    let start = Instant::now();
    let mut fd = FdConfig::new(soil, t_end);
    fd.nz = oracle_nz;
    let reference = solve_fd_1d(&fd)?;
    println!(
        "oracle: {} steps in {:.2?}, mass balance {:.2e}, inflow {:.4} cm",
        reference.steps,
        start.elapsed(),
        reference.mass.relative_error(),
        reference.mass.cumulative_inflow
    );

    let start = Instant::now();
    let nodes = grid_1d(100.0, nz)?;
    let settings = PicardSettings {
        max_cutbacks: 6,
        ..PicardSettings::default()
    };
    let mut solver = TransientSolver::new(soil, nodes.clone(), 3, KernelParams::new(0.6)?, settings)?;
    let traj = run_transient(&mut solver, t_end, 0.05, &[t_end], &mut |_| {})?;
    let cut = traj.steps.iter().filter(|s| !s.nominal()).count();
    println!(
        "meshless: {} steps in {:.2?}, {cut} with cutback",
        traj.steps.len(),
        start.elapsed()
    );

    let field = traj.last().expect("trajectory holds the initial field");
    let z: Vec<f64> = nodes.coords().iter().map(|c| c[1]).collect();
    let profile = reference.at(t_end).ok_or("missing oracle output")?;
    let report = compare_profiles(&z, &field.theta, &reference.z, &profile.theta)?;
    println!(
        "rmse {:.4e}  rel_l1 {:.4e}  ({} points)",
        report.rmse, report.rel_l1, report.n_points
    );
    let m0 = total_mass(&traj.fields[0].theta, &nodes)?;
    println!("meshless mass gain {:.4} cm", total_mass(&field.theta, &nodes)? - m0);
    Ok(())
}

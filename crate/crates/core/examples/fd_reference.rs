//! Finite-difference reference solution of the infiltration column alone,
//! with its water budget and the wetting-front depth over time.
//!
//! cargo run --release --example fd_reference -- [sandy-clay|loam] [T] [nz] [arithmetic|geometric|harmonic]

use richards_rbf::constitutive::SoilParams;
use richards_rbf::metrics::trapezoid;
use richards_rbf::oracle_fd::{solve_fd_1d, FdConfig, InterfaceMean};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let soil = SoilParams::by_name(args.first().map(String::as_str).unwrap_or("loam")).ok_or("unknown soil")?;
    let t_end: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(100.0);
    let nz: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(201);
    let mean = InterfaceMean::parse(args.get(3).map(String::as_str).unwrap_or("arithmetic")).ok_or("unknown mean")?;

    let mut cfg = FdConfig::new(soil, t_end);
    cfg.nz = nz;
    cfg.mean = mean;
    cfg.output_times = (0..=10).map(|k| t_end * k as f64 / 10.0).collect();
    let sol = solve_fd_1d(&cfg)?;
    println!(
        "{} steps, at most {} iterations per step, budget error {:.2e}",
        sol.steps,
        sol.max_iterations,
        sol.mass.relative_error()
    );
    let mid = 0.5 * (soil.theta_0() + soil.theta_s());
    for p in &sol.profiles {
        let front = sol.z[p.theta.iter().position(|&t| t < mid).unwrap_or(sol.z.len() - 1)];
        println!(
            "t = {:8.2}  storage {:.5} cm  front near {front:6.2} cm",
            p.t,
            trapezoid(&sol.z, &p.theta)?
        );
    }
    Ok(())
}

//! Assembles the first Picard system of a scenario, solves it with the
//! sparse LU and prints its size, residual and a few rows.
//!
//! cargo run --example first_system -- [1|2] [n]

use richards_rbf::config::parse_config;
use richards_rbf::driver::first_system;
use richards_rbf::system::solve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dim: usize = args.first().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let n: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(21);
    let text = if dim == 1 {
        format!("dimension = 1\nsoil = sandy_clay\nnz = {n}\nn_s = 3\nt_end = 1\n")
    } else {
        format!("dimension = 2\nsoil = sandy_clay\nnx = {n}\nnz = {n}\nt_end = 1\n")
    };
    let sys = first_system(&parse_config(&text)?)?;
    let u = solve(&sys)?;
    println!("n = {}, nnz = {}", sys.n(), sys.nnz());
    println!("residual {:.3e} (rhs norm {:.3e})", sys.residual_inf(&u), sys.rhs_inf());
    for i in [0, n, n + 1, sys.n() / 2] {
        let (cols, vals) = sys.row(i);
        println!("row {i}: cols {cols:?}");
        let vals: Vec<String> = vals.iter().map(|v| format!("{v:+.4e}")).collect();
        println!(
            "        vals [{}]  rhs {:+.4e}  u {:+.4e}",
            vals.join(", "),
            sys.rhs()[i],
            u[i]
        );
    }
    Ok(())
}

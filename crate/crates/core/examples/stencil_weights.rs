//! Local multiquadric weights on a 2D grid: stencil members, interpolation
//! conditioning and the interior and boundary weight rows.
//!
//! cargo run --example stencil_weights -- [n] [n_s] [eps]

use richards_rbf::pointset::{build_stencils, grid_2d, NodeKind};
use richards_rbf::rbf::{boundary_row, interior_row, BoundaryOperator, KernelParams, LocalSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map(|s| s.parse()).transpose()?.unwrap_or(11);
    let n_s: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let eps: f64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(0.6);
    let nodes = grid_2d(100.0, 100.0, n, n)?;
    let kernel = KernelParams::new(eps)?;
    let stencils = build_stencils(&nodes, n_s)?;

    // one node of each kind
    let picks = [n / 2, n, n * (n / 2) + n / 2, n * n - 1];
    for &i in &picks {
        let st = &stencils[i];
        let cond = LocalSolver::new(st, &nodes, kernel)?.condition();
        let kind = nodes.kind(i);
        let row = match kind {
            NodeKind::Interior => interior_row(st, &nodes, kernel, 1.0, -0.1, 0.05)?,
            NodeKind::NeumannSide => boundary_row(
                st,
                &nodes,
                kernel,
                BoundaryOperator::Neumann {
                    normal: nodes.normal(i),
                },
            )?,
            _ => boundary_row(st, &nodes, kernel, BoundaryOperator::Dirichlet)?,
        };
        println!(
            "node {i} ({}) at {:?}, condition {cond:.3e}",
            kind.label(),
            nodes.position(i)
        );
        for (j, w) in row.indices.iter().zip(&row.weights) {
            println!("  {j:6} {:?} {w:+.6e}", nodes.position(*j));
        }
        // weights applied to a constant: plain MQ does not reproduce it exactly
        println!("  row sum {:+.6e}", row.weights.iter().sum::<f64>());
    }
    Ok(())
}

mod common;

use proptest::prelude::*;
use richards_rbf::constitutive::SoilParams;
use richards_rbf::pointset::{build_stencils, grid_1d, grid_2d, Dim, NodeKind, NodeSet};
use richards_rbf::rbf::{
    boundary_row, interior_row, mq, mq_dx, mq_dz, mq_laplacian, BoundaryOperator, KernelParams, StencilOperators,
};
use richards_rbf::system::{solve, BoundaryValues, CollocationOperator, SparseLu};

use common::{dense_solve, derivative, rel_err};

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

proptest! {
    #[test]
    fn first_derivatives_match_differences(
        x in -5.0f64..5.0, z in -5.0f64..5.0, xk in -5.0f64..5.0, zk in -5.0f64..5.0, eps in 0.1f64..2.0,
    ) {
        prop_assume!((z - zk).abs() > 1e-2 && (x - xk).abs() > 1e-2);
        let fz = derivative(&|t| mq(dist([x, t], [xk, zk]), eps), z, 1e-3);
        prop_assert!(rel_err(mq_dz([x, z], [xk, zk], eps), fz) < 1e-6);
        let fx = derivative(&|t| mq(dist([t, z], [xk, zk]), eps), x, 1e-3);
        prop_assert!(rel_err(mq_dx([x, z], [xk, zk], eps), fx) < 1e-6);
    }

    #[test]
    fn laplacian_matches_differences(
        x in -5.0f64..5.0, z in -5.0f64..5.0, xk in -5.0f64..5.0, zk in -5.0f64..5.0, eps in 0.1f64..2.0,
    ) {
        // differentiate the analytic first derivatives once more
        let dzz = derivative(&|t| mq_dz([x, t], [xk, zk], eps), z, 1e-3);
        let dxx = derivative(&|t| mq_dx([t, z], [xk, zk], eps), x, 1e-3);
        prop_assert!(rel_err(mq_laplacian([x, z], [xk, zk], eps, Dim::Two), dxx + dzz) < 1e-6);
        // in 1D the node sits on the z axis
        let one = derivative(&|t| mq_dz([0.0, t], [0.0, zk], eps), z, 1e-3);
        prop_assert!(rel_err(mq_laplacian([0.0, z], [0.0, zk], eps, Dim::One), one) < 1e-6);
    }

    #[test]
    fn interior_rows_are_exact_on_the_basis(
        a in 0.0f64..1e6, b in -1.0f64..0.0, dt in 0.001f64..1.0, eps in 0.3f64..1.5, two_d in any::<bool>(),
    ) {
        let (nodes, n_s) = if two_d {
            (grid_2d(10.0, 10.0, 6, 6).unwrap(), 5)
        } else {
            (grid_1d(10.0, 11).unwrap(), 3)
        };
        let kernel = KernelParams::new(eps).unwrap();
        let stencils = build_stencils(&nodes, n_s).unwrap();
        let c = if two_d { 2 * 6 + 3 } else { 5 };
        let st = &stencils[c];
        let row = interior_row(st, &nodes, kernel, a, b, dt).unwrap();
        let xs = nodes.position(c);
        for &k in &st.neighbors {
            let xk = nodes.position(k);
            let samples: Vec<f64> = (0..nodes.len()).map(|j| mq(dist(nodes.position(j), xk), eps)).collect();
            let psi = a / dt * mq(dist(xs, xk), eps) - mq_laplacian(xs, xk, eps, nodes.dim()) - b * mq_dz(xs, xk, eps);
            let got = row.apply(&samples);
            prop_assert!((got - psi).abs() <= 1e-9 * psi.abs().max(1.0), "{} vs {}", got, psi);
        }
    }
}

#[test]
fn boundary_rows_on_the_basis() {
    let eps = 0.6;
    let kernel = KernelParams::new(eps).unwrap();
    let nodes = grid_2d(20.0, 20.0, 11, 11).unwrap();
    let stencils = build_stencils(&nodes, 5).unwrap();
    for (i, st) in stencils.iter().enumerate() {
        let kind = nodes.kind(i);
        if kind == NodeKind::Interior {
            continue;
        }
        let op = if kind.is_dirichlet() {
            BoundaryOperator::Dirichlet
        } else {
            BoundaryOperator::Neumann {
                normal: nodes.normal(i),
            }
        };
        let row = boundary_row(st, &nodes, kernel, op).unwrap();
        let xs = nodes.position(i);
        if kind.is_dirichlet() {
            for (j, w) in row.indices.iter().zip(&row.weights) {
                let expect = if *j == i { 1.0 } else { 0.0 };
                assert!((w - expect).abs() <= 1e-12, "node {i}: weight {w} at {j}");
            }
        }
        for &k in &st.neighbors {
            let xk = nodes.position(k);
            let samples: Vec<f64> = (0..nodes.len()).map(|j| mq(dist(nodes.position(j), xk), eps)).collect();
            let expect = match op {
                BoundaryOperator::Dirichlet => mq(dist(xs, xk), eps),
                BoundaryOperator::Neumann { normal } => normal[0] * mq_dx(xs, xk, eps) + normal[1] * mq_dz(xs, xk, eps),
            };
            assert!((row.apply(&samples) - expect).abs() <= 1e-9 * expect.abs().max(1.0));
        }
    }
}

#[test]
fn cached_operators_reproduce_direct_rows() {
    let nodes = grid_2d(10.0, 10.0, 7, 7).unwrap();
    let kernel = KernelParams::new(0.6).unwrap();
    let stencils = build_stencils(&nodes, 5).unwrap();
    let (a, b, dt) = (3.7e4, -0.2, 0.05);
    for (i, st) in stencils
        .iter()
        .enumerate()
        .filter(|(i, _)| nodes.kind(*i) == NodeKind::Interior)
    {
        let direct = interior_row(st, &nodes, kernel, a, b, dt).unwrap();
        let ops = StencilOperators::new(st, &nodes, kernel).unwrap();
        let mut cached = vec![0.0; st.len()];
        ops.interior_into(a / dt, b, &mut cached);
        for (x, y) in direct.weights.iter().zip(&cached) {
            assert!((x - y).abs() <= 1e-9 * (a / dt), "node {i}");
        }
    }
}

fn varied_state(soil: &SoilParams, nodes: &NodeSet) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = nodes
        .coords()
        .iter()
        .map(|c| soil.h_cap() * (0.8 + 0.05 * c[1] + 0.01 * c[0]))
        .collect();
    let u = h.iter().map(|&x| soil.kirchhoff(x)).collect();
    (h, u)
}

#[test]
fn sparse_solution_matches_dense_elimination() {
    let soil = SoilParams::loam();
    for (nodes, n_s) in [(grid_1d(20.0, 21).unwrap(), 3), (grid_2d(20.0, 20.0, 7, 7).unwrap(), 5)] {
        let stencils = build_stencils(&nodes, n_s).unwrap();
        let op = CollocationOperator::new(&nodes, &stencils, KernelParams::new(0.6).unwrap()).unwrap();
        let (h, u) = varied_state(&soil, &nodes);
        let bc = BoundaryValues {
            top: soil.kirchhoff_at_air_entry(),
            bottom: soil.kirchhoff(200.0),
        };
        let sys = op.assemble(&soil, &h, &u, 0.05, bc).unwrap();
        let sparse = solve(&sys).unwrap();
        let dense = dense_solve(&sys.to_dense(), sys.rhs());
        let scale = dense.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in sparse.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
        assert!(sys.residual_inf(&sparse) <= 1e-10 * (1.0 + sys.rhs_inf()));
        // a reused factorization pattern gives the same answer
        let mut lu = SparseLu::new();
        let first = lu.solve(&sys).unwrap();
        assert_eq!(first, lu.solve(&sys).unwrap());
    }
}

#[test]
fn assembled_rows_follow_node_roles() {
    let soil = SoilParams::sandy_clay();
    let nodes = grid_2d(20.0, 20.0, 5, 5).unwrap();
    let stencils = build_stencils(&nodes, 5).unwrap();
    let op = CollocationOperator::new(&nodes, &stencils, KernelParams::new(0.6).unwrap()).unwrap();
    let (h, u) = varied_state(&soil, &nodes);
    let bc = BoundaryValues {
        top: -3.0,
        bottom: -7.0,
    };
    let dt = 0.05;
    let sys = op.assemble(&soil, &h, &u, dt, bc).unwrap();
    for i in 0..nodes.len() {
        let rhs = sys.rhs()[i];
        match nodes.kind(i) {
            NodeKind::DirichletTop => assert_eq!(rhs, -3.0),
            NodeKind::DirichletBottom => assert_eq!(rhs, -7.0),
            NodeKind::NeumannSide => assert_eq!(rhs, 0.0),
            NodeKind::Interior => {
                let a = soil.coefficients(h[i]).a;
                assert!(rel_err(rhs, a / dt * u[i]) < 1e-15 || (a == 0.0 && rhs == 0.0));
            }
        }
        assert_eq!(sys.row(i).0, &stencils[i].neighbors[..]);
    }
}

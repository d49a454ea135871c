//! Multiquadric kernel `Φ(r) = sqrt(1 + (εr)²)`, its derivatives, and the
//! local collocation weight rows.
//!
//! For a stencil with interpolation matrix `Φ[i][j] = Φ(‖x_i − x_j‖)`, an
//! operator `𝓛` evaluated at the centre `x_s` is approximated by the row
//! `w = Φ⁻ᵀ ψ` with `ψ_k = 𝓛Φ_k(x_s)`, so that `𝓛u(x_s) ≈ Σ_k w_k u(x_k)`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Error, Result};
use crate::pointset::{Dim, NodeSet, Stencil};

/// Largest accepted 2-norm condition number of a local matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Shape parameter of the multiquadric kernel [1/cm].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    epsilon: f64,
}

impl KernelParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(
                "eps",
                format!("shape parameter must be positive, got {epsilon}"),
            ));
        }
        Ok(KernelParams { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub fn mq(r: f64, eps: f64) -> f64 {
    (1.0 + (eps * r) * (eps * r)).sqrt()
}

fn distance(x: [f64; 2], xk: [f64; 2]) -> f64 {
    (x[0] - xk[0]).hypot(x[1] - xk[1])
}

/// `∂Φ(‖x − x_k‖)/∂x` with respect to the evaluation point.
pub fn mq_dx(x: [f64; 2], xk: [f64; 2], eps: f64) -> f64 {
    eps * eps * (x[0] - xk[0]) / mq(distance(x, xk), eps)
}

/// `∂Φ(‖x − x_k‖)/∂z` with respect to the evaluation point.
pub fn mq_dz(x: [f64; 2], xk: [f64; 2], eps: f64) -> f64 {
    eps * eps * (x[1] - xk[1]) / mq(distance(x, xk), eps)
}

/// Laplacian of `Φ(‖x − x_k‖)` in one or two dimensions.
pub fn mq_laplacian(x: [f64; 2], xk: [f64; 2], eps: f64, dim: Dim) -> f64 {
    let e2r2 = {
        let er = eps * distance(x, xk);
        er * er
    };
    let denom = (1.0 + e2r2).powf(1.5);
    match dim {
        Dim::One => eps * eps / denom,
        Dim::Two => eps * eps * (2.0 + e2r2) / denom,
    }
}

/// The symmetric matrix `[Φ(‖x_i − x_j‖)]` over a stencil's nodes.
pub fn local_matrix(stencil: &Stencil, nodes: &NodeSet, kernel: KernelParams) -> Mat<f64> {
    let pts: Vec<[f64; 2]> = stencil.neighbors.iter().map(|&i| nodes.position(i)).collect();
    let n = pts.len();
    let eps = kernel.epsilon();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in 0..i {
            let v = mq(distance(pts[i], pts[j]), eps);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Factorized local matrix of one stencil.
pub struct LocalSolver {
    center: usize,
    points: Vec<[f64; 2]>,
    lu: PartialPivLu<f64>,
    condition: f64,
}

impl LocalSolver {
    /// Factorizes the stencil matrix, rejecting condition numbers above
    /// [`MAX_CONDITION`].
    pub fn new(stencil: &Stencil, nodes: &NodeSet, kernel: KernelParams) -> Result<Self> {
        let m = local_matrix(stencil, nodes, kernel);
        let sv = m.singular_values().map_err(|_| Error::IllConditioned {
            center: stencil.center,
            condition: f64::INFINITY,
        })?;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                center: stencil.center,
                condition,
            });
        }
        Ok(LocalSolver {
            center: stencil.center,
            points: stencil.neighbors.iter().map(|&i| nodes.position(i)).collect(),
            lu: m.partial_piv_lu(),
            condition,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves `Φᵀ w = ψ`.
    pub fn weights(&self, psi: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(psi.len(), 1, |i, _| psi[i]);
        let w = self.lu.solve_transpose(&rhs);
        (0..psi.len()).map(|i| w[(i, 0)]).collect()
    }

    /// `ψ_k = f(x_s, x_k)` for every stencil node.
    fn evaluate(&self, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> Vec<f64> {
        let xs = self.points[0];
        self.points.iter().map(|&xk| f(xs, xk)).collect()
    }
}

/// Sparse weight row: global node indices and their coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightRow {
    /// `Σ_k w_k v[indices_k]` for a global vector `v`.
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| w * values[i])
            .sum()
    }
}

/// Boundary operator applied at a boundary node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryOperator {
    /// Point evaluation.
    Dirichlet,
    /// Normal derivative `n·∇` with outward unit normal `[n_x, n_z]`.
    Neumann { normal: [f64; 2] },
}

/// Row of the interior operator `𝓛 = A/dt − ∇² − B ∂/∂z` at the stencil centre.
pub fn interior_row(
    stencil: &Stencil,
    nodes: &NodeSet,
    kernel: KernelParams,
    a: f64,
    b: f64,
    dt: f64,
) -> Result<WeightRow> {
    if !(dt > 0.0) {
        return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
    }
    let solver = LocalSolver::new(stencil, nodes, kernel)?;
    let eps = kernel.epsilon();
    let dim = nodes.dim();
    let psi = solver.evaluate(|xs, xk| {
        (a / dt) * mq(distance(xs, xk), eps) - mq_laplacian(xs, xk, eps, dim) - b * mq_dz(xs, xk, eps)
    });
    Ok(WeightRow {
        indices: stencil.neighbors.clone(),
        weights: solver.weights(&psi),
    })
}

/// Row of a boundary operator at the stencil centre.
pub fn boundary_row(
    stencil: &Stencil,
    nodes: &NodeSet,
    kernel: KernelParams,
    op: BoundaryOperator,
) -> Result<WeightRow> {
    let solver = LocalSolver::new(stencil, nodes, kernel)?;
    let psi = boundary_psi(&solver, kernel.epsilon(), op);
    Ok(WeightRow {
        indices: stencil.neighbors.clone(),
        weights: solver.weights(&psi),
    })
}

fn boundary_psi(solver: &LocalSolver, eps: f64, op: BoundaryOperator) -> Vec<f64> {
    match op {
        BoundaryOperator::Dirichlet => solver.evaluate(|xs, xk| mq(distance(xs, xk), eps)),
        BoundaryOperator::Neumann { normal } => {
            solver.evaluate(|xs, xk| normal[0] * mq_dx(xs, xk, eps) + normal[1] * mq_dz(xs, xk, eps))
        }
    }
}

/// Per-stencil weights of the state-independent operator pieces. The interior
/// row for any `(A, B, dt)` is the combination
/// `(A/dt)·identity − laplacian − B·dz`, which equals [`interior_row`] up to
/// round-off because the weight map `ψ ↦ Φ⁻ᵀψ` is linear.
#[derive(Debug, Clone)]
pub struct StencilOperators {
    pub indices: Vec<usize>,
    pub identity: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub dz: Vec<f64>,
    pub condition: f64,
}

impl StencilOperators {
    pub fn new(stencil: &Stencil, nodes: &NodeSet, kernel: KernelParams) -> Result<Self> {
        let solver = LocalSolver::new(stencil, nodes, kernel)?;
        let eps = kernel.epsilon();
        let dim = nodes.dim();
        let identity = solver.weights(&solver.evaluate(|xs, xk| mq(distance(xs, xk), eps)));
        let laplacian = solver.weights(&solver.evaluate(|xs, xk| mq_laplacian(xs, xk, eps, dim)));
        let dz = solver.weights(&solver.evaluate(|xs, xk| mq_dz(xs, xk, eps)));
        debug_assert_eq!(solver.center, stencil.center);
        Ok(StencilOperators {
            indices: stencil.neighbors.clone(),
            identity,
            laplacian,
            dz,
            condition: solver.condition,
        })
    }

    /// Writes the interior-operator weights for `(A/dt, B)` into `out`.
    pub fn interior_into(&self, a_over_dt: f64, b: f64, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = a_over_dt * self.identity[k] - self.laplacian[k] - b * self.dz[k];
        }
    }
}

/// Boundary weights for one node, computed once per geometry.
pub fn boundary_weights(
    stencil: &Stencil,
    nodes: &NodeSet,
    kernel: KernelParams,
    op: BoundaryOperator,
) -> Result<(Vec<f64>, f64)> {
    let solver = LocalSolver::new(stencil, nodes, kernel)?;
    let psi = boundary_psi(&solver, kernel.epsilon(), op);
    Ok((solver.weights(&psi), solver.condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{grid_1d, grid_2d, NodeKind};

    fn line(points: &[f64]) -> NodeSet {
        let n = points.len();
        NodeSet::from_points(
            Dim::One,
            points.iter().map(|&z| [0.0, z]).collect(),
            vec![NodeKind::Interior; n],
            vec![[0.0; 2]; n],
        )
        .unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(mq(0.0, 0.6), 1.0);
        assert!((mq(1.0, 0.6) - 1.166_190_378_969_060_1).abs() < 1e-15);
        assert_eq!(mq(-1.0, 0.6), mq(1.0, 0.6));
        assert_eq!(mq_dz([0.0, 1.0], [0.0, 1.0], 0.6), 0.0);
        assert!((mq_dz([0.0, 1.0], [0.0, 0.0], 0.6) - 0.308_697_453_256_516).abs() < 1e-15);
        assert_eq!(mq_dz([0.0, 0.0], [0.0, 1.0], 0.6), -mq_dz([0.0, 1.0], [0.0, 0.0], 0.6));
    }

    #[test]
    fn laplacian_at_centre() {
        let x = [0.3, 0.7];
        assert!((mq_laplacian(x, x, 0.6, Dim::Two) - 0.72).abs() < 1e-15);
        assert!((mq_laplacian(x, x, 0.6, Dim::One) - 0.36).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let v = mq_laplacian([0.0, 0.0], [0.0, 0.25 * k as f64], 0.6, Dim::Two);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        assert!(Dim::try_from(3).is_err());
    }

    #[test]
    fn local_matrix_shapes() {
        let nodes = line(&[0.0, 1.0]);
        let one = Stencil {
            center: 0,
            neighbors: vec![0],
        };
        let m = local_matrix(&one, &nodes, KernelParams::new(0.6).unwrap());
        assert_eq!((m.nrows(), m[(0, 0)]), (1, 1.0));
        let two = Stencil {
            center: 0,
            neighbors: vec![0, 1],
        };
        let m = local_matrix(&two, &nodes, KernelParams::new(0.6).unwrap());
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert!((m[(0, 1)] - 1.166_190_378_969_060_1).abs() < 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn rejects_bad_shape_parameter() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(-0.6).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn ill_conditioned_stencil_is_reported() {
        // nearly flat kernel over close points: Φ is numerically rank one
        let nodes = line(&[0.0, 1e-4, 2e-4, 3e-4, 4e-4]);
        let st = Stencil {
            center: 2,
            neighbors: vec![2, 1, 3, 0, 4],
        };
        match LocalSolver::new(&st, &nodes, KernelParams::new(1e-3).unwrap()) {
            Err(Error::IllConditioned { center, condition }) => {
                assert_eq!(center, 2);
                assert!(condition > MAX_CONDITION);
            }
            other => panic!("expected ill-conditioning, got {:?}", other.map(|s| s.condition)),
        }
    }

    #[test]
    fn pure_laplacian_row_is_symmetric() {
        let nodes = line(&[0.0, 0.5, 1.0]);
        let st = Stencil {
            center: 1,
            neighbors: vec![1, 0, 2],
        };
        let row = interior_row(&st, &nodes, KernelParams::new(0.6).unwrap(), 0.0, 0.0, 1.0).unwrap();
        assert!((row.weights[1] - row.weights[2]).abs() < 1e-12 * row.weights[1].abs());
        assert!(interior_row(&st, &nodes, KernelParams::new(0.6).unwrap(), 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn interior_row_matches_dense_inverse() {
        // ψᵀ Φ⁻¹ formed with an explicit inverse from the 3x3 adjugate
        let d = 0.5;
        let eps = 0.6;
        let nodes = line(&[0.0, d, 2.0 * d]);
        let st = Stencil {
            center: 1,
            neighbors: vec![1, 0, 2],
        };
        let row = interior_row(&st, &nodes, KernelParams::new(eps).unwrap(), 1.0, 0.0, 1.0).unwrap();
        let p = [d, 0.0, 2.0 * d];
        let phi = |i: usize, j: usize| mq((p[i] - p[j]).abs(), eps);
        let m: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| phi(i, j)).collect()).collect();
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let cof = |i: usize, j: usize| {
            let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
            let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
            let minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]];
            if (i + j).is_multiple_of(2) {
                minor
            } else {
                -minor
            }
        };
        let inv = |i: usize, j: usize| cof(j, i) / det;
        let psi: Vec<f64> = (0..3)
            .map(|k| {
                let r = (p[0] - p[k]).abs();
                mq(r, eps) - eps * eps / (1.0 + eps * eps * r * r).powf(1.5)
            })
            .collect();
        for j in 0..3 {
            let expected: f64 = (0..3).map(|k| psi[k] * inv(k, j)).sum();
            assert!(
                (row.weights[j] - expected).abs() < 1e-9 * expected.abs().max(1.0),
                "{j}: {} vs {expected}",
                row.weights[j]
            );
        }
    }

    #[test]
    fn dirichlet_row_is_cardinal() {
        let g = grid_2d(1.0, 1.0, 5, 5).unwrap();
        let st = crate::pointset::build_stencils(&g, 5).unwrap();
        let kernel = KernelParams::new(0.6).unwrap();
        for s in &st {
            let row = boundary_row(s, &g, kernel, BoundaryOperator::Dirichlet).unwrap();
            assert!((row.weights[0] - 1.0).abs() < 1e-12);
            assert!(row.weights[1..].iter().all(|w| w.abs() < 1e-12));
        }
    }

    #[test]
    fn neumann_row_on_symmetric_stencil_is_antisymmetric() {
        // centre with two x-neighbours mirrored about the normal line and one
        // inward neighbour: the pair (x, ±dz) must get equal weights, the
        // inward node carries the derivative
        let pts = vec![[0.0, 1.0], [0.0, 0.5], [0.0, 1.5], [0.5, 1.0]];
        let n = pts.len();
        let nodes = NodeSet::from_points(Dim::Two, pts, vec![NodeKind::NeumannSide; n], vec![[-1.0, 0.0]; n]).unwrap();
        let st = Stencil {
            center: 0,
            neighbors: vec![0, 1, 2, 3],
        };
        let row = boundary_row(
            &st,
            &nodes,
            KernelParams::new(0.6).unwrap(),
            BoundaryOperator::Neumann { normal: [-1.0, 0.0] },
        )
        .unwrap();
        assert!((row.weights[1] - row.weights[2]).abs() < 1e-12);
        assert!(row.weights[3] < 0.0);
        // mirrored stencil across x: the inward weight flips sign with the normal
        let flipped = boundary_row(
            &st,
            &nodes,
            KernelParams::new(0.6).unwrap(),
            BoundaryOperator::Neumann { normal: [1.0, 0.0] },
        )
        .unwrap();
        for (a, b) in row.weights.iter().zip(&flipped.weights) {
            assert!((a + b).abs() < 1e-12);
        }

        // stencil straddling the normal direction: x-weights are antisymmetric
        let pts = vec![[0.0, 0.0], [-0.5, 0.0], [0.5, 0.0]];
        let nodes = NodeSet::from_points(Dim::Two, pts, vec![NodeKind::NeumannSide; 3], vec![[-1.0, 0.0]; 3]).unwrap();
        let st = Stencil {
            center: 0,
            neighbors: vec![0, 1, 2],
        };
        let row = boundary_row(
            &st,
            &nodes,
            KernelParams::new(0.6).unwrap(),
            BoundaryOperator::Neumann { normal: [-1.0, 0.0] },
        )
        .unwrap();
        assert!(row.weights[0].abs() < 1e-12);
        assert!((row.weights[1] + row.weights[2]).abs() < 1e-12);
        assert!(row.weights[1] > 0.0);
    }

    #[test]
    fn cached_operators_match_direct_rows() {
        let g = grid_1d(10.0, 21).unwrap();
        let st = crate::pointset::build_stencils(&g, 3).unwrap();
        let kernel = KernelParams::new(0.6).unwrap();
        let (a, b, dt) = (3.7, -0.04, 0.05);
        let ops = StencilOperators::new(&st[7], &g, kernel).unwrap();
        let mut w = vec![0.0; 3];
        ops.interior_into(a / dt, b, &mut w);
        let row = interior_row(&st[7], &g, kernel, a, b, dt).unwrap();
        for (x, y) in w.iter().zip(&row.weights) {
            assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
        }
    }
}

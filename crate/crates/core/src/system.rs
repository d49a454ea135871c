//! Global sparse collocation system for one Picard iterate and its solution.
//!
//! Rows follow node order. Interior rows carry the interior operator weights
//! scattered to the stencil's global indices; boundary rows carry the
//! Dirichlet or Neumann weights. The sparsity pattern depends on the stencils
//! only, so the symbolic factorization is computed once and reused.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use rayon::prelude::*;

use crate::constitutive::SoilParams;
use crate::error::{Error, Result};
use crate::pointset::{NodeKind, NodeSet, Stencil};
use crate::rbf::{boundary_weights, BoundaryOperator, KernelParams, StencilOperators};

/// Relative residual bound accepted from [`SparseLu::solve`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Kirchhoff values imposed on the Dirichlet rows. Neumann rows are no-flux,
/// so their right-hand side is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    pub top: f64,
    pub bottom: f64,
}

/// Square sparse matrix in compressed-row form together with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 || rhs.len() != n {
            return Err(Error::Usage("row pointer or rhs length mismatch".into()));
        }
        if col_idx.len() != values.len() || row_ptr[n] != values.len() {
            return Err(Error::Usage("column index / value length mismatch".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || col_idx.iter().any(|&c| c >= n) {
            return Err(Error::Usage("malformed compressed-row structure".into()));
        }
        for i in 0..n {
            let mut cols = col_idx[row_ptr[i]..row_ptr[i + 1]].to_vec();
            cols.sort_unstable();
            if cols.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Usage(format!("duplicate column in row {i}")));
            }
        }
        Ok(SparseSystem {
            n,
            row_ptr,
            col_idx,
            values,
            rhs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &v)| v * u[c]).sum()
            })
            .collect()
    }

    /// `‖M·u − rhs‖∞`.
    pub fn residual_inf(&self, u: &[f64]) -> f64 {
        self.matvec(u)
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, |m, r| if r.is_nan() || r > m { r } else { m })
    }

    pub fn rhs_inf(&self) -> f64 {
        self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Dense copy, row-major. Meant for small systems and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] += v;
            }
        }
        m
    }

    /// Writes `row col value` triplets (zero-based) followed by `rhs` lines.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# n = {} nnz = {}", self.n, self.nnz())?;
        writeln!(w, "# row col value")?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {c} {v:e}")?;
            }
        }
        writeln!(w, "# rhs")?;
        for (i, v) in self.rhs.iter().enumerate() {
            writeln!(w, "{i} {v:e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum RowOperator {
    Interior(StencilOperators),
    Boundary { kind: NodeKind, weights: Vec<f64> },
}

/// Geometry-dependent part of the collocation system: stencil weights and
/// the sparsity pattern, built once per node set.
#[derive(Debug, Clone)]
pub struct CollocationOperator {
    rows: Vec<RowOperator>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    max_condition: f64,
}

impl CollocationOperator {
    pub fn new(nodes: &NodeSet, stencils: &[Stencil], kernel: KernelParams) -> Result<Self> {
        if stencils.len() != nodes.len() {
            return Err(Error::Usage(format!(
                "{} stencils for {} nodes",
                stencils.len(),
                nodes.len()
            )));
        }
        let built: Vec<(RowOperator, f64)> = stencils
            .par_iter()
            .enumerate()
            .map(|(i, st)| {
                if st.center != i || st.neighbors.first() != Some(&i) {
                    return Err(Error::Usage(format!("stencil {i} is not centred on node {i}")));
                }
                let kind = nodes.kind(i);
                let op = match kind {
                    NodeKind::Interior => {
                        let ops = StencilOperators::new(st, nodes, kernel)?;
                        let c = ops.condition;
                        return Ok((RowOperator::Interior(ops), c));
                    }
                    NodeKind::DirichletTop | NodeKind::DirichletBottom => BoundaryOperator::Dirichlet,
                    NodeKind::NeumannSide => BoundaryOperator::Neumann {
                        normal: nodes.normal(i),
                    },
                };
                let (weights, c) = boundary_weights(st, nodes, kernel, op)?;
                Ok((RowOperator::Boundary { kind, weights }, c))
            })
            .collect::<Result<_>>()?;

        let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for st in stencils {
            col_idx.extend_from_slice(&st.neighbors);
            row_ptr.push(col_idx.len());
        }
        let max_condition = built.iter().map(|b| b.1).fold(0.0, f64::max);
        Ok(CollocationOperator {
            rows: built.into_iter().map(|b| b.0).collect(),
            row_ptr,
            col_idx,
            max_condition,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Largest condition number over all local interpolation matrices.
    pub fn max_condition(&self) -> f64 {
        self.max_condition
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Assembles `M·u = rhs` for the current Picard iterate.
    ///
    /// `state_h` is the latest suction estimate (it fixes `A` and `B`),
    /// `u_prev` the Kirchhoff field at the previous time level.
    pub fn assemble(
        &self,
        soil: &SoilParams,
        state_h: &[f64],
        u_prev: &[f64],
        dt: f64,
        bc: BoundaryValues,
    ) -> Result<SparseSystem> {
        let n = self.n();
        if state_h.len() != n || u_prev.len() != n {
            return Err(Error::Usage(format!(
                "state vectors of length {}/{} for {n} nodes",
                state_h.len(),
                u_prev.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
        }
        let mut values = vec![0.0; self.col_idx.len()];
        let mut rhs = vec![0.0; n];

        // rows are independent; split the value buffer along row_ptr
        let mut slices: Vec<&mut [f64]> = Vec::with_capacity(n);
        let mut rest: &mut [f64] = &mut values;
        for i in 0..n {
            let len = self.row_ptr[i + 1] - self.row_ptr[i];
            let (head, tail) = rest.split_at_mut(len);
            slices.push(head);
            rest = tail;
        }
        slices
            .into_par_iter()
            .zip(rhs.par_iter_mut())
            .enumerate()
            .try_for_each(|(i, (row, r))| -> Result<()> {
                match &self.rows[i] {
                    RowOperator::Interior(ops) => {
                        let h = state_h[i];
                        if !h.is_finite() {
                            return Err(Error::State {
                                node: i,
                                message: format!("suction head {h} is not finite"),
                            });
                        }
                        let c = soil.coefficients(h);
                        if !(c.a.is_finite() && c.b.is_finite()) {
                            return Err(Error::State {
                                node: i,
                                message: format!("coefficients A = {}, B = {} at h = {h}", c.a, c.b),
                            });
                        }
                        let a_over_dt = c.a / dt;
                        ops.interior_into(a_over_dt, c.b, row);
                        *r = a_over_dt * u_prev[i];
                    }
                    RowOperator::Boundary { kind, weights } => {
                        row.copy_from_slice(weights);
                        *r = match kind {
                            NodeKind::DirichletTop => bc.top,
                            NodeKind::DirichletBottom => bc.bottom,
                            _ => 0.0,
                        };
                    }
                }
                if !r.is_finite() {
                    return Err(Error::State {
                        node: i,
                        message: "non-finite right-hand side".into(),
                    });
                }
                Ok(())
            })?;

        Ok(SparseSystem {
            n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
            rhs,
        })
    }
}

/// Convenience wrapper building the operator and assembling in one call.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    nodes: &NodeSet,
    stencils: &[Stencil],
    kernel: KernelParams,
    soil: &SoilParams,
    state_h: &[f64],
    u_prev: &[f64],
    dt: f64,
    bc: BoundaryValues,
) -> Result<SparseSystem> {
    CollocationOperator::new(nodes, stencils, kernel)?.assemble(soil, state_h, u_prev, dt, bc)
}

/// Sparse LU solver that keeps the symbolic factorization of one pattern.
pub struct SparseLu {
    pattern: Option<Pattern>,
}

struct Pattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// CSR position -> CSC position
    to_csc: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

impl Pattern {
    fn new(system: &SparseSystem) -> Result<Self> {
        let n = system.n;
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(system.nnz());
        for i in 0..n {
            for p in system.row_ptr[i]..system.row_ptr[i + 1] {
                entries.push((system.col_idx[p], i, p));
            }
        }
        entries.sort_unstable();
        let mut col_ptr = vec![0usize; n + 1];
        for &(c, _, _) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let mut to_csc = vec![0usize; entries.len()];
        for (q, &(_, _, p)) in entries.iter().enumerate() {
            to_csc[p] = q;
        }
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let symbolic = SymbolicLu::try_new(sym).map_err(|e| Error::Solver {
            message: format!("symbolic factorization failed: {e:?}"),
            residual: f64::NAN,
        })?;
        Ok(Pattern {
            row_ptr: system.row_ptr.clone(),
            col_idx: system.col_idx.clone(),
            col_ptr,
            row_idx,
            to_csc,
            symbolic,
        })
    }

    fn matches(&self, system: &SparseSystem) -> bool {
        self.row_ptr == system.row_ptr && self.col_idx == system.col_idx
    }
}

impl Default for SparseLu {
    fn default() -> Self {
        Self::new()
    }
}

impl SparseLu {
    pub fn new() -> Self {
        SparseLu { pattern: None }
    }

    /// Solves the system, checking `‖M·u − rhs‖∞ ≤ 1e−10·(1 + ‖rhs‖∞)`.
    ///
    /// Rows are equilibrated by their largest magnitude before factorizing;
    /// up to three steps of iterative refinement run when the first solve
    /// misses the residual bound.
    pub fn solve(&mut self, system: &SparseSystem) -> Result<Vec<f64>> {
        if self.pattern.as_ref().is_none_or(|p| !p.matches(system)) {
            self.pattern = Some(Pattern::new(system)?);
        }
        let pattern = self.pattern.as_ref().expect("pattern just built");
        let n = system.n;

        let mut scale = vec![1.0; n];
        for (i, s) in scale.iter_mut().enumerate() {
            let (_, vals) = system.row(i);
            let m = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                *s = 1.0 / m;
            }
        }
        let mut csc_values = vec![0.0; system.nnz()];
        for i in 0..n {
            for p in system.row_ptr[i]..system.row_ptr[i + 1] {
                csc_values[pattern.to_csc[p]] = system.values[p] * scale[i];
            }
        }
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &pattern.col_ptr, None, &pattern.row_idx);
        let mat = SparseColMatRef::new(sym, &csc_values);
        let lu = Lu::try_new_with_symbolic(pattern.symbolic.clone(), mat).map_err(|e| Error::Solver {
            message: format!("numeric factorization failed: {e:?}"),
            residual: f64::NAN,
        })?;

        let solve_scaled = |r: &[f64]| -> Vec<f64> {
            let b = Mat::<f64>::from_fn(n, 1, |i, _| r[i] * scale[i]);
            let x = lu.solve(&b);
            (0..n).map(|i| x[(i, 0)]).collect()
        };

        let bound = RESIDUAL_TOLERANCE * (1.0 + system.rhs_inf());
        let mut u = solve_scaled(&system.rhs);
        let mut residual = system.residual_inf(&u);
        for _ in 0..3 {
            if residual <= bound {
                break;
            }
            let mu = system.matvec(&u);
            let r: Vec<f64> = system.rhs.iter().zip(&mu).map(|(b, a)| b - a).collect();
            let du = solve_scaled(&r);
            for (x, d) in u.iter_mut().zip(&du) {
                *x += d;
            }
            residual = system.residual_inf(&u);
        }
        if !(residual <= bound) || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver {
                message: format!("residual bound {bound:.3e} not met"),
                residual,
            });
        }
        Ok(u)
    }
}

/// One-shot solve without pattern reuse.
pub fn solve(system: &SparseSystem) -> Result<Vec<f64>> {
    SparseLu::new().solve(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{build_stencils, grid_1d};

    fn setup(nz: usize, n_s: usize) -> (NodeSet, Vec<Stencil>, CollocationOperator) {
        let nodes = grid_1d(100.0, nz).unwrap();
        let st = build_stencils(&nodes, n_s).unwrap();
        let op = CollocationOperator::new(&nodes, &st, KernelParams::new(0.6).unwrap()).unwrap();
        (nodes, st, op)
    }

    #[test]
    fn saturated_state_gives_pure_laplacian_rows() {
        let soil = SoilParams::sandy_clay();
        let (nodes, st, op) = setup(11, 3);
        let h = vec![soil.h_cap(); nodes.len()];
        let u = vec![soil.kirchhoff_at_air_entry(); nodes.len()];
        let bc = BoundaryValues {
            top: -1.0,
            bottom: -2.0,
        };
        let sys = op.assemble(&soil, &h, &u, 0.05, bc).unwrap();
        let kernel = KernelParams::new(0.6).unwrap();
        for i in 1..10 {
            let (cols, vals) = sys.row(i);
            assert_eq!(cols.len(), 3);
            let ops = StencilOperators::new(&st[i], &nodes, kernel).unwrap();
            for (v, l) in vals.iter().zip(&ops.laplacian) {
                assert_eq!(*v, -l);
            }
            assert_eq!(sys.rhs()[i], 0.0);
        }
        assert_eq!(sys.rhs()[0], -1.0);
        assert_eq!(sys.rhs()[10], -2.0);
    }

    #[test]
    fn non_finite_state_names_the_node() {
        let soil = SoilParams::sandy_clay();
        let (nodes, _, op) = setup(6, 3);
        let mut h = vec![100.0; nodes.len()];
        h[3] = f64::NAN;
        let u = vec![-1.0; nodes.len()];
        let err = op
            .assemble(&soil, &h, &u, 0.05, BoundaryValues { top: 0.0, bottom: 0.0 })
            .unwrap_err();
        assert!(matches!(err, Error::State { node: 3, .. }), "{err}");
        assert!(op
            .assemble(&soil, &[100.0; 6], &u, 0.0, BoundaryValues { top: 0.0, bottom: 0.0 })
            .is_err());
    }

    #[test]
    fn all_dirichlet_rows_return_rhs() {
        let sys = SparseSystem::new(
            3,
            vec![0, 1, 2, 3],
            vec![0, 1, 2],
            vec![1.0, 1.0, 1.0],
            vec![4.0, -5.0, 6.5],
        )
        .unwrap();
        assert_eq!(solve(&sys).unwrap(), vec![4.0, -5.0, 6.5]);
    }

    #[test]
    fn singular_system_is_an_error() {
        let sys = SparseSystem::new(
            2,
            vec![0, 2, 4],
            vec![0, 1, 0, 1],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 2.0],
        )
        .unwrap();
        let r = solve(&sys);
        assert!(matches!(r, Err(Error::Solver { .. })), "{r:?}");
    }

    #[test]
    fn malformed_structures_are_rejected() {
        assert!(SparseSystem::new(2, vec![0, 1], vec![0], vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(SparseSystem::new(1, vec![0, 2], vec![0, 0], vec![1.0, 1.0], vec![0.0]).is_err());
        assert!(SparseSystem::new(1, vec![0, 1], vec![3], vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn coo_dump_lists_every_entry() {
        let sys = SparseSystem::new(2, vec![0, 2, 3], vec![0, 1, 1], vec![2.0, -1.0, 1.0], vec![1.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        sys.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0 1 -1e0"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }

    #[test]
    fn assembly_is_bit_identical() {
        let soil = SoilParams::loam();
        let (nodes, _, op) = setup(31, 3);
        let h: Vec<f64> = (0..nodes.len()).map(|i| 12.0 + 10.0 * i as f64).collect();
        let u: Vec<f64> = h.iter().map(|&h| soil.kirchhoff(h)).collect();
        let bc = BoundaryValues {
            top: soil.kirchhoff_at_air_entry(),
            bottom: u[30],
        };
        let a = op.assemble(&soil, &h, &u, 0.05, bc).unwrap();
        let b = op.assemble(&soil, &h, &u, 0.05, bc).unwrap();
        assert_eq!(a, b);
        assert!(a.nnz() <= nodes.len() * 3);
    }
}

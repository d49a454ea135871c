//! Collocation nodes on 1D columns and 2D rectangles, boundary tagging, and
//! nearest-neighbour stencils.
//!
//! Positions are stored as `[x, z]` in cm, `z` pointing down from the soil
//! surface. One-dimensional sets keep `x = 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Spatial dimension of a node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            other => Err(Error::config("dimension", format!("unsupported dimension {other}"))),
        }
    }
}

/// Role of a node in the collocation system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    /// Soil surface, `z = 0`.
    DirichletTop,
    /// Bottom of the column, `z = L`.
    DirichletBottom,
    /// Lateral no-flux side.
    NeumannSide,
}

impl NodeKind {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, NodeKind::DirichletTop | NodeKind::DirichletBottom)
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Interior => "interior",
            NodeKind::DirichletTop => "dirichlet_top",
            NodeKind::DirichletBottom => "dirichlet_bottom",
            NodeKind::NeumannSide => "neumann_side",
        }
    }
}

/// Tensor-grid metadata, present when the set came from [`grid_1d`] or [`grid_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub nx: usize,
    pub nz: usize,
    pub width: f64,
    pub depth: f64,
}

/// Immutable collocation point cloud.
#[derive(Debug, Clone)]
pub struct NodeSet {
    dim: Dim,
    coords: Vec<[f64; 2]>,
    kinds: Vec<NodeKind>,
    normals: Vec<[f64; 2]>,
    grid: Option<GridShape>,
}

impl NodeSet {
    /// Builds a set from arbitrary points. `normals` holds outward unit
    /// normals and is only read for [`NodeKind::NeumannSide`] nodes.
    pub fn from_points(dim: Dim, coords: Vec<[f64; 2]>, kinds: Vec<NodeKind>, normals: Vec<[f64; 2]>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::config("nodes", "node set is empty"));
        }
        if coords.len() != kinds.len() || coords.len() != normals.len() {
            return Err(Error::Usage(format!(
                "{} coordinates, {} kinds, {} normals",
                coords.len(),
                kinds.len(),
                normals.len()
            )));
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::config("nodes", "non-finite coordinate"));
        }
        if dim == Dim::One && coords.iter().any(|c| c[0] != 0.0) {
            return Err(Error::config("nodes", "1D nodes must have x = 0"));
        }
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| {
            coords[a][0]
                .total_cmp(&coords[b][0])
                .then(coords[a][1].total_cmp(&coords[b][1]))
        });
        if let Some(w) = order.windows(2).find(|w| coords[w[0]] == coords[w[1]]) {
            return Err(Error::config(
                "nodes",
                format!("nodes {} and {} coincide", w[0].min(w[1]), w[0].max(w[1])),
            ));
        }
        Ok(NodeSet {
            dim,
            coords,
            kinds,
            normals,
            grid: None,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn position(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Outward unit normal of a Neumann node.
    pub fn normal(&self, i: usize) -> [f64; 2] {
        self.normals[i]
    }

    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    /// Number of interior nodes (n_i).
    pub fn interior_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == NodeKind::Interior).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.len() - self.interior_count()
    }
}

fn check_count(key: &str, n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::config(
            key,
            format!("need at least 3 nodes per direction, got {n}"),
        ));
    }
    Ok(())
}

fn check_length(key: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(key, format!("length must be positive, got {v}")));
    }
    Ok(())
}

/// Uniform column `z_j = j·L/(N_z−1)`; top and bottom nodes are Dirichlet.
pub fn grid_1d(depth: f64, nz: usize) -> Result<NodeSet> {
    check_length("depth", depth)?;
    check_count("nz", nz)?;
    let last = (nz - 1) as f64;
    let coords = (0..nz).map(|j| [0.0, depth * j as f64 / last]).collect();
    let kinds = (0..nz)
        .map(|j| match j {
            0 => NodeKind::DirichletTop,
            j if j == nz - 1 => NodeKind::DirichletBottom,
            _ => NodeKind::Interior,
        })
        .collect();
    Ok(NodeSet {
        dim: Dim::One,
        coords,
        kinds,
        normals: vec![[0.0, 0.0]; nz],
        grid: Some(GridShape {
            nx: 1,
            nz,
            width: 0.0,
            depth,
        }),
    })
}

/// Tensor grid on `[0, width] × [0, depth]`, row-major with `x` fastest, so
/// node `(i, j)` has index `j·N_x + i`. Corners belong to the Dirichlet rows.
pub fn grid_2d(width: f64, depth: f64, nx: usize, nz: usize) -> Result<NodeSet> {
    check_length("width", width)?;
    check_length("depth", depth)?;
    check_count("nx", nx)?;
    check_count("nz", nz)?;
    let n = nx * nz;
    let mut coords = Vec::with_capacity(n);
    let mut kinds = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let (lx, lz) = ((nx - 1) as f64, (nz - 1) as f64);
    for j in 0..nz {
        for i in 0..nx {
            coords.push([width * i as f64 / lx, depth * j as f64 / lz]);
            let (kind, normal) = if j == 0 {
                (NodeKind::DirichletTop, [0.0, 0.0])
            } else if j == nz - 1 {
                (NodeKind::DirichletBottom, [0.0, 0.0])
            } else if i == 0 {
                (NodeKind::NeumannSide, [-1.0, 0.0])
            } else if i == nx - 1 {
                (NodeKind::NeumannSide, [1.0, 0.0])
            } else {
                (NodeKind::Interior, [0.0, 0.0])
            };
            kinds.push(kind);
            normals.push(normal);
        }
    }
    Ok(NodeSet {
        dim: Dim::Two,
        coords,
        kinds,
        normals,
        grid: Some(GridShape { nx, nz, width, depth }),
    })
}

/// Local neighbour configuration of one node. `neighbors[0] == center`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    pub center: usize,
    pub neighbors: Vec<usize>,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Squared distances closer than this relative gap count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dz = a[1] - b[1];
    dx * dx + dz * dz
}

/// Orders `(squared distance, index)` candidates nearest first. Runs of
/// squared distances within [`TIE_TOLERANCE`] of the run's first entry are
/// reordered by node index, so grid round-off never decides a tie.
pub(crate) fn rank_candidates(cands: &mut [(f64, usize)]) {
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut start = 0;
    while start < cands.len() {
        let limit = cands[start].0 * (1.0 + TIE_TOLERANCE);
        let mut end = start + 1;
        while end < cands.len() && cands[end].0 <= limit {
            end += 1;
        }
        cands[start..end].sort_by_key(|c| c.1);
        start = end;
    }
}

/// Uniform bucket grid for exact k-nearest queries.
struct BucketGrid {
    origin: [f64; 2],
    cell: f64,
    shape: [usize; 2],
    cells: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(coords: &[[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in coords {
            for d in 0..2 {
                lo[d] = lo[d].min(c[d]);
                hi[d] = hi[d].max(c[d]);
            }
        }
        let ext = [hi[0] - lo[0], hi[1] - lo[1]];
        let per_cell = 2.0;
        let n = coords.len() as f64;
        let cell = match (ext[0] > 0.0, ext[1] > 0.0) {
            (true, true) => (ext[0] * ext[1] * per_cell / n).sqrt(),
            (true, false) => ext[0] * per_cell / n,
            (false, true) => ext[1] * per_cell / n,
            (false, false) => 1.0,
        }
        .max(f64::MIN_POSITIVE);
        let shape = [0, 1].map(|d| ((ext[d] / cell).floor() as usize + 1).min(1 << 12));
        let cell = cell.max(ext[0] / shape[0] as f64).max(ext[1] / shape[1] as f64);
        let mut cells = vec![Vec::new(); shape[0] * shape[1]];
        let mut grid = BucketGrid {
            origin: lo,
            cell,
            shape,
            cells: Vec::new(),
        };
        for (i, c) in coords.iter().enumerate() {
            let [cx, cz] = grid.cell_of(*c);
            cells[cz * shape[0] + cx].push(i);
        }
        grid.cells = cells;
        grid
    }

    fn cell_of(&self, p: [f64; 2]) -> [usize; 2] {
        [0, 1].map(|d| {
            let k = ((p[d] - self.origin[d]) / self.cell).floor();
            (k.max(0.0) as usize).min(self.shape[d] - 1)
        })
    }

    fn k_nearest(&self, coords: &[[f64; 2]], center: usize, k: usize) -> Vec<usize> {
        let p = coords[center];
        let [cx, cz] = self.cell_of(p);
        let mut cands: Vec<(f64, usize)> = Vec::new();
        let max_ring = self.shape[0].max(self.shape[1]);
        for ring in 0..=max_ring {
            let (x0, x1) = (cx as isize - ring as isize, cx as isize + ring as isize);
            let (z0, z1) = (cz as isize - ring as isize, cz as isize + ring as isize);
            for gz in z0..=z1 {
                if gz < 0 || gz as usize >= self.shape[1] {
                    continue;
                }
                for gx in x0..=x1 {
                    if gx < 0 || gx as usize >= self.shape[0] {
                        continue;
                    }
                    let on_ring = gx == x0 || gx == x1 || gz == z0 || gz == z1;
                    if !on_ring {
                        continue;
                    }
                    let bucket = &self.cells[gz as usize * self.shape[0] + gx as usize];
                    cands.extend(bucket.iter().map(|&j| (dist2(p, coords[j]), j)));
                }
            }
            if cands.len() >= k {
                let mut d2: Vec<f64> = cands.iter().map(|c| c.0).collect();
                let (_, kth, _) = d2.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
                // any point outside the visited rings is at least `ring·cell` away
                let reach = ring as f64 * self.cell;
                if reach * reach > *kth * (1.0 + 1e3 * TIE_TOLERANCE) {
                    break;
                }
            }
        }
        rank_candidates(&mut cands);
        cands.truncate(k);
        cands.into_iter().map(|c| c.1).collect()
    }
}

/// One stencil per node holding its `n_s` nearest nodes (centre included and
/// listed first). Equal distances are resolved in favour of the lower index.
pub fn build_stencils(nodes: &NodeSet, n_s: usize) -> Result<Vec<Stencil>> {
    if n_s < 2 {
        return Err(Error::config("n_s", format!("stencil size {n_s} < 2")));
    }
    if n_s > nodes.len() {
        return Err(Error::config(
            "n_s",
            format!("stencil size {n_s} exceeds node count {}", nodes.len()),
        ));
    }
    let grid = BucketGrid::new(&nodes.coords);
    Ok((0..nodes.len())
        .into_par_iter()
        .map(|center| Stencil {
            center,
            neighbors: grid.k_nearest(&nodes.coords, center, n_s),
        })
        .collect())
}

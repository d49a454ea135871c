//! Profile error metrics and total-mass diagnostics.

use crate::error::{Error, Result};
use crate::pointset::NodeSet;

/// Accuracy of a solver profile against a reference profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub rmse: f64,
    pub rel_l1: f64,
    pub n_points: usize,
    /// Whether the reference was interpolated onto the solver nodes.
    pub interpolated: bool,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Usage("empty profiles".into()));
    }
    Ok(())
}

/// `sqrt(mean((a − b)²))`.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// `Σ|a − b_ref| / Σ|b_ref|`.
pub fn rel_l1(a: &[f64], b_ref: &[f64]) -> Result<f64> {
    check_lengths(a, b_ref)?;
    let norm: f64 = b_ref.iter().map(|x| x.abs()).sum();
    if !(norm > 0.0) {
        return Err(Error::Domain("reference profile has zero L1 norm".into()));
    }
    let diff: f64 = a.iter().zip(b_ref).map(|(x, y)| (x - y).abs()).sum();
    Ok(diff / norm)
}

/// Piecewise-linear interpolation of `(z, values)` at `targets`.
/// `z` must be strictly increasing; targets outside `[z₀, z_last]` are an error.
pub fn regrid_linear(z: &[f64], values: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    check_lengths(z, values)?;
    if z.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("sample positions must be strictly increasing".into()));
    }
    let (lo, hi) = (z[0], z[z.len() - 1]);
    targets
        .iter()
        .map(|&t| {
            if !(t >= lo && t <= hi) {
                return Err(Error::Domain(format!("target {t} outside [{lo}, {hi}]")));
            }
            let k = z.partition_point(|&s| s <= t);
            if k == 0 {
                return Ok(values[0]);
            }
            let k = k - 1;
            if z[k] == t || k + 1 == z.len() {
                return Ok(values[k]);
            }
            let w = (t - z[k]) / (z[k + 1] - z[k]);
            Ok(values[k] + w * (values[k + 1] - values[k]))
        })
        .collect()
}

/// Compares `solver` values at depths `z` with a reference profile sampled
/// at `z_ref`, interpolating only when the grids differ.
pub fn compare_profiles(z: &[f64], solver: &[f64], z_ref: &[f64], reference: &[f64]) -> Result<ComparisonReport> {
    check_lengths(z, solver)?;
    let same_grid = z_ref.len() == z.len()
        && z_ref
            .iter()
            .zip(z)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    let (reference, interpolated) = if same_grid {
        (reference.to_vec(), false)
    } else {
        (regrid_linear(z_ref, reference, z)?, true)
    };
    Ok(ComparisonReport {
        rmse: rmse(solver, &reference)?,
        rel_l1: rel_l1(solver, &reference)?,
        n_points: z.len(),
        interpolated,
    })
}

/// Trapezoid rule on strictly increasing samples.
pub fn trapezoid(z: &[f64], values: &[f64]) -> Result<f64> {
    check_lengths(z, values)?;
    Ok(z.windows(2)
        .zip(values.windows(2))
        .map(|(zw, vw)| 0.5 * (zw[1] - zw[0]) * (vw[0] + vw[1]))
        .sum())
}

/// Water content per unit length: `∫θ dz` in 1D, `(1/l)·∬θ dx dz` on a 2D
/// grid of width `l`, both by the trapezoid rule.
pub fn total_mass(theta: &[f64], nodes: &NodeSet) -> Result<f64> {
    let grid = nodes
        .grid()
        .ok_or_else(|| Error::Unsupported("total mass needs a tensor-grid node set".into()))?;
    if theta.len() != nodes.len() {
        return Err(Error::Usage(format!(
            "{} values for {} nodes",
            theta.len(),
            nodes.len()
        )));
    }
    let coords = nodes.coords();
    let z: Vec<f64> = (0..grid.nz).map(|j| coords[j * grid.nx][1]).collect();
    if grid.nx == 1 {
        return trapezoid(&z, theta);
    }
    let x: Vec<f64> = (0..grid.nx).map(|i| coords[i][0]).collect();
    let rows: Vec<f64> = (0..grid.nz)
        .map(|j| trapezoid(&x, &theta[j * grid.nx..(j + 1) * grid.nx]))
        .collect::<Result<_>>()?;
    Ok(trapezoid(&z, &rows)? / grid.width)
}

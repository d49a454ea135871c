//! Scenario orchestration shared by the command-line tool and the examples.

use std::path::Path;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::{regrid_linear, rel_l1, rmse, ComparisonReport};
use crate::oracle_fd::{solve_fd_1d, FdConfig, FdSolution};
use crate::output::{write_mass_series, write_profiles, write_step_log, write_summary, write_text};
use crate::pointset::{grid_1d, grid_2d, Dim, NodeSet};
use crate::rbf::KernelParams;
use crate::system::SparseSystem;
use crate::timestepper::{
    run_transient, Aborted, KirchhoffField, PicardSettings, StepRecord, Trajectory, TransientSolver,
};

pub fn build_nodes(cfg: &ScenarioConfig) -> Result<NodeSet> {
    match cfg.dimension {
        Dim::One => grid_1d(cfg.depth, cfg.nz),
        Dim::Two => grid_2d(cfg.width, cfg.depth, cfg.nx, cfg.nz),
    }
}

pub fn picard_settings(cfg: &ScenarioConfig) -> PicardSettings {
    PicardSettings {
        tol: cfg.tol,
        max_picard: cfg.max_picard,
        max_cutbacks: cfg.max_cutbacks,
    }
}

pub fn build_solver(cfg: &ScenarioConfig) -> Result<TransientSolver> {
    TransientSolver::new(
        cfg.soil,
        build_nodes(cfg)?,
        cfg.n_s,
        KernelParams::new(cfg.eps).map_err(|e| Error::config("eps", e.to_string()))?,
        picard_settings(cfg),
    )
}

/// Nodes and trajectory of a finished meshless run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub nodes: NodeSet,
    pub trajectory: Trajectory,
    /// Largest local interpolation-matrix condition number.
    pub max_condition: f64,
}

/// Runs the meshless solver. Set-up failures come back as an [`Aborted`]
/// with an empty trajectory.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    progress: &mut dyn FnMut(&StepRecord),
) -> std::result::Result<RunOutput, Box<Aborted>> {
    let mut solver = build_solver(cfg).map_err(|source| {
        Box::new(Aborted {
            partial: Trajectory::default(),
            source,
        })
    })?;
    let trajectory = run_transient(&mut solver, cfg.t_end, cfg.dt, &cfg.output_times, progress)?;
    Ok(RunOutput {
        max_condition: solver.operator().max_condition(),
        nodes: solver.nodes().clone(),
        trajectory,
    })
}

pub fn oracle_config(cfg: &ScenarioConfig) -> FdConfig {
    FdConfig {
        soil: cfg.soil,
        depth: cfg.depth,
        nz: cfg.oracle_nz,
        dt: cfg.oracle_dt,
        t_end: cfg.t_end,
        output_times: cfg.output_times.clone(),
        mean: cfg.oracle_mean,
        max_iterations: 500,
    }
}

/// Reference solution of the vertical column described by `cfg`. A 2D
/// scenario maps to its x-invariant column.
pub fn run_oracle(cfg: &ScenarioConfig) -> Result<(NodeSet, FdSolution)> {
    let fd = oracle_config(cfg);
    let nodes = grid_1d(fd.depth, fd.nz)?;
    Ok((nodes, solve_fd_1d(&fd)?))
}

/// Oracle profiles as fields, so they share the profile CSV format.
pub fn oracle_fields(cfg: &ScenarioConfig, sol: &FdSolution) -> Vec<KirchhoffField> {
    let soil = &cfg.soil;
    sol.profiles
        .iter()
        .map(|p| KirchhoffField {
            t: p.t,
            u: p.h.iter().map(|&h| soil.kirchhoff(h)).collect(),
            h: p.h.clone(),
            saturation: p.h.iter().map(|&h| soil.saturation_from_suction(h)).collect(),
            theta: p.theta.clone(),
        })
        .collect()
}

/// Compares `θ` at every solver node with the oracle profile at the node's
/// depth, for every output time the two runs share.
pub fn compare_runs(run: &RunOutput, oracle: &FdSolution) -> Result<Vec<(f64, ComparisonReport)>> {
    let z: Vec<f64> = run.nodes.coords().iter().map(|c| c[1]).collect();
    let same_grid = run.nodes.dim() == Dim::One
        && oracle.z.len() == z.len()
        && oracle
            .z
            .iter()
            .zip(&z)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    let mut rows = Vec::new();
    for field in &run.trajectory.fields {
        let Some(profile) = oracle.at(field.t) else {
            continue;
        };
        let reference = if same_grid {
            profile.theta.clone()
        } else {
            regrid_linear(&oracle.z, &profile.theta, &z)?
        };
        rows.push((
            field.t,
            ComparisonReport {
                rmse: rmse(&field.theta, &reference)?,
                rel_l1: rel_l1(&field.theta, &reference)?,
                n_points: z.len(),
                interpolated: !same_grid,
            },
        ));
    }
    if rows.is_empty() {
        return Err(Error::Usage("no output time shared by solver and oracle".into()));
    }
    Ok(rows)
}

/// First Picard system of the first step.
pub fn first_system(cfg: &ScenarioConfig) -> Result<SparseSystem> {
    let solver = build_solver(cfg)?;
    let field = solver.initial_field()?;
    let dt = if cfg.t_end > 0.0 { cfg.dt.min(cfg.t_end) } else { cfg.dt };
    solver.assemble(&field, dt)
}

/// Profiles, mass series, step log and `run_meta.txt` into `dir`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, nodes: &NodeSet, trajectory: &Trajectory) -> Result<()> {
    write_text(&dir.join("run_meta.txt"), &cfg.to_meta())?;
    if trajectory.fields.is_empty() {
        return Ok(());
    }
    write_profiles(dir, nodes, &trajectory.fields)?;
    write_mass_series(&dir.join("mass.csv"), nodes, &trajectory.fields)?;
    write_step_log(&dir.join("steps.csv"), &trajectory.steps)
}

pub fn write_oracle(dir: &Path, cfg: &ScenarioConfig, nodes: &NodeSet, sol: &FdSolution) -> Result<()> {
    let fields = oracle_fields(cfg, sol);
    write_text(&dir.join("run_meta.txt"), &cfg.to_meta())?;
    write_profiles(dir, nodes, &fields)?;
    write_mass_series(&dir.join("mass.csv"), nodes, &fields)
}

pub fn write_comparison(dir: &Path, rows: &[(f64, ComparisonReport)]) -> Result<()> {
    write_summary(&dir.join("summary.csv"), rows)
}

//! Backward-Euler time stepping with Picard linearization in the Kirchhoff
//! variable.
//!
//! Each Picard iterate freezes `A` and `B` at the previous iterate's suction,
//! assembles the linear collocation system and solves it. The iteration stops
//! once the max-norm change of `u` drops to the tolerance.

use crate::constitutive::SoilParams;
use crate::error::{Error, Result};
use crate::pointset::{build_stencils, NodeKind, NodeSet};
use crate::rbf::KernelParams;
use crate::system::{BoundaryValues, CollocationOperator, SparseLu, SparseSystem};

/// Kirchhoff field and the quantities recovered from it at one time level.
///
/// Recovery runs `u → h → S → θ`, so the derived arrays are consistent with
/// `u` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffField {
    pub t: f64,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub saturation: Vec<f64>,
    pub theta: Vec<f64>,
}

impl KirchhoffField {
    pub fn from_kirchhoff(soil: &SoilParams, t: f64, u: Vec<f64>) -> Result<Self> {
        let mut h = Vec::with_capacity(u.len());
        let mut saturation = Vec::with_capacity(u.len());
        let mut theta = Vec::with_capacity(u.len());
        for (i, &ui) in u.iter().enumerate() {
            let hi = soil.kirchhoff_inverse(ui).map_err(|_| Error::State {
                node: i,
                message: format!("Kirchhoff value {ui:e} is not negative at t = {t}"),
            })?;
            let s = soil.saturation_from_suction(hi);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::State {
                    node: i,
                    message: format!("saturation {s:e} at h = {hi:e}"),
                });
            }
            h.push(hi);
            saturation.push(s);
            theta.push(soil.moisture_content(s)?);
        }
        Ok(KirchhoffField {
            t,
            u,
            h,
            saturation,
            theta,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Iteration history of one Picard solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// `max_i |u_i^{m+1} − u_i^m|` per iteration.
    pub deltas: Vec<f64>,
    pub converged: bool,
    /// Largest `‖M·u − rhs‖∞ / (1 + ‖rhs‖∞)` over the linear solves.
    pub max_residual: f64,
}

/// One accepted time step. With cutbacks enabled, a step that fails to
/// converge is retried as two half steps; `attempts` keeps every Picard
/// solve in order, failed ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub cutbacks: usize,
    pub attempts: Vec<(f64, PicardReport)>,
}

impl StepRecord {
    /// Picard iterations summed over all attempts.
    pub fn total_iterations(&self) -> usize {
        self.attempts.iter().map(|a| a.1.iterations).sum()
    }

    /// Largest iteration count of any single attempt.
    pub fn max_iterations(&self) -> usize {
        self.attempts.iter().map(|a| a.1.iterations).max().unwrap_or(0)
    }

    pub fn max_residual(&self) -> f64 {
        self.attempts.iter().map(|a| a.1.max_residual).fold(0.0, f64::max)
    }

    /// True when the step went through at its nominal size on the first try.
    pub fn nominal(&self) -> bool {
        self.cutbacks == 0 && self.attempts.len() == 1 && self.attempts[0].1.converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_picard: usize,
    /// Nesting depth of step halving after non-convergence. Zero disables it.
    pub max_cutbacks: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            tol: 1e-8,
            max_picard: 50,
            max_cutbacks: 0,
        }
    }
}

impl PicardSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_picard == 0 {
            return Err(Error::config("max_picard", "must be at least 1"));
        }
        Ok(())
    }
}

/// Dirichlet values of the infiltration problem in Kirchhoff form: a
/// saturated top (`h = h_cap`) and the initial state held at the bottom.
pub fn infiltration_boundary(soil: &SoilParams) -> Result<BoundaryValues> {
    let h0 = soil.suction_from_saturation(soil.initial_saturation())?;
    Ok(BoundaryValues {
        top: soil.kirchhoff_at_air_entry(),
        bottom: soil.kirchhoff(h0),
    })
}

/// Uniform initial moisture `θ₀`, with Dirichlet nodes set to their
/// boundary values.
pub fn initial_field(nodes: &NodeSet, soil: &SoilParams) -> Result<KirchhoffField> {
    let s0 = soil.initial_saturation();
    let h0 = soil
        .suction_from_saturation(s0)
        .map_err(|e| Error::config("theta_0", e.to_string()))?;
    let bc = infiltration_boundary(soil)?;
    let u0 = soil.kirchhoff(h0);
    let u = nodes
        .kinds()
        .iter()
        .map(|k| match k {
            NodeKind::DirichletTop => bc.top,
            NodeKind::DirichletBottom => bc.bottom,
            _ => u0,
        })
        .collect();
    KirchhoffField::from_kirchhoff(soil, 0.0, u)
}

/// Geometry-bound solver state: cached stencil weights, boundary data and the
/// symbolic factorization.
pub struct TransientSolver {
    soil: SoilParams,
    nodes: NodeSet,
    operator: CollocationOperator,
    bc: BoundaryValues,
    settings: PicardSettings,
    lu: SparseLu,
}

impl TransientSolver {
    pub fn new(
        soil: SoilParams,
        nodes: NodeSet,
        n_s: usize,
        kernel: KernelParams,
        settings: PicardSettings,
    ) -> Result<Self> {
        let stencils = build_stencils(&nodes, n_s)?;
        let operator = CollocationOperator::new(&nodes, &stencils, kernel)?;
        Self::with_operator(soil, nodes, operator, settings)
    }

    pub fn with_operator(
        soil: SoilParams,
        nodes: NodeSet,
        operator: CollocationOperator,
        settings: PicardSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if operator.n() != nodes.len() {
            return Err(Error::Usage("operator and node set sizes differ".into()));
        }
        let bc = infiltration_boundary(&soil)?;
        Ok(TransientSolver {
            soil,
            nodes,
            operator,
            bc,
            settings,
            lu: SparseLu::new(),
        })
    }

    pub fn soil(&self) -> &SoilParams {
        &self.soil
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn operator(&self) -> &CollocationOperator {
        &self.operator
    }

    pub fn boundary_values(&self) -> BoundaryValues {
        self.bc
    }

    pub fn settings(&self) -> PicardSettings {
        self.settings
    }

    pub fn initial_field(&self) -> Result<KirchhoffField> {
        initial_field(&self.nodes, &self.soil)
    }

    /// The first Picard system of a step from `field` (for inspection).
    pub fn assemble(&self, field: &KirchhoffField, dt: f64) -> Result<SparseSystem> {
        self.operator.assemble(&self.soil, &field.h, &field.u, dt, self.bc)
    }

    /// One backward-Euler step of size `dt` seeded from `field`.
    ///
    /// On exhaustion of `max_picard` the error carries the delta history.
    pub fn picard_step(&mut self, field: &KirchhoffField, dt: f64) -> Result<(KirchhoffField, PicardReport)> {
        let (result, report) = self.picard_attempt(field, dt);
        result.map(|next| (next, report))
    }

    fn picard_attempt(&mut self, field: &KirchhoffField, dt: f64) -> (Result<KirchhoffField>, PicardReport) {
        let mut report = PicardReport {
            iterations: 0,
            deltas: Vec::new(),
            converged: false,
            max_residual: 0.0,
        };
        let t_next = field.t + dt;
        let mut current = field.clone();
        for _ in 0..self.settings.max_picard {
            let system = match self.operator.assemble(&self.soil, &current.h, &field.u, dt, self.bc) {
                Ok(s) => s,
                Err(e) => return (Err(e), report),
            };
            let mut u = match self.lu.solve(&system) {
                Ok(u) => u,
                Err(e) => return (Err(e), report),
            };
            report.max_residual = report
                .max_residual
                .max(system.residual_inf(&u) / (1.0 + system.rhs_inf()));
            for (i, k) in self.nodes.kinds().iter().enumerate() {
                match k {
                    NodeKind::DirichletTop => u[i] = self.bc.top,
                    NodeKind::DirichletBottom => u[i] = self.bc.bottom,
                    _ => {}
                }
            }
            let delta =
                u.iter()
                    .zip(&current.u)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, |m, d| if d.is_nan() || d > m { d } else { m });
            report.iterations += 1;
            report.deltas.push(delta);
            current = match KirchhoffField::from_kirchhoff(&self.soil, t_next, u) {
                Ok(f) => f,
                Err(e) => return (Err(e), report),
            };
            if delta <= self.settings.tol {
                report.converged = true;
                return (Ok(current), report);
            }
        }
        let err = Error::NonConvergence {
            time: t_next,
            deltas: report.deltas.clone(),
        };
        (Err(err), report)
    }

    /// Advances by `dt`, halving the step after non-convergence as long as
    /// `max_cutbacks` allows.
    pub fn advance(&mut self, field: &KirchhoffField, dt: f64, step: usize) -> Result<(KirchhoffField, StepRecord)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
        }
        let mut record = StepRecord {
            step,
            t_start: field.t,
            t_end: field.t + dt,
            cutbacks: 0,
            attempts: Vec::new(),
        };
        let next = self.advance_inner(field, dt, self.settings.max_cutbacks, &mut record)?;
        record.t_end = next.t;
        Ok((next, record))
    }

    fn advance_inner(
        &mut self,
        field: &KirchhoffField,
        dt: f64,
        depth_left: usize,
        record: &mut StepRecord,
    ) -> Result<KirchhoffField> {
        let (result, report) = self.picard_attempt(field, dt);
        record.attempts.push((dt, report));
        match result {
            Err(Error::NonConvergence { .. }) if depth_left > 0 => {
                record.cutbacks += 1;
                let half = 0.5 * dt;
                let mid = self.advance_inner(field, half, depth_left - 1, record)?;
                let mut end = self.advance_inner(&mid, half, depth_left - 1, record)?;
                end.t = field.t + dt;
                Ok(end)
            }
            other => other,
        }
    }
}

/// Step end times: multiples of `dt` merged with the output times, so every
/// output time is hit exactly. Times closer than `1e−9·dt` are merged.
pub fn step_schedule(t_end: f64, dt: f64, output_times: &[f64]) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::config("t_end", format!("must be non-negative, got {t_end}")));
    }
    let merge = 1e-9 * dt;
    let mut times: Vec<f64> = Vec::new();
    let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    for k in 1..=n {
        times.push((k as f64 * dt).min(t_end));
    }
    for &t in output_times {
        if !(0.0..=t_end + merge).contains(&t) {
            return Err(Error::config("output_times", format!("time {t} outside [0, {t_end}]")));
        }
        if t > merge {
            times.push(t.min(t_end));
        }
    }
    times.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last_mut() {
            Some(last) if t - *last <= merge => {
                // keep an exact output time over a grid multiple
                if output_times.contains(&t) {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    Ok(out)
}

/// Fields at the output times plus the record of every step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub fields: Vec<KirchhoffField>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&KirchhoffField> {
        self.fields.last()
    }

    /// Field whose time is within `1e−9` of `t`.
    pub fn at(&self, t: f64) -> Option<&KirchhoffField> {
        self.fields.iter().find(|f| (f.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
    }
}

/// A transient run that stopped early. `partial` holds everything computed
/// before the failure.
#[derive(thiserror::Error)]
#[error("run aborted at step {}: {source}", partial.steps.len() + 1)]
pub struct Aborted {
    pub partial: Trajectory,
    #[source]
    pub source: Error,
}

impl std::fmt::Debug for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Aborted")
            .field("fields", &self.partial.fields.len())
            .field("steps", &self.partial.steps.len())
            .field("source", &self.source)
            .finish()
    }
}

/// Runs from the initial field to `t_end`. The trajectory holds the initial
/// field and one field per output time after zero; `progress` sees every
/// accepted step.
pub fn run_transient(
    solver: &mut TransientSolver,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
    progress: &mut dyn FnMut(&StepRecord),
) -> std::result::Result<Trajectory, Box<Aborted>> {
    let mut trajectory = Trajectory::default();
    let fail = |trajectory: Trajectory, source: Error| {
        Box::new(Aborted {
            partial: trajectory,
            source,
        })
    };
    let schedule = match step_schedule(t_end, dt, output_times) {
        Ok(s) => s,
        Err(e) => return Err(fail(trajectory, e)),
    };
    let mut field = match solver.initial_field() {
        Ok(f) => f,
        Err(e) => return Err(fail(trajectory, e)),
    };
    trajectory.fields.push(field.clone());
    let merge = 1e-9 * dt;
    let wanted = |t: f64| output_times.iter().any(|&o| (o - t).abs() <= merge);
    for (k, &t_next) in schedule.iter().enumerate() {
        let h = t_next - field.t;
        match solver.advance(&field, h, k + 1) {
            Ok((mut next, record)) => {
                next.t = t_next;
                progress(&record);
                trajectory.steps.push(record);
                field = next;
                if wanted(t_next) || (output_times.is_empty() && k + 1 == schedule.len()) {
                    trajectory.fields.push(field.clone());
                }
            }
            Err(e) => return Err(fail(trajectory, e)),
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::grid_1d;

    #[test]
    fn schedule_hits_outputs_and_end() {
        let s = step_schedule(1.0, 0.3, &[0.5, 1.0]).unwrap();
        let expect = [0.3, 0.5, 0.6, 0.9, 1.0];
        assert_eq!(s.len(), expect.len());
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(step_schedule(0.0, 0.05, &[0.0]).unwrap().is_empty());
        assert!(step_schedule(1.0, 0.05, &[2.0]).is_err());
        assert!(step_schedule(1.0, -0.05, &[]).is_err());
        let s = step_schedule(600.0, 0.05, &[600.0]).unwrap();
        assert_eq!(s.len(), 12000);
        assert_eq!(*s.last().unwrap(), 600.0);
    }

    #[test]
    fn initial_field_matches_boundary_data() {
        let soil = SoilParams::sandy_clay();
        let nodes = grid_1d(100.0, 21).unwrap();
        let f = initial_field(&nodes, &soil).unwrap();
        assert_eq!(f.u[0], soil.kirchhoff_at_air_entry());
        assert_eq!(f.saturation[0], 1.0);
        let s0 = soil.initial_saturation();
        for i in 1..21 {
            assert!((f.saturation[i] - s0).abs() < 1e-12);
            assert!((f.theta[i] - soil.theta_0()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_duration_returns_initial_field() {
        let soil = SoilParams::loam();
        let nodes = grid_1d(100.0, 11).unwrap();
        let mut solver = TransientSolver::new(
            soil,
            nodes,
            3,
            KernelParams::new(0.6).unwrap(),
            PicardSettings::default(),
        )
        .unwrap();
        let tr = run_transient(&mut solver, 0.0, 0.05, &[0.0], &mut |_| {}).unwrap();
        assert_eq!(tr.fields.len(), 1);
        assert!(tr.steps.is_empty());
    }

    #[test]
    fn failure_keeps_partial_trajectory() {
        let soil = SoilParams::sandy_clay();
        let nodes = grid_1d(100.0, 41).unwrap();
        let settings = PicardSettings {
            tol: 1e-30,
            max_picard: 2,
            max_cutbacks: 0,
        };
        let mut solver = TransientSolver::new(soil, nodes, 3, KernelParams::new(0.6).unwrap(), settings).unwrap();
        let err = run_transient(&mut solver, 1.0, 0.05, &[1.0], &mut |_| {}).unwrap_err();
        assert!(matches!(err.source, Error::NonConvergence { ref deltas, .. } if deltas.len() == 2));
        assert_eq!(err.partial.fields.len(), 1);
    }
}

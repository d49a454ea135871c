//! Finite-difference reference solver for the 1D infiltration problem.
//!
//! Works directly in `(θ, h)`: mixed-form backward Euler on the solver's
//! node grid with control volumes around interior nodes, and modified Picard
//! iterations (Celia-type linearization of `θ`). It shares only the soil
//! functions with the meshless solver.

use crate::constitutive::SoilParams;
use crate::error::{Error, Result};

/// Conductivity at the face between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceMean {
    #[default]
    Arithmetic,
    Harmonic,
    Geometric,
}

impl InterfaceMean {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            InterfaceMean::Arithmetic => 0.5 * (a + b),
            InterfaceMean::Harmonic => {
                if a + b > 0.0 {
                    2.0 * a * b / (a + b)
                } else {
                    0.0
                }
            }
            InterfaceMean::Geometric => (a * b).sqrt(),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "arithmetic" => Some(InterfaceMean::Arithmetic),
            "harmonic" => Some(InterfaceMean::Harmonic),
            "geometric" => Some(InterfaceMean::Geometric),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InterfaceMean::Arithmetic => "arithmetic",
            InterfaceMean::Harmonic => "harmonic",
            InterfaceMean::Geometric => "geometric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdConfig {
    pub soil: SoilParams,
    pub depth: f64,
    pub nz: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub mean: InterfaceMean,
    pub max_iterations: usize,
}

impl FdConfig {
    /// Reference resolution: 401 nodes and `dt = 0.01`.
    pub fn new(soil: SoilParams, t_end: f64) -> Self {
        FdConfig {
            soil,
            depth: 100.0,
            nz: 401,
            dt: 0.01,
            t_end,
            output_times: vec![t_end],
            mean: InterfaceMean::Arithmetic,
            max_iterations: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nz < 3 {
            return Err(Error::config(
                "oracle_nz",
                format!("need at least 3 nodes, got {}", self.nz),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("oracle_dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(
                "t_end",
                format!("must be non-negative, got {}", self.t_end),
            ));
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(Error::config("depth", format!("must be positive, got {}", self.depth)));
        }
        for &t in &self.output_times {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(Error::config(
                    "output_times",
                    format!("time {t} outside [0, {}]", self.t_end),
                ));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::config("oracle_max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdProfile {
    pub t: f64,
    pub h: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Water budget of the interior control volumes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassBalance {
    pub initial_storage: f64,
    pub final_storage: f64,
    /// Time-integrated net boundary inflow (top minus bottom).
    pub cumulative_inflow: f64,
    /// Largest per-step `|Δstorage − Δt·net inflow|`.
    pub max_step_error: f64,
}

impl MassBalance {
    /// `|storage gain − inflow| / inflow` over the whole run (zero when nothing flowed).
    pub fn relative_error(&self) -> f64 {
        let gain = self.final_storage - self.initial_storage;
        let err = (gain - self.cumulative_inflow).abs();
        if self.cumulative_inflow.abs() > 0.0 {
            err / self.cumulative_inflow.abs()
        } else {
            err
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub z: Vec<f64>,
    pub profiles: Vec<FdProfile>,
    pub mass: MassBalance,
    pub max_iterations: usize,
    pub steps: usize,
}

impl FdSolution {
    pub fn at(&self, t: f64) -> Option<&FdProfile> {
        self.profiles.iter().find(|p| (p.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
    }
}

/// Solves the tridiagonal system with sub-diagonal `a`, diagonal `b`,
/// super-diagonal `c` (`a[0]` and `c[n−1]` unused).
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    if b[0] == 0.0 {
        return None;
    }
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        if den == 0.0 || !den.is_finite() {
            return None;
        }
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Some(x)
}

/// Downward Darcy flux `K·(∂h/∂z + 1)` at every face (`z` down, `h` suction).
fn face_fluxes(soil: &SoilParams, mean: InterfaceMean, h: &[f64], dz: f64, kf: &mut [f64], q: &mut [f64]) {
    for j in 0..h.len() - 1 {
        kf[j] = mean.apply(soil.conductivity(h[j]), soil.conductivity(h[j + 1]));
        q[j] = kf[j] * ((h[j + 1] - h[j]) / dz + 1.0);
    }
}

/// Runs the reference solver. The top node is held saturated (`h = h_cap`),
/// the bottom node at the initial suction.
pub fn solve_fd_1d(cfg: &FdConfig) -> Result<FdSolution> {
    cfg.validate()?;
    let soil = &cfg.soil;
    let n = cfg.nz;
    let dz = cfg.depth / (n - 1) as f64;
    let z: Vec<f64> = (0..n).map(|j| cfg.depth * j as f64 / (n - 1) as f64).collect();
    let h0 = soil
        .suction_from_saturation(soil.initial_saturation())
        .map_err(|e| Error::config("theta_0", e.to_string()))?;
    let mut h = vec![h0; n];
    h[0] = soil.h_cap();

    let theta_of = |h: &[f64]| -> Vec<f64> { h.iter().map(|&x| soil.moisture_from_suction(x)).collect() };
    let storage = |theta: &[f64]| -> f64 { theta[1..n - 1].iter().sum::<f64>() * dz };

    let merge = 1e-9 * cfg.dt;
    let mut schedule: Vec<f64> = Vec::new();
    let steps = (cfg.t_end / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    for k in 1..=steps {
        schedule.push((k as f64 * cfg.dt).min(cfg.t_end));
    }
    schedule.extend(cfg.output_times.iter().copied().filter(|&t| t > merge));
    schedule.sort_by(f64::total_cmp);
    schedule.dedup_by(|b, a| *b - *a <= merge);

    let wanted = |t: f64| cfg.output_times.iter().any(|&o| (o - t).abs() <= merge);
    let mut profiles = Vec::new();
    let mut theta = theta_of(&h);
    if wanted(0.0) {
        profiles.push(FdProfile {
            t: 0.0,
            h: h.clone(),
            theta: theta.clone(),
        });
    }

    let m = n - 2;
    let mut kf = vec![0.0; n - 1];
    let mut q = vec![0.0; n - 1];
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut mass = MassBalance {
        initial_storage: storage(&theta),
        ..MassBalance::default()
    };
    let mut max_iterations = 0;
    let mut t = 0.0;

    for &t_next in &schedule {
        let step = t_next - t;
        let theta_prev = theta.clone();
        let mut hm = h.clone();
        let mut thm = theta.clone();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iterations {
            iterations += 1;
            face_fluxes(soil, cfg.mean, &hm, dz, &mut kf, &mut q);
            // residual R_j = (θ_j − θ_j^n)/Δt + (q_{j+½} − q_{j−½})/Δz; the
            // Picard matrix freezes the face conductivities
            for r in 0..m {
                let j = r + 1;
                let c = soil.moisture_capacity(hm[j]);
                let res = (thm[j] - theta_prev[j]) / step + (q[j] - q[j - 1]) / dz;
                diag[r] = -c / step + (kf[j] + kf[j - 1]) / (dz * dz);
                sub[r] = -kf[j - 1] / (dz * dz);
                sup[r] = -kf[j] / (dz * dz);
                rhs[r] = res;
            }
            let dh = thomas(&sub, &diag, &sup, &rhs).ok_or_else(|| Error::Oracle {
                time: t_next,
                message: "singular tridiagonal system".into(),
            })?;
            let mut max_dtheta: f64 = 0.0;
            let mut max_rel_dh: f64 = 0.0;
            for r in 0..m {
                let j = r + 1;
                let hn = hm[j] + dh[r];
                if !hn.is_finite() {
                    return Err(Error::Oracle {
                        time: t_next,
                        message: format!("non-finite suction at node {j}"),
                    });
                }
                let thn = soil.moisture_from_suction(hn);
                max_dtheta = max_dtheta.max((thn - thm[j]).abs());
                max_rel_dh = max_rel_dh.max((dh[r] / hm[j]).abs());
                hm[j] = hn;
                thm[j] = thn;
            }
            if max_dtheta <= 1e-10 && max_rel_dh <= 1e-6 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Oracle {
                time: t_next,
                message: format!("modified Picard did not converge in {} iterations", cfg.max_iterations),
            });
        }
        max_iterations = max_iterations.max(iterations);

        face_fluxes(soil, cfg.mean, &hm, dz, &mut kf, &mut q);
        let inflow = (q[0] - q[n - 2]) * step;
        let gain = storage(&thm) - storage(&theta_prev);
        mass.cumulative_inflow += inflow;
        mass.max_step_error = mass.max_step_error.max((gain - inflow).abs());

        h = hm;
        theta = thm;
        t = t_next;
        if wanted(t) {
            profiles.push(FdProfile {
                t,
                h: h.clone(),
                theta: theta.clone(),
            });
        }
    }
    mass.final_storage = storage(&theta);
    Ok(FdSolution {
        z,
        profiles,
        mass,
        max_iterations,
        steps: schedule.len(),
    })
}

//! CSV emission. Floats use Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{total_mass, ComparisonReport};
use crate::pointset::{Dim, NodeSet};
use crate::timestepper::{KirchhoffField, StepRecord};

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, w: BufWriter<fs::File>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .sync_all()
        .map_err(|e| Error::io(path, e))
}

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// File name of the profile at time `t`, e.g. `profile_t600.csv`.
pub fn profile_file_name(t: f64) -> String {
    format!("profile_t{}.csv", fmt_num(t))
}

/// Writes one profile: `z,theta,S,h,u` in 1D, `x,z,theta,S,h,u` in 2D,
/// rows in node order.
pub fn write_profile(path: &Path, nodes: &NodeSet, field: &KirchhoffField) -> Result<()> {
    if field.len() != nodes.len() {
        return Err(Error::Usage(format!(
            "{} values for {} nodes",
            field.len(),
            nodes.len()
        )));
    }
    let mut w = create(path)?;
    let two_d = nodes.dim() == Dim::Two;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", if two_d { "x,z,theta,S,h,u" } else { "z,theta,S,h,u" }).map_err(io)?;
    for (i, c) in nodes.coords().iter().enumerate() {
        if two_d {
            write!(w, "{},", fmt_num(c[0])).map_err(io)?;
        }
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(c[1]),
            fmt_num(field.theta[i]),
            fmt_num(field.saturation[i]),
            fmt_num(field.h[i]),
            fmt_num(field.u[i])
        )
        .map_err(io)?;
    }
    finish(path, w)
}

/// One profile per field into `dir`. Returns the paths written.
pub fn write_profiles(dir: &Path, nodes: &NodeSet, fields: &[KirchhoffField]) -> Result<Vec<PathBuf>> {
    if fields.is_empty() {
        return Err(Error::Usage("no fields to write".into()));
    }
    fields
        .iter()
        .map(|f| {
            let path = dir.join(profile_file_name(f.t));
            write_profile(&path, nodes, f)?;
            Ok(path)
        })
        .collect()
}

/// `t,mass_per_unit_length`, one row per field.
pub fn write_mass_series(path: &Path, nodes: &NodeSet, fields: &[KirchhoffField]) -> Result<()> {
    if fields.is_empty() {
        return Err(Error::Usage("no fields to write".into()));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "t,mass_per_unit_length").map_err(io)?;
    for f in fields {
        writeln!(w, "{},{}", fmt_num(f.t), fmt_num(total_mass(&f.theta, nodes)?)).map_err(io)?;
    }
    finish(path, w)
}

/// Per-step diagnostics: `step,t,dt,cutbacks,picard_iterations,max_residual`.
pub fn write_step_log(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "step,t,dt,cutbacks,picard_iterations,max_residual").map_err(io)?;
    for s in steps {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.step,
            fmt_num(s.t_end),
            fmt_num(s.t_end - s.t_start),
            s.cutbacks,
            s.total_iterations(),
            fmt_num(s.max_residual())
        )
        .map_err(io)?;
    }
    finish(path, w)
}

/// `t,rmse,rel_l1,n_points,interpolated`, one row per compared time.
pub fn write_summary(path: &Path, rows: &[(f64, ComparisonReport)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "t,rmse,rel_l1,n_points,interpolated").map_err(io)?;
    for (t, r) in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(*t),
            fmt_num(r.rmse),
            fmt_num(r.rel_l1),
            r.n_points,
            r.interpolated
        )
        .map_err(io)?;
    }
    finish(path, w)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

/// Generic matplotlib script that plots every `profile_t*.csv` and the mass
/// series found next to it.
pub const PLOT_SCRIPT: &str = r#"import csv, glob, os, sys
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(sys.argv[0]))

def read(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for path in sorted(glob.glob(os.path.join(here, "profile_t*.csv"))):
    d = read(path)
    label = os.path.basename(path)[9:-4]
    if "x" in d:
        xs = sorted(set(d["x"]))
        mid = xs[len(xs) // 2]
        pts = [(z, th) for x, z, th in zip(d["x"], d["z"], d["theta"]) if x == mid]
        ax[0].plot([p[1] for p in pts], [p[0] for p in pts], label="t=" + label)
    else:
        ax[0].plot(d["theta"], d["z"], label="t=" + label)
ax[0].invert_yaxis()
ax[0].set_xlabel("theta")
ax[0].set_ylabel("z [cm]")
ax[0].legend()
mass = os.path.join(here, "mass.csv")
if os.path.exists(mass):
    d = read(mass)
    ax[1].plot(d["t"], d["mass_per_unit_length"], marker="o")
    ax[1].set_xlabel("t [min]")
    ax[1].set_ylabel("mass per unit length")
fig.tight_layout()
fig.savefig(os.path.join(here, "plot.png"), dpi=120)
"#;

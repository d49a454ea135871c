//! Meshless solver for vertical infiltration governed by the Richards
//! equation.
//!
//! The suction head is mapped to the Kirchhoff variable
//! `u(h) = ∫_{+∞}^{h} k_r`, which turns the equation into
//! `A(h)·∂u/∂t − ∇²u − B(h)·∂u/∂z = 0`. Time is discretized with backward
//! Euler, the nonlinearity with Picard iterations, and space with localized
//! multiquadric collocation on small node stencils. A finite-difference
//! solver in `(θ, h)` serves as an independent reference.
//!
//! ```no_run
//! use richards_rbf::constitutive::SoilParams;
//! use richards_rbf::pointset::grid_1d;
//! use richards_rbf::rbf::KernelParams;
//! use richards_rbf::timestepper::{run_transient, PicardSettings, TransientSolver};
//!
//! let nodes = grid_1d(100.0, 201)?;
//! let kernel = KernelParams::new(0.6)?;
//! let mut solver =
//!     TransientSolver::new(SoilParams::loam(), nodes, 3, kernel, PicardSettings::default())?;
//! let run = run_transient(&mut solver, 100.0, 0.05, &[100.0], &mut |_| {})?;
//! println!("{:?}", run.last().map(|f| &f.theta));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// negated comparisons throughout are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constitutive;
pub mod driver;
pub mod error;
pub mod metrics;
pub mod oracle_fd;
pub mod output;
pub mod pointset;
pub mod rbf;
pub mod system;
pub mod timestepper;

pub use error::{Error, Result};

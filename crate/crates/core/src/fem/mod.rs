//! Semi-implicit P1 finite elements for
//!
//! ```text
//! beta(t) (1 + u_x) u_t = (u_x + mu u_tx - (f - 1))_x,   x in (0, 1)
//! u(0, t) = 0,   sigma(1, t) = g(t),   u(x, 0) = 0
//! ```
//!
//! The factor `1 + u_x` is frozen at the previous step; elastic and viscous
//! fluxes and the density load are taken at the new time level. Each step is
//! one tridiagonal solve over the free nodes `1..=n`.

mod assemble;
mod compat;
mod mesh;
mod run;
mod tridiag;

use std::fmt;

use thiserror::Error;

use crate::expression::EvalError;

pub use assemble::{assemble_step, step};
pub use compat::{check_compatibility, COMPATIBILITY_TOLERANCE};
pub use mesh::{build_mesh, Mesh};
pub use run::{run, validate_output_times, GradViolation, SimulationResult, StopControls};
pub use tridiag::{solve_tridiagonal, TridiagonalSystem, PIVOT_FLOOR};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("mesh needs at least 2 elements, got {0}")]
    MeshTooCoarse(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular system: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("time step must be finite and > 0, got {0}")]
    BadTimeStep(f64),
    #[error("invalid output time {time}: {reason}")]
    OutputTime { time: f64, reason: String },
}

/// How a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Steady,
    HorizonReached,
    NonBiological,
    NumericalBlowup,
}

impl Status {
    /// Steady and HorizonReached both describe a biological solution.
    pub fn is_biological(self) -> bool {
        matches!(self, Status::Steady | Status::HorizonReached)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Steady | Status::HorizonReached => 0,
            Status::NonBiological => 2,
            Status::NumericalBlowup => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Steady => "Steady",
            Status::HorizonReached => "HorizonReached",
            Status::NonBiological => "NonBiological",
            Status::NumericalBlowup => "NumericalBlowup",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Nodal displacement at one time plus the elementwise deformation gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub grad: Vec<f64>,
}

impl FieldSnapshot {
    pub fn new(t: f64, u: Vec<f64>, mesh: &Mesh) -> FieldSnapshot {
        let grad = deformation_gradient(&u, mesh.h());
        FieldSnapshot { t, u, grad }
    }

    /// Undeformed state `u = 0`.
    pub fn rest(mesh: &Mesh) -> FieldSnapshot {
        FieldSnapshot::new(0.0, vec![0.0; mesh.node_count()], mesh)
    }

    pub fn tip(&self) -> f64 {
        *self.u.last().expect("non-empty field")
    }

    /// Smallest elementwise `1 + u_x` and the element where it occurs.
    pub fn min_gradient(&self) -> (f64, usize) {
        self.grad.iter().enumerate().fold(
            (f64::INFINITY, 0),
            |(m, at), (e, &g)| {
                if g < m {
                    (g, e)
                } else {
                    (m, at)
                }
            },
        )
    }
}

pub(crate) fn deformation_gradient(u: &[f64], h: f64) -> Vec<f64> {
    u.windows(2).map(|w| 1.0 + (w[1] - w[0]) / h).collect()
}

//! Solver and diagnostics for a one-dimensional nonlinear viscoelastic model
//! of capillary growth with friction against the surroundings.
//!
//! * [`expression`]: text coefficient functions `f(x,t)`, `g(t)`, `beta(t)`
//! * [`fem`]: semi-implicit P1 finite elements, time stepping, blow-up detection
//! * [`analysis`]: steady states, decay fits, existence-condition sampling
//! * [`scenarios`]: catalog of named experiments and random families

pub mod analysis;
pub mod expression;
pub mod fem;
pub mod scenarios;

pub use expression::{parse_expr, Expr};
pub use fem::{build_mesh, run, FieldSnapshot, Mesh, SimulationResult, Status, StopControls};
pub use scenarios::{catalog_get, ScenarioSpec};

use crate::expression::Var;
use crate::scenarios::ScenarioSpec;

use super::{FemError, FieldSnapshot, Mesh, TridiagonalSystem};

/// Reusable per-run assembly state. Caches the nodal density when `f` does
/// not depend on `t`.
pub(crate) struct Assembler<'a> {
    scenario: &'a ScenarioSpec,
    mesh: &'a Mesh,
    time_dependent_density: bool,
    density: Vec<f64>,
    density_time: Option<f64>,
}

impl<'a> Assembler<'a> {
    pub(crate) fn new(scenario: &'a ScenarioSpec, mesh: &'a Mesh) -> Assembler<'a> {
        Assembler {
            scenario,
            mesh,
            time_dependent_density: scenario.f.expr.references(Var::T),
            density: Vec::with_capacity(mesh.node_count()),
            density_time: None,
        }
    }

    fn refresh_density(&mut self, t: f64) -> Result<(), FemError> {
        let fresh = match self.density_time {
            None => false,
            Some(prev) => !self.time_dependent_density || prev == t,
        };
        if fresh {
            return Ok(());
        }
        self.density.clear();
        for &x in self.mesh.nodes() {
            self.density.push(self.scenario.f.expr.eval(x, t)?);
        }
        self.density_time = Some(t);
        Ok(())
    }

    pub(crate) fn assemble_into(
        &mut self,
        u_k: &[f64],
        t_next: f64,
        dt: f64,
        sys: &mut TridiagonalSystem,
    ) -> Result<(), FemError> {
        let mesh = self.mesh;
        let n = mesh.n();
        if u_k.len() != mesh.node_count() {
            return Err(FemError::Dimension(format!(
                "field has {} entries, mesh has {} nodes",
                u_k.len(),
                mesh.node_count()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FemError::BadTimeStep(dt));
        }
        self.refresh_density(t_next)?;
        let beta = self.scenario.beta.expr.eval(0.0, t_next)?;
        let traction = self.scenario.g.expr.eval(0.0, t_next)?;
        let h = mesh.h();
        let visc = self.scenario.mu / dt;
        let stiff = (1.0 + visc) / h;
        let visc_stiff = visc / h;

        sys.diag.clear();
        sys.diag.resize(n, 0.0);
        sys.rhs.clear();
        sys.rhs.resize(n, 0.0);
        sys.lower.clear();
        sys.lower.resize(n - 1, 0.0);
        sys.upper.clear();
        sys.upper.resize(n - 1, 0.0);

        for e in 0..n {
            let (ul, ur) = (u_k[e], u_k[e + 1]);
            let grad = 1.0 + (ur - ul) / h;
            // consistent mass (h/6)[2 1; 1 2] weighted by beta (1 + u_x^k) / dt
            let m = beta * grad * h / (6.0 * dt);
            let load = 0.5 * (self.density[e] + self.density[e + 1]) - 1.0;
            let coupling = m - stiff;

            // node e + 1 is free row e
            sys.diag[e] += 2.0 * m + stiff;
            sys.rhs[e] += m * (ul + 2.0 * ur) + visc_stiff * (ur - ul) + load;
            // node e is free row e - 1 unless it is the clamped root
            if e > 0 {
                sys.diag[e - 1] += 2.0 * m + stiff;
                sys.rhs[e - 1] += m * (2.0 * ul + ur) + visc_stiff * (ul - ur) - load;
                sys.upper[e - 1] += coupling;
                sys.lower[e - 1] += coupling;
            }
        }
        sys.rhs[n - 1] += traction;
        Ok(())
    }
}

/// Linear system for the free nodal values of `u` at `t_next`, given the
/// nodal field `u_k` at the previous step.
pub fn assemble_step(
    u_k: &[f64],
    scenario: &ScenarioSpec,
    mesh: &Mesh,
    t_next: f64,
    dt: f64,
) -> Result<TridiagonalSystem, FemError> {
    let mut sys = TridiagonalSystem::zeros(mesh.n());
    Assembler::new(scenario, mesh).assemble_into(u_k, t_next, dt, &mut sys)?;
    Ok(sys)
}

/// Advances `state` by one step of size `dt`.
pub fn step(
    state: &FieldSnapshot,
    scenario: &ScenarioSpec,
    mesh: &Mesh,
    dt: f64,
) -> Result<FieldSnapshot, FemError> {
    let t_next = state.t + dt;
    let sys = assemble_step(&state.u, scenario, mesh, t_next, dt)?;
    let free = sys.solve()?;
    let mut u = Vec::with_capacity(mesh.node_count());
    u.push(0.0);
    u.extend_from_slice(&free);
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(FemError::NonFinite(format!(
            "u at node {i} after step to t={t_next}"
        )));
    }
    Ok(FieldSnapshot::new(t_next, u, mesh))
}

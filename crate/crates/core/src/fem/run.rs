use crate::scenarios::ScenarioSpec;

use super::assemble::Assembler;
use super::{deformation_gradient, FemError, FieldSnapshot, Mesh, Status, TridiagonalSystem};

/// Early-termination thresholds for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopControls {
    /// NonBiological once the smallest `1 + u_x` drops below `-grad_tolerance`.
    /// The default 1e-9 absorbs round-off where `1 + u_x` is exactly zero.
    pub grad_tolerance: f64,
    /// Steady once `max |u^{k+1} - u^k| / dt` stays below this value ...
    pub steady_tolerance: f64,
    /// ... for this many consecutive steps.
    pub steady_window: usize,
    /// NumericalBlowup once any `|u|` exceeds this value.
    pub blowup_threshold: f64,
    /// When false the run continues to the horizon after the steady
    /// criterion is met; the first steady time is still recorded.
    pub stop_on_steady: bool,
}

impl Default for StopControls {
    fn default() -> Self {
        StopControls {
            grad_tolerance: 1e-9,
            steady_tolerance: 1e-6,
            steady_window: 10,
            blowup_threshold: 1e6,
            stop_on_steady: true,
        }
    }
}

/// Location of a sign violation of `1 + u_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradViolation {
    /// Element with the smallest gradient.
    pub element: usize,
    /// Left node of that element.
    pub x: f64,
    pub value: f64,
    /// First (leftmost) element below the tolerance.
    pub first_element: usize,
    pub first_x: f64,
    /// Number of elements below the tolerance.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub snapshots: Vec<FieldSnapshot>,
    pub status: Status,
    pub status_time: f64,
    pub status_detail: String,
    /// First time the steady criterion held, if ever.
    pub steady_time: Option<f64>,
    /// Smallest elementwise gradient seen over every step, and when.
    pub min_gradient: (f64, f64),
    pub violation: Option<GradViolation>,
    pub steps: usize,
}

impl SimulationResult {
    pub fn final_snapshot(&self) -> &FieldSnapshot {
        self.snapshots
            .last()
            .expect("run records at least one snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&FieldSnapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

fn step_index(time: f64, dt: f64) -> Option<usize> {
    if !time.is_finite() || time < 0.0 {
        return None;
    }
    let k = (time / dt).round();
    if (k * dt - time).abs() <= 1e-6 * dt {
        Some(k as usize)
    } else {
        None
    }
}

/// Maps output times to step indices; each must be a multiple of `dt` in
/// `[0, t_end]`. Returns sorted, deduplicated `(step, time)` pairs.
pub fn validate_output_times(
    output_times: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<Vec<(usize, f64)>, FemError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FemError::BadTimeStep(dt));
    }
    let mut out = Vec::with_capacity(output_times.len());
    for &t in output_times {
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
            return Err(FemError::OutputTime {
                time: t,
                reason: format!("outside [0, {t_end}]"),
            });
        }
        let k = step_index(t, dt).ok_or_else(|| FemError::OutputTime {
            time: t,
            reason: format!("not an integer multiple of dt = {dt}"),
        })?;
        out.push((k, t));
    }
    out.sort_by_key(|&(k, _)| k);
    out.dedup_by_key(|&mut (k, _)| k);
    Ok(out)
}

fn find_violation(grad: &[f64], mesh: &Mesh, tolerance: f64) -> Option<GradViolation> {
    let mut count = 0;
    let mut first = None;
    let mut worst = (f64::INFINITY, 0);
    for (e, &g) in grad.iter().enumerate() {
        if g < -tolerance {
            count += 1;
            first.get_or_insert(e);
        }
        if g < worst.0 {
            worst = (g, e);
        }
    }
    let first = first?;
    Some(GradViolation {
        element: worst.1,
        x: mesh.nodes()[worst.1],
        value: worst.0,
        first_element: first,
        first_x: mesh.nodes()[first],
        count,
    })
}

/// Integrates from `u = 0` to `t_end`, recording snapshots at `output_times`.
///
/// Step failures (singular systems, evaluation errors, non-finite values)
/// end the run with [`Status::NumericalBlowup`]; only invalid arguments are
/// returned as errors.
pub fn run(
    scenario: &ScenarioSpec,
    mesh: &Mesh,
    dt: f64,
    t_end: f64,
    output_times: &[f64],
    controls: &StopControls,
) -> Result<SimulationResult, FemError> {
    let outputs = validate_output_times(output_times, dt, t_end)?;
    let total_steps = step_index(t_end, dt).ok_or_else(|| FemError::OutputTime {
        time: t_end,
        reason: format!("horizon is not an integer multiple of dt = {dt}"),
    })?;

    let h = mesh.h();
    let mut assembler = Assembler::new(scenario, mesh);
    let mut sys = TridiagonalSystem::zeros(mesh.n());
    let mut free = Vec::with_capacity(mesh.n());
    let mut scratch = Vec::with_capacity(mesh.n());

    let mut u = vec![0.0; mesh.node_count()];
    let mut next = vec![0.0; mesh.node_count()];
    let mut rec = Recorder {
        snapshots: Vec::with_capacity(outputs.len() + 1),
        last_step: None,
        mesh,
        dt,
        steady_time: None,
        min_gradient: (1.0, 0.0),
    };
    let mut pending = outputs.iter().peekable();
    let mut calm_steps = 0;

    if let Some(&&(0, t0)) = pending.peek() {
        rec.record(0, t0, u.clone(), deformation_gradient(&u, h));
        pending.next();
    }

    for k in 1..=total_steps {
        let t_next = k as f64 * dt;

        let advanced = assembler
            .assemble_into(&u, t_next, dt, &mut sys)
            .and_then(|_| sys.solve_into(&mut free, &mut scratch));
        if let Err(err) = advanced {
            let detail = format!("step to t={t_next} failed: {err}");
            return Ok(rec.finish(Status::NumericalBlowup, k - 1, &u, detail, None));
        }
        next[0] = 0.0;
        next[1..].copy_from_slice(&free);

        if let Some(i) = next
            .iter()
            .position(|v| !v.is_finite() || v.abs() > controls.blowup_threshold)
        {
            let detail = format!(
                "|u| = {} exceeds {} at x={}",
                next[i].abs(),
                controls.blowup_threshold,
                mesh.nodes()[i]
            );
            return Ok(rec.finish(Status::NumericalBlowup, k, &next, detail, None));
        }

        let grad = deformation_gradient(&next, h);
        let (g_min, e_min) =
            grad.iter().enumerate().fold(
                (f64::INFINITY, 0),
                |acc, (e, &g)| if g < acc.0 { (g, e) } else { acc },
            );
        if g_min < rec.min_gradient.0 {
            rec.min_gradient = (g_min, t_next);
        }

        let velocity = next
            .iter()
            .zip(&u)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
            / dt;
        std::mem::swap(&mut u, &mut next);

        if let Some(&&(k_out, t_out)) = pending.peek() {
            if k_out == k {
                rec.record(k, t_out, u.clone(), grad.clone());
                pending.next();
            }
        }

        if g_min < -controls.grad_tolerance {
            let violation = find_violation(&grad, mesh, controls.grad_tolerance);
            let detail = format!(
                "1+u_x = {g_min} at element {e_min} (x={}); {} element(s) below -{:?}, first at x={}",
                mesh.nodes()[e_min],
                violation.as_ref().map_or(0, |v| v.count),
                controls.grad_tolerance,
                violation.as_ref().map_or(0.0, |v| v.first_x),
            );
            return Ok(rec.finish(Status::NonBiological, k, &u, detail, violation));
        }

        if velocity < controls.steady_tolerance {
            calm_steps += 1;
        } else {
            calm_steps = 0;
        }
        if calm_steps >= controls.steady_window && rec.steady_time.is_none() {
            rec.steady_time = Some(t_next);
            if controls.stop_on_steady {
                let detail = format!(
                    "max |du/dt| < {} for {} consecutive steps",
                    controls.steady_tolerance, controls.steady_window
                );
                return Ok(rec.finish(Status::Steady, k, &u, detail, None));
            }
        }
    }

    let detail = format!("reached t_end = {t_end}");
    Ok(rec.finish(Status::HorizonReached, total_steps, &u, detail, None))
}

struct Recorder<'a> {
    snapshots: Vec<FieldSnapshot>,
    last_step: Option<usize>,
    mesh: &'a Mesh,
    dt: f64,
    steady_time: Option<f64>,
    min_gradient: (f64, f64),
}

impl Recorder<'_> {
    fn record(&mut self, k: usize, t: f64, u: Vec<f64>, grad: Vec<f64>) {
        self.snapshots.push(FieldSnapshot { t, u, grad });
        self.last_step = Some(k);
    }

    /// Closes the run at step `k`; the terminal state becomes the final
    /// snapshot unless it was already recorded as an output time.
    fn finish(
        mut self,
        status: Status,
        k: usize,
        field: &[f64],
        detail: String,
        violation: Option<GradViolation>,
    ) -> SimulationResult {
        if self.last_step != Some(k) {
            let t = k as f64 * self.dt;
            self.snapshots
                .push(FieldSnapshot::new(t, field.to_vec(), self.mesh));
        }
        let status_time = self.snapshots.last().map_or(0.0, |s| s.t);
        SimulationResult {
            snapshots: self.snapshots,
            status,
            status_time,
            status_detail: detail,
            steady_time: self.steady_time,
            min_gradient: self.min_gradient,
            violation,
            steps: k,
        }
    }
}

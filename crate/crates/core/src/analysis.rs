//! Analytic steady states, error norms, decay-rate fits, sampled checks of the
//! global-existence hypotheses, and the dimensional parameter groups.

use std::fmt;

use thiserror::Error;

use crate::expression::{EvalError, Expr};
use crate::fem::{FieldSnapshot, Mesh};
use crate::scenarios::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("decay fit needs at least {needed} samples above the floor, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("{0} must be finite and > 0, got {1}")]
    NonPositive(&'static str, f64),
    #[error("beta and mu cannot both vanish")]
    NoTimescale,
    #[error("mode number must be >= 1")]
    BadMode,
}

/// `u_s(x) = F(x) + G(x)` with `F(x) = ∫_0^x (f(s) - 1) ds` and `G(x) = g x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProfile {
    pub f_part: Vec<f64>,
    pub g_part: Vec<f64>,
    pub u: Vec<f64>,
}

/// Subintervals per mesh element used by the Simpson quadrature.
const STEADY_REFINEMENT: usize = 4;

pub fn steady_state(
    f: &Expr,
    g_bar: f64,
    t_eval: f64,
    mesh: &Mesh,
) -> Result<SteadyProfile, AnalysisError> {
    let nodes = mesh.nodes();
    let mut f_part = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    f_part.push(0.0);
    let integrand = |x: f64| f.eval(x, t_eval).map(|v| v - 1.0);
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let sub = (b - a) / STEADY_REFINEMENT as f64;
        let mut s = integrand(a)? + integrand(b)?;
        for j in 1..STEADY_REFINEMENT {
            let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
            s += weight * integrand(a + j as f64 * sub)?;
        }
        acc += s * sub / 3.0;
        f_part.push(acc);
    }
    let g_part: Vec<f64> = nodes.iter().map(|&x| g_bar * x).collect();
    let u = f_part.iter().zip(&g_part).map(|(a, b)| a + b).collect();
    Ok(SteadyProfile { f_part, g_part, u })
}

/// Max-norm distance between two nodal fields.
pub fn sup_error(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())))
}

/// Errors at or below this value are treated as round-off and skipped.
pub const ERROR_FLOOR: f64 = 1e-13;
const MIN_FIT_SAMPLES: usize = 5;

/// Which part of an error history enters a decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayWindow {
    /// Every sample above the floor.
    #[default]
    Full,
    /// Drop the initial transient: start at the first sample whose error is
    /// at most half of the first sample's.
    AfterHalving,
}

/// Least-squares fit of `error ≈ c exp(-alpha t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub c: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

pub fn fit_decay_rate(errors: &[(f64, f64)]) -> Result<DecayFit, AnalysisError> {
    fit_decay_rate_windowed(errors, DecayWindow::Full)
}

pub fn fit_decay_rate_windowed(
    errors: &[(f64, f64)],
    window: DecayWindow,
) -> Result<DecayFit, AnalysisError> {
    let start = match window {
        DecayWindow::Full => 0,
        DecayWindow::AfterHalving => {
            let first = errors.first().map_or(0.0, |p| p.1);
            errors
                .iter()
                .position(|&(_, e)| e <= 0.5 * first)
                .unwrap_or(errors.len())
        }
    };
    let samples: Vec<(f64, f64)> = errors[start..]
        .iter()
        .filter(|&&(t, e)| t.is_finite() && e.is_finite() && e > ERROR_FLOOR)
        .map(|&(t, e)| (t, e.ln()))
        .collect();
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &samples {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    // a constant series is fitted exactly by a flat line
    let r_squared = if syy > 0.0 {
        sty * sty / (stt * syy)
    } else {
        1.0
    };
    Ok(DecayFit {
        alpha: -slope,
        c: intercept.exp(),
        r_squared,
        window: (samples[0].0, samples[samples.len() - 1].0),
    })
}

/// Relaxation time `beta / k^2 + mu` of Fourier mode `k` for
/// `beta u_t = u_xx + mu u_txx`.
pub fn mode_timescale(beta: f64, mu: f64, k: u32) -> Result<f64, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::BadMode);
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(AnalysisError::NonPositive("beta", beta));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(AnalysisError::NonPositive("mu", mu));
    }
    if beta == 0.0 && mu == 0.0 {
        return Err(AnalysisError::NoTimescale);
    }
    let k2 = f64::from(k) * f64::from(k);
    Ok(beta / k2 + mu)
}

/// Dimensional inputs, in μm / s / pN units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Characteristic length (μm).
    pub length: f64,
    /// Characteristic time (s).
    pub time: f64,
    /// Young's modulus (pN/μm²).
    pub modulus: f64,
    /// Dynamic viscosity (pN·s/μm²).
    pub viscosity: f64,
    /// Friction coefficient (pN·s/μm³).
    pub friction: f64,
    /// Capillary radius (μm).
    pub radius: f64,
    /// Tip protrusion stress (pN/μm²).
    pub protrusion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessGroups {
    pub beta: f64,
    pub mu: f64,
    pub g: f64,
}

pub fn nondimensionalize(p: &PhysicalParams) -> Result<DimensionlessGroups, AnalysisError> {
    for (name, v) in [
        ("length", p.length),
        ("time", p.time),
        ("modulus", p.modulus),
        ("viscosity", p.viscosity),
        ("friction", p.friction),
        ("radius", p.radius),
        ("protrusion", p.protrusion),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(AnalysisError::NonPositive(name, v));
        }
    }
    Ok(DimensionlessGroups {
        beta: 2.0 * p.length * p.length * p.friction / (p.radius * p.modulus * p.time),
        mu: p.viscosity / (p.modulus * p.time),
        g: p.protrusion / p.modulus,
    })
}

/// Smallest elementwise deformation gradient and its element index.
pub fn min_gradient(snap: &FieldSnapshot) -> (f64, usize) {
    snap.min_gradient()
}

const THEOREM_X_SAMPLES: usize = 201;
const THEOREM_T_SAMPLES: usize = 101;
const CURVATURE_STEP: f64 = 1e-4;
const SAMPLED_TOLERANCE: f64 = 1e-6;
const STATIONARITY_TOLERANCE: f64 = 1e-9;

/// Sampled evidence for the hypotheses of the global-existence result.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    /// `f_x(0,t) = 0` and `f_xx <= 0` on every sample.
    pub branch_a: bool,
    /// `f` time-independent with `max f - min f < 1`.
    pub branch_b: bool,
    /// `f, g >= 0` and `min f(1,t) + g(t) > 0`.
    pub common: bool,
    pub max_root_slope: f64,
    pub max_curvature: f64,
    pub max_time_variation: f64,
    pub oscillation: f64,
    pub min_tip_load: f64,
    pub min_f: f64,
    pub min_g: f64,
    pub evaluation_errors: Vec<String>,
}

impl TheoremReport {
    /// Hypotheses met for at least one branch.
    pub fn satisfied(&self) -> bool {
        self.common && (self.branch_a || self.branch_b)
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yes = |b: bool| if b { "satisfied" } else { "violated" };
        writeln!(f, "existence hypotheses (sampled evidence, not proof):")?;
        writeln!(
            f,
            "  common: {} (min f = {}, min g = {}, min f(1,t)+g(t) = {})",
            yes(self.common),
            self.min_f,
            self.min_g,
            self.min_tip_load
        )?;
        writeln!(
            f,
            "  branch a: {} (max |f_x(0,t)| = {}, max f_xx = {})",
            yes(self.branch_a),
            self.max_root_slope,
            self.max_curvature
        )?;
        write!(
            f,
            "  branch b: {} (max |f(x,t)-f(x,0)| = {}, max f - min f = {})",
            yes(self.branch_b),
            self.max_time_variation,
            self.oscillation
        )?;
        for e in &self.evaluation_errors {
            write!(f, "\n  evaluation error: {e}")?;
        }
        Ok(())
    }
}

pub fn check_theorem_conditions(scenario: &ScenarioSpec) -> TheoremReport {
    let f = &scenario.f.expr;
    let g = &scenario.g.expr;
    let mut errors = Vec::new();
    let mut max_root_slope: f64 = 0.0;
    let mut max_curvature = f64::NEG_INFINITY;
    let mut max_time_variation: f64 = 0.0;
    let mut min_tip_load = f64::INFINITY;
    let mut min_f = f64::INFINITY;
    let mut min_g = f64::INFINITY;
    let (mut f0_max, mut f0_min) = (f64::NEG_INFINITY, f64::INFINITY);

    let xs: Vec<f64> = (0..THEOREM_X_SAMPLES)
        .map(|i| i as f64 / (THEOREM_X_SAMPLES - 1) as f64)
        .collect();
    let initial: Vec<Option<f64>> = xs.iter().map(|&x| f.eval(x, 0.0).ok()).collect();
    let h = CURVATURE_STEP;

    for j in 0..THEOREM_T_SAMPLES {
        let t = scenario.t_end * j as f64 / (THEOREM_T_SAMPLES - 1) as f64;
        let mut note = |e: EvalError| {
            if errors.len() < 5 {
                errors.push(e.to_string());
            }
        };
        match f.partial_x(0.0, t, crate::expression::DEFAULT_FD_STEP) {
            Ok(s) => max_root_slope = max_root_slope.max(s.abs()),
            Err(e) => note(e),
        }
        match g.eval(0.0, t) {
            Ok(gv) => {
                min_g = min_g.min(gv);
                match f.eval(1.0, t) {
                    Ok(fv) => min_tip_load = min_tip_load.min(fv + gv),
                    Err(e) => note(e),
                }
            }
            Err(e) => note(e),
        }
        for (i, &x) in xs.iter().enumerate() {
            let centre = match f.eval(x, t) {
                Ok(v) => v,
                Err(e) => {
                    note(e);
                    continue;
                }
            };
            min_f = min_f.min(centre);
            if j == 0 {
                f0_max = f0_max.max(centre);
                f0_min = f0_min.min(centre);
            }
            if let Some(f0) = initial[i] {
                max_time_variation = max_time_variation.max((centre - f0).abs());
            }
            match (f.eval(x + h, t), f.eval(x - h, t)) {
                (Ok(right), Ok(left)) => {
                    max_curvature = max_curvature.max((right - 2.0 * centre + left) / (h * h))
                }
                (Err(e), _) | (_, Err(e)) => note(e),
            }
        }
    }

    let clean = errors.is_empty();
    let oscillation = f0_max - f0_min;
    TheoremReport {
        branch_a: clean
            && max_root_slope <= SAMPLED_TOLERANCE
            && max_curvature <= SAMPLED_TOLERANCE,
        branch_b: clean && max_time_variation <= STATIONARITY_TOLERANCE && oscillation < 1.0,
        common: clean && min_f >= 0.0 && min_g >= 0.0 && min_tip_load > 0.0,
        max_root_slope,
        max_curvature,
        max_time_variation,
        oscillation,
        min_tip_load,
        min_f,
        min_g,
        evaluation_errors: errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;
    use crate::scenarios::catalog_get;

    fn expr(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn steady_state_cubic() {
        let mesh = build_mesh(100).unwrap();
        let p = steady_state(&expr("-10*x^2+10+1e-6"), 0.0, 0.0, &mesh).unwrap();
        for (&x, &u) in mesh.nodes().iter().zip(&p.u) {
            let exact = -10.0 / 3.0 * x * x * x + (9.0 + 1e-6) * x;
            assert!((u - exact).abs() < 1e-12);
        }
        assert!((p.u[100] - 5.666668).abs() < 1e-6);
    }

    #[test]
    fn steady_state_oscillatory() {
        let mesh = build_mesh(1000).unwrap();
        let p = steady_state(&expr("0.4999*cos(100*x)+0.5"), 0.0, 0.0, &mesh).unwrap();
        for (&x, &u) in mesh.nodes().iter().zip(&p.u) {
            let exact = 0.004999 * (100.0 * x).sin() - 0.5 * x;
            assert!((u - exact).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn steady_state_pure_traction() {
        let mesh = build_mesh(10).unwrap();
        let p = steady_state(&expr("1"), 4.7, 0.0, &mesh).unwrap();
        assert!(p.f_part.iter().all(|&v| v == 0.0));
        assert!((p.u[10] - 4.7).abs() < 1e-15);
        let zero = steady_state(&expr("1"), 0.0, 3.0, &mesh).unwrap();
        assert!(zero.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sup_error_basics() {
        assert_eq!(sup_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(sup_error(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(
            sup_error(&[0.0], &[0.0, 1.0]),
            Err(AnalysisError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn decay_fit_synthetic() {
        let series: Vec<(f64, f64)> = (1..=5)
            .map(|t| (t as f64, (-2.0 * t as f64).exp()))
            .collect();
        let fit = fit_decay_rate(&series).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-9);
        assert!(fit.r_squared > 0.999999);
        assert!((fit.c - 1.0).abs() < 1e-9);

        let flat: Vec<(f64, f64)> = (1..=5).map(|t| (t as f64, 0.3)).collect();
        let fit = fit_decay_rate(&flat).unwrap();
        assert!(fit.alpha.abs() < 1e-9);
    }

    #[test]
    fn decay_fit_needs_samples() {
        let series = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 1e-14), (3.0, 0.0), (4.0, 0.1)];
        assert_eq!(
            fit_decay_rate(&series),
            Err(AnalysisError::InsufficientSamples { needed: 5, got: 3 })
        );
    }

    #[test]
    fn decay_window_skips_transient() {
        // slow plateau for t < 2, then exp(-3 t)
        let series: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let t = i as f64 * 0.5;
                let e = if t < 2.0 {
                    1.0
                } else {
                    (-3.0 * (t - 2.0)).exp() * 0.4
                };
                (t, e)
            })
            .collect();
        let fit = fit_decay_rate_windowed(&series, DecayWindow::AfterHalving).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-9);
        assert_eq!(fit.window.0, 2.0);
    }

    #[test]
    fn mode_timescales() {
        assert_eq!(mode_timescale(1.0, 0.0, 1).unwrap(), 1.0);
        assert!((mode_timescale(0.01, 1e-4, 1).unwrap() - 0.0101).abs() < 1e-15);
        assert_eq!(mode_timescale(4.0, 0.5, 2).unwrap(), 1.5);
        assert_eq!(mode_timescale(0.0, 0.0, 1), Err(AnalysisError::NoTimescale));
        assert_eq!(mode_timescale(1.0, 0.0, 0), Err(AnalysisError::BadMode));
    }

    fn reference_params() -> PhysicalParams {
        PhysicalParams {
            length: 100.0,
            time: 86_400.0,
            modulus: 3.5e3,
            viscosity: 1e4,
            friction: 1e5,
            radius: 10.0,
            protrusion: 1e4,
        }
    }

    #[test]
    fn nondimensional_groups() {
        let d = nondimensionalize(&reference_params()).unwrap();
        assert!((d.mu - 1e4 / (3.5e3 * 86_400.0)).abs() < 1e-18);
        assert!(d.mu > 1e-5 && d.mu < 1e-4);
        assert!((d.g - 2.857142857142857).abs() < 1e-12);

        let mut doubled = reference_params();
        doubled.length *= 2.0;
        let d2 = nondimensionalize(&doubled).unwrap();
        assert!((d2.beta / d.beta - 4.0).abs() < 1e-12);
        assert_eq!(d2.mu, d.mu);
        assert_eq!(d2.g, d.g);

        let mut bad = reference_params();
        bad.radius = 0.0;
        assert!(matches!(
            nondimensionalize(&bad),
            Err(AnalysisError::NonPositive("radius", _))
        ));
    }

    #[test]
    fn theorem_report_catalog() {
        let a1 = check_theorem_conditions(&catalog_get("A1").unwrap());
        assert!(a1.branch_a && a1.common, "{a1}");
        let b1 = check_theorem_conditions(&catalog_get("B1").unwrap());
        assert!(b1.branch_b && b1.common, "{b1}");
        assert!(b1.oscillation < 1.0);
        let b2 = check_theorem_conditions(&catalog_get("B2").unwrap());
        assert!(!b2.branch_b);
        assert!((b2.oscillation - 4.0).abs() < 1e-2);
        let a2 = check_theorem_conditions(&catalog_get("A2").unwrap());
        assert!(!a2.branch_a && !a2.branch_b);
    }

    #[test]
    fn min_gradient_of_rest_state() {
        let mesh = build_mesh(5).unwrap();
        let (v, _) = min_gradient(&FieldSnapshot::rest(&mesh));
        assert_eq!(v, 1.0);
    }
}

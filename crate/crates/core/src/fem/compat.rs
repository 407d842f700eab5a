use crate::expression::DEFAULT_FD_STEP;
use crate::scenarios::ScenarioSpec;

/// Largest `|f_x(0, 0)|` accepted without a warning.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;

/// Warnings (never errors) about the initial/boundary compatibility condition
/// `f_x(0, 0) = 0` and the sign hypotheses `f >= 0`, `g >= 0`.
pub fn check_compatibility(scenario: &ScenarioSpec) -> Vec<String> {
    let mut warnings = Vec::new();
    match scenario.f.expr.partial_x(0.0, 0.0, DEFAULT_FD_STEP) {
        Ok(slope) if slope.abs() > COMPATIBILITY_TOLERANCE => warnings.push(format!(
            "compatibility: |f_x(0,0)| = {} > {COMPATIBILITY_TOLERANCE}",
            slope.abs()
        )),
        Ok(_) => {}
        Err(err) => warnings.push(format!("compatibility: cannot evaluate f_x(0,0): {err}")),
    }

    let t_max = scenario.t_end.min(1.0);
    let mut f_min: Option<(f64, f64, f64)> = None;
    let mut g_min: Option<(f64, f64)> = None;
    for j in 0..=10 {
        let t = t_max * j as f64 / 10.0;
        match scenario.g.expr.eval(0.0, t) {
            Ok(g) if g < 0.0 && g_min.is_none_or(|(m, _)| g < m) => g_min = Some((g, t)),
            Ok(_) => {}
            Err(err) => warnings.push(format!("g cannot be evaluated at t={t}: {err}")),
        }
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            match scenario.f.expr.eval(x, t) {
                Ok(f) if f < 0.0 && f_min.is_none_or(|(m, _, _)| f < m) => f_min = Some((f, x, t)),
                Ok(_) => {}
                Err(err) => warnings.push(format!("f cannot be evaluated at x={x}, t={t}: {err}")),
            }
        }
    }
    if let Some((f, x, t)) = f_min {
        warnings.push(format!("sign: f = {f} < 0 at x={x}, t={t}"));
    }
    if let Some((g, t)) = g_min {
        warnings.push(format!("sign: g = {g} < 0 at t={t}"));
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::catalog_get;

    fn spec(f: &str, g: &str) -> ScenarioSpec {
        ScenarioSpec::new("t", f, g, "1", 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_growth_is_compatible() {
        assert!(check_compatibility(&spec("2*t+1", "0")).is_empty());
    }

    #[test]
    fn tip_heavy_density_is_still_compatible() {
        assert!(check_compatibility(&spec("10*x^2+10", "0")).is_empty());
    }

    #[test]
    fn sloped_root_warns() {
        let w = check_compatibility(&spec("x+1", "0"));
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("f_x(0,0)"), "{w:?}");
    }

    #[test]
    fn negative_inputs_warn() {
        let w = check_compatibility(&spec("cos(x)-0.8", "t-0.5"));
        assert!(w.iter().any(|m| m.starts_with("sign: f")));
        assert!(w.iter().any(|m| m.starts_with("sign: g")));
    }

    #[test]
    fn catalog_entries_are_compatible() {
        for name in ["A1", "A2", "B1", "B2", "G1", "G2", "G3", "C1"] {
            let s = catalog_get(name).unwrap();
            assert!(check_compatibility(&s).is_empty(), "{name}");
        }
    }
}

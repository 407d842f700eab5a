//! Run configuration files.
//!
//! ```text
//! [scenario]
//! name = "A1"            # catalog entry, or a label for an inline scenario
//! f = "-10*x^2+10"       # inline fields override the catalog entry
//! g = "0"
//! beta = "1"
//! mu = 0.0
//! t_end = 10.0
//!
//! [numerics]
//! n = 1000
//! dt = 1e-5
//! grad_tolerance = 1e-9
//! steady_tolerance = 1e-6
//! steady_window = 10
//! blowup_threshold = 1e6
//!
//! [output]
//! times = [1.0, 2.0, 5.0]
//! dir = "out"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use vessel_core::fem::validate_output_times;
use vessel_core::scenarios::{catalog_get, ScenarioError};
use vessel_core::{ScenarioSpec, StopControls};

pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_DT: f64 = 1e-5;
pub const DEFAULT_OUTPUT_COUNT: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("scenario.{key}: {message}")]
    Scenario { key: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("placeholder {{{0}}} has no value")]
    UnboundPlaceholder(String),
}

/// Config file contents before placeholder substitution and validation.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub scenario: RawScenario,
    #[serde(default)]
    pub numerics: RawNumerics,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub name: Option<String>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub beta: Option<String>,
    pub mu: Option<f64>,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub grad_tolerance: Option<f64>,
    pub steady_tolerance: Option<f64>,
    pub steady_window: Option<usize>,
    pub blowup_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub times: Option<Vec<f64>>,
    pub dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        RawConfig::parse(&text)
    }

    pub fn catalog(name: &str) -> RawConfig {
        RawConfig {
            scenario: RawScenario {
                name: Some(name.to_string()),
                ..RawScenario::default()
            },
            ..RawConfig::default()
        }
    }

    fn expressions_mut(&mut self) -> [(&'static str, &mut Option<String>); 3] {
        [
            ("f", &mut self.scenario.f),
            ("g", &mut self.scenario.g),
            ("beta", &mut self.scenario.beta),
        ]
    }

    /// Names of all `{name}` placeholders in the expression fields.
    pub fn placeholders(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for text in [&self.scenario.f, &self.scenario.g, &self.scenario.beta]
            .into_iter()
            .flatten()
        {
            let mut rest = text.as_str();
            while let Some(open) = rest.find('{') {
                let Some(close) = rest[open..].find('}') else {
                    break;
                };
                names.insert(rest[open + 1..open + close].trim().to_string());
                rest = &rest[open + close + 1..];
            }
        }
        names
    }

    /// Textual `{name}` → `value` replacement in the expression fields.
    pub fn substitute(&mut self, name: &str, value: &str) {
        let pattern = format!("{{{name}}}");
        for (_, text) in self.expressions_mut() {
            if let Some(s) = text {
                *s = s.replace(&pattern, value);
            }
        }
    }

    /// Sets a scalar field by path (`mu`, `t_end`, `n`, `dt`, or any of
    /// those prefixed with its section). Returns false for unknown paths.
    pub fn set_scalar(&mut self, path: &str, value: &str) -> Result<bool, ConfigError> {
        let key = path.rsplit('.').next().unwrap_or(path);
        let real = |v: &str| {
            v.trim().parse::<f64>().map_err(|e| ConfigError::Invalid {
                key: "sweep",
                message: format!("{path} = {v}: {e}"),
            })
        };
        match key {
            "mu" => self.scenario.mu = Some(real(value)?),
            "t_end" => self.scenario.t_end = Some(real(value)?),
            "dt" => self.numerics.dt = Some(real(value)?),
            "grad_tolerance" => self.numerics.grad_tolerance = Some(real(value)?),
            "steady_tolerance" => self.numerics.steady_tolerance = Some(real(value)?),
            "blowup_threshold" => self.numerics.blowup_threshold = Some(real(value)?),
            "n" => {
                let n = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| ConfigError::Invalid {
                        key: "sweep",
                        message: format!("{path} = {value}: {e}"),
                    })?;
                self.numerics.n = Some(n)
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        if let Some(name) = self.placeholders().into_iter().next() {
            return Err(ConfigError::UnboundPlaceholder(name));
        }
        let sc = &self.scenario;
        let base = match &sc.name {
            Some(name) => match catalog_get(name) {
                Ok(spec) => Some(spec),
                Err(_) if sc.f.is_some() => None,
                Err(err) => {
                    return Err(ConfigError::Scenario {
                        key: "name".into(),
                        message: err.to_string(),
                    })
                }
            },
            None => None,
        };
        let scenario = match base {
            Some(spec)
                if sc.f.is_none()
                    && sc.g.is_none()
                    && sc.beta.is_none()
                    && sc.mu.is_none()
                    && sc.t_end.is_none() =>
            {
                spec
            }
            base => {
                let pick = |own: &Option<String>, inherited: Option<&str>, default: &str| {
                    own.clone()
                        .or_else(|| inherited.map(str::to_string))
                        .unwrap_or_else(|| default.to_string())
                };
                let f = match (&sc.f, &base) {
                    (Some(f), _) => f.clone(),
                    (None, Some(b)) => b.f.source.clone(),
                    (None, None) => {
                        return Err(ConfigError::Scenario {
                            key: "f".into(),
                            message: "missing (give a catalog name or an expression)".into(),
                        })
                    }
                };
                let t_end = match (sc.t_end, &base) {
                    (Some(t), _) => t,
                    (None, Some(b)) => b.t_end,
                    (None, None) => {
                        return Err(ConfigError::Scenario {
                            key: "t_end".into(),
                            message: "missing".into(),
                        })
                    }
                };
                let g = pick(&sc.g, base.as_ref().map(|b| b.g.source.as_str()), "0");
                let beta = pick(&sc.beta, base.as_ref().map(|b| b.beta.source.as_str()), "1");
                let mu = sc.mu.or(base.as_ref().map(|b| b.mu)).unwrap_or(0.0);
                let name = sc.name.clone().unwrap_or_else(|| "custom".to_string());
                ScenarioSpec::new(&name, &f, &g, &beta, mu, t_end).map_err(scenario_error)?
            }
        };

        let num = &self.numerics;
        let defaults = StopControls::default();
        let controls = StopControls {
            grad_tolerance: num.grad_tolerance.unwrap_or(defaults.grad_tolerance),
            steady_tolerance: num.steady_tolerance.unwrap_or(defaults.steady_tolerance),
            steady_window: num.steady_window.unwrap_or(defaults.steady_window),
            blowup_threshold: num.blowup_threshold.unwrap_or(defaults.blowup_threshold),
            stop_on_steady: true,
        };
        let config = RunConfig {
            n: num.n.unwrap_or(DEFAULT_N),
            dt: num.dt.unwrap_or(DEFAULT_DT),
            output_times: self.output.times.clone(),
            controls,
            out_dir: self
                .output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(".")),
            scenario,
        };
        config.validate()?;
        Ok(config)
    }
}

fn scenario_error(err: ScenarioError) -> ConfigError {
    let key = match &err {
        ScenarioError::Parse { key, .. } | ScenarioError::DependsOnX { key } => key.to_string(),
        ScenarioError::NegativeViscosity(_) => "mu".into(),
        ScenarioError::BadHorizon(_) => "t_end".into(),
        ScenarioError::Unknown { .. } => "name".into(),
    };
    let message = match &err {
        ScenarioError::Parse { source, .. } => source.to_string(),
        other => other.to_string(),
    };
    ConfigError::Scenario { key, message }
}

/// A validated run request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub dt: f64,
    /// `None` selects [`DEFAULT_OUTPUT_COUNT`] evenly spaced times.
    pub output_times: Option<Vec<f64>>,
    pub controls: StopControls,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_catalog(name: &str) -> Result<RunConfig, ConfigError> {
        RawConfig::catalog(name).resolve()
    }

    pub fn total_steps(&self) -> usize {
        (self.scenario.t_end / self.dt).round() as usize
    }

    /// Requested output times, or evenly spaced step multiples over
    /// `(0, t_end]` when none were given.
    pub fn resolved_output_times(&self) -> Vec<f64> {
        if let Some(times) = &self.output_times {
            return times.clone();
        }
        let steps = self.total_steps();
        let count = DEFAULT_OUTPUT_COUNT;
        let mut idx: Vec<usize> = (1..=count)
            .map(|j| (j * steps + count / 2) / count)
            .collect();
        idx.retain(|&k| k > 0);
        idx.dedup();
        idx.into_iter().map(|k| k as f64 * self.dt).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::Invalid {
                key: "numerics.n",
                message: format!("need at least 2 elements, got {}", self.n),
            });
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::Invalid {
                key: "numerics.dt",
                message: format!("must be finite and > 0, got {}", self.dt),
            });
        }
        let steps = (self.scenario.t_end / self.dt).round();
        if (steps * self.dt - self.scenario.t_end).abs() > 1e-6 * self.dt || steps < 1.0 {
            return Err(ConfigError::Invalid {
                key: "scenario.t_end",
                message: format!(
                    "{} is not a positive integer multiple of dt = {}",
                    self.scenario.t_end, self.dt
                ),
            });
        }
        let c = &self.controls;
        for (key, v) in [
            ("numerics.grad_tolerance", c.grad_tolerance),
            ("numerics.steady_tolerance", c.steady_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Invalid {
                    key,
                    message: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if c.blowup_threshold.is_nan() || c.blowup_threshold <= 0.0 {
            return Err(ConfigError::Invalid {
                key: "numerics.blowup_threshold",
                message: format!("must be > 0, got {}", c.blowup_threshold),
            });
        }
        validate_output_times(&self.resolved_output_times(), self.dt, self.scenario.t_end)
            .map_err(|e| ConfigError::Invalid {
                key: "output.times",
                message: e.to_string(),
            })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_defaults() {
        let c = RunConfig::from_catalog("A1").unwrap();
        assert_eq!(c.n, 1000);
        assert_eq!(c.dt, 1e-5);
        let times = c.resolved_output_times();
        assert_eq!(times.len(), 10);
        assert_eq!(times[0], 100_000.0 * 1e-5);
        assert_eq!(*times.last().unwrap(), 1_000_000.0 * 1e-5);
    }

    #[test]
    fn inline_overrides_catalog_fields() {
        let raw = RawConfig::parse(
            "[scenario]\nname = \"A1\"\ng = \"0.5\"\nt_end = 1\n[numerics]\nn = 20\ndt = 0.01\n",
        )
        .unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(c.scenario.f.source, "-10*x^2+10+1e-6");
        assert_eq!(c.scenario.g.source, "0.5");
        assert_eq!(c.scenario.t_end, 1.0);
        assert_eq!(c.n, 20);
    }

    #[test]
    fn bad_expression_names_key() {
        let raw = RawConfig::parse("[scenario]\nf = \"2**t\"\nt_end = 1\n").unwrap();
        let err = raw.resolve().unwrap_err().to_string();
        assert!(err.starts_with("scenario.f:"), "{err}");
        assert!(err.contains("position 2"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            RawConfig::parse("[numerics]\nsteps = 3\n"),
            Err(ConfigError::Syntax(_))
        ));
    }

    #[test]
    fn output_times_must_hit_steps() {
        let raw = RawConfig::parse(
            "[scenario]\nf = \"1\"\nt_end = 1\n[numerics]\ndt = 0.1\n[output]\ntimes = [0.25]\n",
        )
        .unwrap();
        let err = raw.resolve().unwrap_err().to_string();
        assert!(err.starts_with("output.times"), "{err}");
    }

    #[test]
    fn placeholders_found_and_substituted() {
        let mut raw =
            RawConfig::parse("[scenario]\nf = \"{a}*x^2+{a0}\"\ng = \"{a}\"\nt_end = 1\n").unwrap();
        let names: Vec<String> = raw.placeholders().into_iter().collect();
        assert_eq!(names, vec!["a", "a0"]);
        assert!(matches!(
            raw.resolve(),
            Err(ConfigError::UnboundPlaceholder(_))
        ));
        raw.substitute("a", "2");
        raw.substitute("a0", "3");
        assert_eq!(raw.scenario.f.as_deref(), Some("2*x^2+3"));
        assert_eq!(raw.scenario.g.as_deref(), Some("2"));
    }

    #[test]
    fn scalar_paths() {
        let mut raw = RawConfig::catalog("A1");
        assert!(raw.set_scalar("scenario.mu", "0.5").unwrap());
        assert!(raw.set_scalar("n", "40").unwrap());
        assert!(!raw.set_scalar("zeta", "1").unwrap());
        assert!(raw.set_scalar("dt", "fast").is_err());
        assert_eq!(raw.scenario.mu, Some(0.5));
        assert_eq!(raw.numerics.n, Some(40));
    }

    #[test]
    fn short_horizons_keep_distinct_times() {
        let raw = RawConfig::parse("[scenario]\nf = \"1\"\nt_end = 0.03\n[numerics]\ndt = 0.01\n")
            .unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(
            c.resolved_output_times(),
            vec![0.01, 2.0 * 0.01, 3.0 * 0.01]
        );
    }
}

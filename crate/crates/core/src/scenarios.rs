//! Named problem instances and randomly generated families that satisfy the
//! global-existence hypotheses.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expression::{Expr, ParseError, Var};
use crate::fem::Status;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid expression for '{key}': {source}")]
    Parse {
        key: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("'{key}' may only depend on t, but references x")]
    DependsOnX { key: &'static str },
    #[error("mu must be finite and >= 0, got {0}")]
    NegativeViscosity(f64),
    #[error("t_end must be finite and > 0, got {0}")]
    BadHorizon(f64),
    #[error("unknown scenario '{name}'; available: {available}")]
    Unknown { name: String, available: String },
}

/// A coefficient function together with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub source: String,
    pub expr: Expr,
}

impl Coefficient {
    fn parse(key: &'static str, source: &str) -> Result<Coefficient, ScenarioError> {
        let expr = Expr::parse(source).map_err(|source| ScenarioError::Parse { key, source })?;
        Ok(Coefficient {
            source: source.trim().to_string(),
            expr,
        })
    }
}

/// Full problem instance: density `f(x,t)`, tip force `g(t)`, friction
/// `beta(t)`, viscosity `mu`, and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub f: Coefficient,
    pub g: Coefficient,
    pub beta: Coefficient,
    pub mu: f64,
    pub t_end: f64,
    pub expected_status: Option<Status>,
    pub notes: String,
}

impl ScenarioSpec {
    pub fn new(
        name: &str,
        f: &str,
        g: &str,
        beta: &str,
        mu: f64,
        t_end: f64,
    ) -> Result<ScenarioSpec, ScenarioError> {
        let f = Coefficient::parse("f", f)?;
        let g = Coefficient::parse("g", g)?;
        let beta = Coefficient::parse("beta", beta)?;
        for (key, c) in [("g", &g), ("beta", &beta)] {
            if c.expr.references(Var::X) {
                return Err(ScenarioError::DependsOnX { key });
            }
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(ScenarioError::NegativeViscosity(mu));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(ScenarioError::BadHorizon(t_end));
        }
        Ok(ScenarioSpec {
            name: name.to_string(),
            f,
            g,
            beta,
            mu,
            t_end,
            expected_status: None,
            notes: String::new(),
        })
    }

    pub fn expecting(mut self, status: Status) -> ScenarioSpec {
        self.expected_status = Some(status);
        self
    }

    pub fn with_notes(mut self, notes: &str) -> ScenarioSpec {
        self.notes = notes.to_string();
        self
    }

    /// True when `f` does not depend on time and `g`, `beta` are constants.
    pub fn is_autonomous(&self) -> bool {
        !self.f.expr.references(Var::T)
            && !self.g.expr.references(Var::T)
            && !self.beta.expr.references(Var::T)
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: f = {}, g = {}, beta = {}, mu = {}, t_end = {}",
            self.name, self.f.source, self.g.source, self.beta.source, self.mu, self.t_end
        )
    }
}

const VARIABLE_FRICTION: &str = "0.01+100*exp(-1.8*t)";

struct Entry {
    name: &'static str,
    f: &'static str,
    g: &'static str,
    beta: &'static str,
    mu: f64,
    t_end: f64,
    expected: Status,
    notes: &'static str,
}

const CATALOG: &[Entry] = &[
    Entry {
        name: "C1",
        f: "1",
        g: "5.7",
        beta: "0.01",
        mu: 1e-4,
        t_end: 0.1,
        expected: Status::HorizonReached,
        notes: "low friction, biological viscosity",
    },
    Entry {
        name: "C2",
        f: "1",
        g: "5.7",
        beta: "0.01",
        mu: 1.0,
        t_end: 5.0,
        expected: Status::HorizonReached,
        notes: "low friction, exaggerated viscosity",
    },
    Entry {
        name: "C3",
        f: "1",
        g: "5.7",
        beta: "0.01",
        mu: 0.0,
        t_end: 0.1,
        expected: Status::HorizonReached,
        notes: "low friction, inviscid",
    },
    Entry {
        name: "C4",
        f: "1",
        g: "5.7",
        beta: "1",
        mu: 1e-4,
        t_end: 7.0,
        expected: Status::HorizonReached,
        notes: "unit friction, biological viscosity",
    },
    Entry {
        name: "C5",
        f: "1",
        g: "5.7",
        beta: "1",
        mu: 1.0,
        t_end: 15.0,
        expected: Status::HorizonReached,
        notes: "unit friction, exaggerated viscosity",
    },
    Entry {
        name: "C6",
        f: "1",
        g: "5.7",
        beta: "1",
        mu: 0.0,
        t_end: 7.0,
        expected: Status::HorizonReached,
        notes: "unit friction, inviscid",
    },
    Entry {
        name: "A1",
        f: "-10*x^2+10+1e-6",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 10.0,
        expected: Status::HorizonReached,
        notes: "decreasing density, global biological solution",
    },
    Entry {
        name: "A2",
        f: "10*x^2+10",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 0.05,
        expected: Status::NonBiological,
        notes: "high density at the tip, breakdown near the root",
    },
    Entry {
        name: "A3",
        f: "1+x^2",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 10.0,
        expected: Status::HorizonReached,
        notes: "small tip-to-root pressure drop, biological",
    },
    Entry {
        name: "B1",
        f: "0.4999*cos(100*x)+0.5",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 1.0,
        expected: Status::HorizonReached,
        notes: "oscillation below unity, biological",
    },
    Entry {
        name: "B2",
        f: "2*cos(24*x)+2.1",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 0.01,
        expected: Status::NonBiological,
        notes: "large oscillation, breakdown at low-density points",
    },
    Entry {
        name: "G1",
        f: "1",
        g: "4.7",
        beta: VARIABLE_FRICTION,
        mu: 1e-4,
        t_end: 7.0,
        expected: Status::HorizonReached,
        notes: "extension without proliferation",
    },
    Entry {
        name: "G2",
        f: "2*t+1",
        g: "4.7",
        beta: VARIABLE_FRICTION,
        mu: 1e-4,
        t_end: 7.0,
        expected: Status::HorizonReached,
        notes: "extension with proliferation",
    },
    Entry {
        name: "G3",
        f: "max(1-t*x,0)",
        g: "0",
        beta: "1",
        mu: 0.0,
        t_end: 5.0,
        expected: Status::HorizonReached,
        notes: "regression",
    },
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

pub fn catalog_get(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let entry = CATALOG
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| ScenarioError::Unknown {
            name: name.to_string(),
            available: catalog_names().join(", "),
        })?;
    Ok(ScenarioSpec::new(
        entry.name,
        entry.f,
        entry.g,
        entry.beta,
        entry.mu,
        entry.t_end,
    )?
    .expecting(entry.expected)
    .with_notes(entry.notes))
}

pub fn catalog() -> Vec<ScenarioSpec> {
    CATALOG
        .iter()
        .map(|e| catalog_get(e.name).expect("catalog entries parse"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremBranch {
    /// Decreasing concave density with a flat root.
    A,
    /// Time-independent density with oscillation below one.
    B,
}

/// Horizon used for generated family members.
pub const FAMILY_HORIZON: f64 = 2.0;

/// Deterministic random scenarios inside the hypotheses of the selected
/// existence branch. `beta = 1`, `mu = 0`, constant `g` in `[0, 5]`.
pub fn theorem_family(branch: TheoremBranch, seed: u64, count: usize) -> Vec<ScenarioSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (name, f) = match branch {
                TheoremBranch::A => {
                    let c0: f64 = rng.gen_range(1.0..=10.0);
                    let c1: f64 = rng.gen_range(0.0..=c0 - 0.1);
                    (format!("family-a-{seed}-{i}"), format!("{c0}-{c1}*x^2"))
                }
                TheoremBranch::B => {
                    let amp: f64 = rng.gen_range(0.0..=0.49);
                    let k: u32 = rng.gen_range(1..=30);
                    let offset: f64 = rng.gen_range(amp + 0.05..=amp + 5.0);
                    (
                        format!("family-b-{seed}-{i}"),
                        format!("{amp}*cos({k}*x)+{offset}"),
                    )
                }
            };
            let g: f64 = rng.gen_range(0.0..=5.0);
            ScenarioSpec::new(&name, &f, &g.to_string(), "1", 0.0, FAMILY_HORIZON)
                .expect("generated family parses")
                .expecting(Status::HorizonReached)
        })
        .collect()
}

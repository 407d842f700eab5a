use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use vessel_core::analysis::{check_theorem_conditions, sup_error, TheoremReport};
use vessel_core::fem::{check_compatibility, FemError};
use vessel_core::scenarios::catalog;
use vessel_core::{build_mesh, run, Mesh, SimulationResult, Status};

use crate::config::{ConfigError, RawConfig, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub struct RunOutcome {
    pub config: RunConfig,
    pub mesh: Mesh,
    pub result: SimulationResult,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.result.status.exit_code()
    }

    /// Snapshots at the requested output times, plus the terminal state
    /// when the run ended before the horizon.
    pub fn written_snapshots(&self) -> &[vessel_core::FieldSnapshot] {
        let snaps = &self.result.snapshots;
        let requested: Vec<usize> = self
            .config
            .resolved_output_times()
            .iter()
            .map(|t| (t / self.config.dt).round() as usize)
            .collect();
        match snaps.last() {
            Some(last)
                if self.result.status == Status::HorizonReached
                    && !requested.contains(&((last.t / self.config.dt).round() as usize)) =>
            {
                &snaps[..snaps.len() - 1]
            }
            _ => snaps,
        }
    }
}

pub fn simulate(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let mesh = build_mesh(config.n)?;
    let result = run(
        &config.scenario,
        &mesh,
        config.dt,
        config.scenario.t_end,
        &config.resolved_output_times(),
        &config.controls,
    )?;
    Ok(RunOutcome {
        config: config.clone(),
        mesh,
        result,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the simulation and writes `snapshots.csv` and `report.txt` into the
/// configured output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let outcome = simulate(config)?;
    write_file(
        &config.out_dir.join("snapshots.csv"),
        &snapshots_csv(&outcome),
    )?;
    write_file(&config.out_dir.join("report.txt"), &report_text(&outcome))?;
    Ok(outcome)
}

pub fn snapshots_csv(outcome: &RunOutcome) -> String {
    let mut out = String::from("t,x,u,grad\n");
    let nodes = outcome.mesh.nodes();
    for snap in outcome.written_snapshots() {
        let last = snap.grad.len() - 1;
        for (i, (x, u)) in nodes.iter().zip(&snap.u).enumerate() {
            let grad = snap.grad[i.min(last)];
            let _ = writeln!(out, "{:?},{:?},{:?},{:?}", snap.t, x, u, grad);
        }
    }
    out
}

pub fn report_text(outcome: &RunOutcome) -> String {
    let cfg = &outcome.config;
    let res = &outcome.result;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", cfg.scenario);
    let _ = writeln!(out, "mesh: n = {}, dt = {:?}", cfg.n, cfg.dt);
    let _ = writeln!(out, "status: {}", res.status);
    let _ = writeln!(out, "status_time: {:?}", res.status_time);
    let _ = writeln!(out, "detail: {}", res.status_detail);
    match res.steady_time {
        Some(t) => {
            let _ = writeln!(out, "steady_time: {t:?}");
        }
        None => {
            let _ = writeln!(out, "steady_time: none");
        }
    }
    let _ = writeln!(
        out,
        "min_gradient: {:?} at t = {:?}",
        res.min_gradient.0, res.min_gradient.1
    );
    if let Some(v) = &res.violation {
        let _ = writeln!(
            out,
            "violation: {} element(s), worst {:?} at x = {:?}, first at x = {:?}",
            v.count, v.value, v.x, v.first_x
        );
    }
    let _ = writeln!(
        out,
        "\n{:>14} {:>22} {:>10} {:>22}",
        "t", "min 1+u_x", "at x", "u(1,t)"
    );
    for snap in &res.snapshots {
        let (g, e) = snap.min_gradient();
        let _ = writeln!(
            out,
            "{:>14} {:>22} {:>10} {:>22}",
            format!("{:?}", snap.t),
            format!("{g:?}"),
            format!("{:?}", outcome.mesh.nodes()[e]),
            format!("{:?}", snap.tip())
        );
    }
    let _ = writeln!(out, "\n{}", check_theorem_conditions(&cfg.scenario));
    let warnings = check_compatibility(&cfg.scenario);
    if warnings.is_empty() {
        let _ = writeln!(out, "\ncompatibility: ok");
    } else {
        let _ = writeln!(out, "\ncompatibility warnings:");
        for w in warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}

/// One swept parameter with its list of values. Paired parameters must have
/// equally long lists; the i-th run uses the i-th value of each.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParam {
    pub name: String,
    pub values: Vec<String>,
}

impl SweepParam {
    /// Parses `name=v1,v2,...`.
    pub fn parse(text: &str) -> Result<SweepParam, CliError> {
        let (name, list) = text
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected name=v1,v2,..., got '{text}'")))?;
        let values: Vec<String> = list
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        Ok(SweepParam {
            name: name.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<String>,
    pub status: Status,
    pub status_time: f64,
    pub min_gradient: f64,
    pub tip_u_final: f64,
}

fn compare_values(a: &[String], b: &[String]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(p), Ok(q)) => p.total_cmp(&q),
            _ => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Expands the sweep into validated run configurations, one per value index.
pub fn sweep_configs(base: &RawConfig, params: &[SweepParam]) -> Result<Vec<RunConfig>, CliError> {
    if params.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one --set name=values".into(),
        ));
    }
    let count = params[0].values.len();
    if count == 0 {
        return Err(CliError::Usage(format!(
            "empty value list for '{}'",
            params[0].name
        )));
    }
    if let Some(p) = params.iter().find(|p| p.values.len() != count) {
        return Err(CliError::Usage(format!(
            "paired lists differ in length: '{}' has {}, '{}' has {}",
            params[0].name,
            count,
            p.name,
            p.values.len()
        )));
    }
    let placeholders = base.placeholders();
    let mut probe = base.clone();
    for p in params {
        if !placeholders.contains(&p.name) && !probe.set_scalar(&p.name, &p.values[0])? {
            return Err(CliError::Usage(format!(
                "unknown sweep parameter '{}'",
                p.name
            )));
        }
    }
    (0..count)
        .map(|i| {
            let mut raw = base.clone();
            for p in params {
                if placeholders.contains(&p.name) {
                    raw.substitute(&p.name, &p.values[i]);
                } else {
                    raw.set_scalar(&p.name, &p.values[i])?;
                }
            }
            Ok(raw.resolve()?)
        })
        .collect()
}

/// Runs every sweep point on a pool of `workers` threads and writes
/// `sweep.csv`. Rows are ordered by parameter values.
pub fn cmd_sweep(
    base: &RawConfig,
    params: &[SweepParam],
    workers: usize,
    out_dir: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let configs = sweep_configs(base, params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<RunOutcome, CliError>> =
        pool.install(|| configs.par_iter().map(simulate).collect());

    let mut rows = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        let res = &outcome.result;
        rows.push(SweepRow {
            values: params.iter().map(|p| p.values[i].clone()).collect(),
            status: res.status,
            status_time: res.status_time,
            min_gradient: res.min_gradient.0,
            tip_u_final: res.final_snapshot().tip(),
        });
    }
    rows.sort_by(|a, b| compare_values(&a.values, &b.values));

    let mut csv = String::new();
    for p in params {
        let _ = write!(csv, "{},", p.name);
    }
    csv.push_str("status,status_time,min_gradient,tip_u_final\n");
    for r in &rows {
        for v in &r.values {
            let _ = write!(csv, "{v},");
        }
        let _ = writeln!(
            csv,
            "{},{:?},{:?},{:?}",
            r.status, r.status_time, r.min_gradient, r.tip_u_final
        );
    }
    write_file(&out_dir.join("sweep.csv"), &csv)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: [String; 2],
    pub statuses: [Status; 2],
    /// First time each run met the steady criterion.
    pub steady_times: [Option<f64>; 2],
    /// `(t, max_x |u_a - u_b|)` at every output time both runs reached.
    pub differences: Vec<(f64, f64)>,
}

impl Comparison {
    pub fn max_difference(&self) -> f64 {
        self.differences.iter().fold(0.0, |m, d| m.max(d.1))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let steady = |t: Option<f64>| t.map_or("not reached".to_string(), |t| format!("{t:?}"));
        for i in 0..2 {
            writeln!(
                f,
                "{}: status {}, steady at {}",
                self.names[i],
                self.statuses[i],
                steady(self.steady_times[i])
            )?;
        }
        writeln!(f, "{:>14} {:>22}", "t", "sup |u_a - u_b|")?;
        for (t, d) in &self.differences {
            writeln!(f, "{:>14} {:>22}", format!("{t:?}"), format!("{d:?}"))?;
        }
        write!(f, "max difference: {:?}", self.max_difference())
    }
}

/// Runs both configurations to their horizons and compares them at the
/// shared output times.
pub fn cmd_compare(a: &RunConfig, b: &RunConfig) -> Result<Comparison, CliError> {
    if a.n != b.n || a.dt != b.dt {
        return Err(CliError::Usage(format!(
            "discretizations differ: (n={}, dt={:?}) vs (n={}, dt={:?})",
            a.n, a.dt, b.n, b.dt
        )));
    }
    if a.resolved_output_times() != b.resolved_output_times() {
        return Err(CliError::Usage("output times differ".into()));
    }
    let prepare = |c: &RunConfig| {
        let mut c = c.clone();
        c.controls.stop_on_steady = false;
        c
    };
    let (a, b) = (prepare(a), prepare(b));
    let (ra, rb) = rayon::join(|| simulate(&a), || simulate(&b));
    let (ra, rb) = (ra?, rb?);
    let mut differences = Vec::new();
    for sa in &ra.result.snapshots {
        if let Some(sb) = rb.result.snapshots.iter().find(|s| s.t == sa.t) {
            let d = sup_error(&sa.u, &sb.u).map_err(|e| CliError::Usage(e.to_string()))?;
            differences.push((sa.t, d));
        }
    }
    Ok(Comparison {
        names: [a.scenario.name.clone(), b.scenario.name.clone()],
        statuses: [ra.result.status, rb.result.status],
        steady_times: [ra.result.steady_time, rb.result.steady_time],
        differences,
    })
}

pub fn list_text() -> String {
    let mut out = String::new();
    for s in catalog() {
        let expected = s.expected_status.map_or("-", |st| st.as_str());
        let _ = writeln!(
            out,
            "{:<4} f = {:<24} g = {:<5} beta = {:<22} mu = {:<7} t_end = {:<5} expect {:<15} {}",
            s.name, s.f.source, s.g.source, s.beta.source, s.mu, s.t_end, expected, s.notes
        );
    }
    out
}

pub fn check_text(config: &RunConfig) -> (String, TheoremReport) {
    let report = check_theorem_conditions(&config.scenario);
    let mut out = format!("scenario: {}\n{report}\n", config.scenario);
    let warnings = check_compatibility(&config.scenario);
    if warnings.is_empty() {
        out.push_str("compatibility: ok\n");
    } else {
        out.push_str("compatibility warnings:\n");
        for w in warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str, n: usize, dt: f64) -> RunConfig {
        let mut raw = RawConfig::catalog(name);
        raw.numerics.n = Some(n);
        raw.numerics.dt = Some(dt);
        raw.resolve().unwrap()
    }

    #[test]
    fn csv_has_one_row_per_node_and_output() {
        let cfg = small("A1", 10, 0.01);
        let out = simulate(&cfg).unwrap();
        let csv = snapshots_csv(&out);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,u,grad");
        assert_eq!(lines.len() - 1, 10 * 11);
        // last node repeats the final element's gradient
        let a: Vec<&str> = lines[10].split(',').collect();
        let b: Vec<&str> = lines[11].split(',').collect();
        assert_eq!(a[3], b[3]);
        assert_eq!(b[1], "1.0");
    }

    #[test]
    fn sweep_param_parsing() {
        let p = SweepParam::parse("a=1, 2,3").unwrap();
        assert_eq!(p.name, "a");
        assert_eq!(p.values, vec!["1", "2", "3"]);
        assert!(SweepParam::parse("a").is_err());
        assert!(SweepParam::parse("a=").unwrap().values.is_empty());
    }

    #[test]
    fn sweep_rejects_bad_requests() {
        let mut base = RawConfig::catalog("A1");
        base.scenario.f = Some("{a}*x^2+1".into());
        let empty = [SweepParam {
            name: "a".into(),
            values: vec![],
        }];
        assert!(sweep_configs(&base, &empty).is_err());
        let unknown = [SweepParam {
            name: "zeta".into(),
            values: vec!["1".into()],
        }];
        assert!(matches!(
            sweep_configs(&base, &unknown),
            Err(CliError::Usage(_))
        ));
        let unpaired = [
            SweepParam {
                name: "a".into(),
                values: vec!["1".into(), "2".into()],
            },
            SweepParam {
                name: "mu".into(),
                values: vec!["1".into()],
            },
        ];
        assert!(sweep_configs(&base, &unpaired).is_err());
    }

    #[test]
    fn value_ordering_is_numeric() {
        let v = |s: &str| vec![s.to_string()];
        assert_eq!(compare_values(&v("10"), &v("9")), Ordering::Greater);
        assert_eq!(compare_values(&v("0.5"), &v("1e-3")), Ordering::Greater);
    }

    #[test]
    fn self_comparison_is_exact() {
        let cfg = small("C1", 20, 0.01);
        let c = cmd_compare(&cfg, &cfg).unwrap();
        assert_eq!(c.max_difference(), 0.0);
        assert_eq!(c.differences.len(), 10);
    }

    #[test]
    fn comparison_requires_same_discretization() {
        assert!(cmd_compare(&small("C1", 20, 0.01), &small("C1", 40, 0.01)).is_err());
    }

    #[test]
    fn listing_covers_catalog() {
        assert_eq!(list_text().lines().count(), 14);
    }
}

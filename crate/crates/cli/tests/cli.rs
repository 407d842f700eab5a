use std::path::Path;
use std::process::{Command, Output};

use vessel_core::scenarios::catalog;
use vessel_core::Status;

fn vessel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vessel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn snapshots_are_reproducible_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a1.toml",
        "[scenario]\nname = \"A1\"\nt_end = 1\n[numerics]\nn = 40\ndt = 1e-3\n[output]\ntimes = [0.1, 0.5, 1.0]\n",
    );
    let mut csvs = Vec::new();
    for run in ["one", "two"] {
        let out_dir = dir.path().join(run);
        let out = vessel(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(out_dir.join("snapshots.csv")).unwrap());
        assert!(out_dir.join("report.txt").exists());
    }
    assert_eq!(csvs[0], csvs[1]);

    let text = String::from_utf8(csvs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,u,grad"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3 * 41);
    assert!(rows.windows(2).all(|w| w[0][0] <= w[1][0]));
    assert!(rows.iter().all(|r| r.len() == 4));
    for block in rows.chunks(41) {
        assert_eq!(block[0][2], 0.0);
        assert_eq!(block[40][1], 1.0);
        assert_eq!(block[40][3], block[39][3]);
    }
}

#[test]
fn steady_tip_reported_for_decreasing_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a1.toml",
        "[scenario]\nname = \"A1\"\n[numerics]\nn = 200\ndt = 1e-3\n[output]\ntimes = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]\n",
    );
    let out_dir = dir.path().join("out");
    let out = vessel(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 10.0);
    // tip of the steady profile: 9 - 10/3 + 1e-6
    assert!((last[2] - 5.666668).abs() <= 2e-2, "{}", last[2]);
    assert_eq!(csv.lines().count(), 1 + 10 * 201);
}

#[test]
fn oscillatory_breakdown_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(&[
        "run",
        "--scenario",
        "B2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let line = report
        .lines()
        .find(|l| l.starts_with("status_time:"))
        .unwrap();
    let t: f64 = line["status_time:".len()..].trim().parse().unwrap();
    assert!(t <= 2e-3, "{t}");
}

#[test]
fn malformed_expression_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[scenario]\nf = \"2**t\"\nt_end = 1\n",
    );
    let out = vessel(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("scenario.f") && err.contains("position 2"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&vessel(&["run"])), 1);
    assert_eq!(code(&vessel(&["run", "--scenario", "Z9"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.toml");
    assert_eq!(
        code(&vessel(&["run", "--config", missing.to_str().unwrap()])),
        1
    );
}

#[test]
fn catalog_exit_codes_match_expected_status() {
    let dir = tempfile::tempdir().unwrap();
    for s in catalog() {
        let expected = s.expected_status.unwrap();
        let mut args = vec!["run", "--scenario", s.name.as_str()];
        if expected.is_biological() {
            args.extend(["--n", "200", "--dt", "1e-3"]);
        }
        let out_dir = dir.path().join(&s.name);
        args.extend(["--out", out_dir.to_str().unwrap()]);
        let out = vessel(&args);
        let want = if expected == Status::NonBiological {
            2
        } else {
            0
        };
        assert_eq!(code(&out), want, "{}", s.name);
    }
}

#[test]
fn sweep_orders_rows_and_finds_transition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "osc.toml",
        "[scenario]\nf = \"{A}*cos(24*x)+{A}+0.1\"\nt_end = 0.01\n[numerics]\nn = 200\ndt = 1e-4\n",
    );
    let values =
        "A=2.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9";
    let out_dir = dir.path().join("sweep");
    let out = vessel(&[
        "sweep",
        "--config",
        &cfg,
        "--set",
        values,
        "--workers",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("A,status,status_time,min_gradient,tip_u_final")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 20);
    let a: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(a.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(rows[0][1], "HorizonReached");
    assert_eq!(rows[19][1], "NonBiological");
}

#[test]
fn sweep_rejects_empty_and_unknown_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let empty = vessel(&[
        "sweep",
        "--scenario",
        "A1",
        "--set",
        "mu=",
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&empty), 1);
    let unknown = vessel(&[
        "sweep",
        "--scenario",
        "A1",
        "--set",
        "zeta=1,2",
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&unknown), 1);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("zeta"));
}

#[test]
fn compare_with_itself_is_zero() {
    let out = vessel(&["compare", "C1", "C1", "--n", "50", "--dt", "1e-3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max difference: 0.0"), "{text}");
}

#[test]
fn check_and_list_succeed() {
    let out = vessel(&["check", "--scenario", "B1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("branch b: satisfied"));
    let out = vessel(&["list"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 14);
}

//! End-to-end tests that drive the compiled binary the way a user
//! would, over real files in temp directories.

use std::process::{Command, Output};

use geosat::io;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geosat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, expected: i32) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        stderr_of(out)
    );
}

#[test]
fn generate_writes_dimacs_sidecar_and_config_record() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let points = dir.path().join("f_points.csv");
    let out = run(&[
        "generate", "--model", "mu", "--n", "80", "--k", "2", "--d", "1", "--mu", "0.5", "--seed",
        "7", "--out", cnf.to_str().unwrap(), "--points", points.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    assert!(cnf.exists());
    assert!(points.exists());

    let sidecar = dir.path().join("f.json");
    let record = io::read_record(&sidecar).unwrap();
    assert_eq!(record.seed, 7);
    assert_eq!(record.params.n, 80);
    assert_eq!(record.params.param, 0.5);

    // The resolved configuration goes to stderr as one JSON line and
    // includes flags the user never typed.
    let config_line = stderr_of(&out);
    let config_line = config_line.lines().next().unwrap();
    let v: serde_json::Value = serde_json::from_str(config_line).unwrap();
    assert_eq!(v["subcommand"], "generate");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["jobs"], 0);
    assert_eq!(v["config"]["params"]["boundary"], "cube");
    assert_eq!(v["config"]["params"]["metric"], "linf");
}

#[test]
fn solve_prints_a_verdict_and_a_consistent_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let out = run(&[
        "generate", "--model", "mu", "--n", "60", "--k", "2", "--d", "1", "--mu", "0.4", "--seed",
        "3", "--out", cnf.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let out = run(&["solve", "--in", cnf.to_str().unwrap(), "--engine", "2sat"]);
    assert_code(&out, 0);
    let text = stdout_of(&out);
    let verdict = text.lines().find(|l| l.starts_with("s ")).unwrap();
    if verdict == "s SATISFIABLE" {
        let vline = text.lines().find(|l| l.starts_with("v ")).unwrap();
        let lits: Vec<i64> = vline[2..]
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(*lits.last().unwrap(), 0);
        let formula = io::read_dimacs(&cnf).unwrap();
        let assignment: Vec<bool> = lits[..lits.len() - 1].iter().map(|&l| l > 0).collect();
        assert_eq!(assignment.len() as u32, formula.n_vars);
        assert!(formula.is_satisfied_by(&assignment));
    } else {
        assert_eq!(verdict, "s UNSATISFIABLE");
    }
}

#[test]
fn solve_reports_unsatisfiable_with_a_certificate_comment() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("contradiction.cnf");
    std::fs::write(&cnf, "p cnf 1 2\n1 1 0\n-1 -1 0\n").unwrap();
    let out = run(&["solve", "--in", cnf.to_str().unwrap()]);
    assert_code(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("s UNSATISFIABLE"), "{text}");
    assert!(text.contains("c variable 1"), "{text}");
}

#[test]
fn round_trip_export_reproduces_the_artifact_and_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("a.cnf");
    let out = run(&[
        "generate", "--model", "gamma", "--n", "40", "--k", "2", "--d", "2", "--gamma", "0.3",
        "--seed", "99", "--out", cnf.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    // Regenerate from the sidecar alone, into a fresh directory.
    let dir2 = tempfile::tempdir().unwrap();
    let cnf2 = dir2.path().join("b.cnf");
    let sidecar = dir.path().join("a.json");
    let out = run(&[
        "export", "--record", sidecar.to_str().unwrap(), "--cnf", cnf2.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    assert_eq!(
        std::fs::read(&cnf).unwrap(),
        std::fs::read(&cnf2).unwrap(),
        "sidecar regeneration must be byte-identical"
    );

    let v1 = stdout_of(&run(&["solve", "--in", cnf.to_str().unwrap()]));
    let v2 = stdout_of(&run(&["solve", "--in", cnf2.to_str().unwrap()]));
    let verdict = |s: &str| s.lines().find(|l| l.starts_with("s ")).unwrap().to_owned();
    assert_eq!(verdict(&v1), verdict(&v2));
}

#[test]
fn graph_models_write_points_and_refuse_cnf_export() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("g.csv");
    let out = run(&[
        "generate", "--model", "rgg-fixed", "--n", "30", "--d", "2", "--radius", "0.2", "--out",
        pts.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let loaded = io::read_points(&pts, geosat::geometry::Boundary::Cube).unwrap();
    assert_eq!(loaded.len(), 30);

    let sidecar = dir.path().join("g.json");
    let out = run(&[
        "export", "--record", sidecar.to_str().unwrap(), "--cnf",
        dir.path().join("g.cnf").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    assert!(stderr_of(&out).contains("no DIMACS representation"));
}

#[test]
fn analyze_emits_json_values() {
    let out = run(&["analyze", "--formula", "connectivity_radius", "--n", "10000", "--d", "2"]);
    assert_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let r = v["value"].as_f64().unwrap();
    assert!(r > 0.015174 && r < 0.015175, "r = {r}");
    assert_eq!(v["kind"], "exact");

    let out = run(&[
        "analyze", "--formula", "ksat_bounds", "--model", "gamma", "--k", "3", "--d", "1",
    ]);
    assert_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["lower"]["value"].as_f64().unwrap(), 0.25);
    assert_eq!(v["upper"]["value"].as_f64().unwrap(), 2.0);
}

#[test]
fn sweep_writes_a_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = run(&[
        "sweep", "--model", "mu", "--n", "50", "--k", "2", "--d", "1", "--grid", "0.2,0.8",
        "--trials", "60", "--out", curve.to_str().unwrap(), "--seed", "4",
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "param,p_hat,ci_lo,ci_hi,trials");
    assert_eq!(lines.count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["generate", "--model", "mu", "--not-a-flag"]);
    assert_code(&out, 1);

    // Parameter alias that belongs to a different model.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate", "--model", "mu", "--n", "10", "--k", "2", "--d", "1", "--gamma", "0.5",
        "--out", dir.path().join("x.cnf").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    assert!(stderr_of(&out).contains("does not parameterize"));

    // Two spellings of the same parameter.
    let out = run(&[
        "generate", "--model", "mu", "--n", "10", "--k", "2", "--d", "1", "--mu", "0.5",
        "--param", "0.5", "--out", dir.path().join("x.cnf").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    assert!(stderr_of(&out).contains("exactly once"));

    // Malformed DIMACS.
    let bad = dir.path().join("bad.cnf");
    std::fs::write(&bad, "p cnf 3 1\n1 2\n").unwrap();
    let out = run(&["solve", "--in", bad.to_str().unwrap()]);
    assert_code(&out, 1);
}

#[test]
fn help_and_version_exit_zero() {
    assert_code(&run(&["--help"]), 0);
    assert_code(&run(&["--version"]), 0);
    assert_code(&run(&["solve", "--help"]), 0);
}

#[test]
fn verify_gate_failure_exits_two() {
    // An impossible agreement bar forces the gate to trip.
    let out = run(&[
        "verify", "--suite", "coupling", "--model", "mu", "--n", "30", "--k", "2", "--d", "1",
        "--mu", "0.5", "--trials", "20", "--min-agreement", "1.01",
    ]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("verification failed"));
}

#[test]
fn verify_coupling_passes_at_default_gates() {
    let out = run(&[
        "verify", "--suite", "coupling", "--model", "mu", "--n", "30", "--k", "2", "--d", "1",
        "--mu", "0.5", "--trials", "50", "--seed", "2",
    ]);
    assert_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(v["agreement_rate"].as_f64().unwrap() >= 0.95);
}

#[test]
fn budget_env_var_caps_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("GEOSAT_BUDGET", "10")
        .args([
            "sweep", "--model", "mu", "--n", "50", "--k", "2", "--d", "1", "--grid", "0.2,0.8",
            "--trials", "60", "--out", dir.path().join("c.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_code(&out, 1);
    assert!(stderr_of(&out).contains("budget"));

    // The flag overrides the environment.
    let out = bin()
        .env("GEOSAT_BUDGET", "10")
        .args([
            "--budget", "1000000", "sweep", "--model", "mu", "--n", "50", "--k", "2", "--d", "1",
            "--grid", "0.2,0.8", "--trials", "60", "--out",
            dir.path().join("c.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
}

#[test]
fn generate_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cnf");
    let b = dir.path().join("b.cnf");
    for path in [&a, &b] {
        let out = run(&[
            "generate", "--model", "tilde", "--n", "40", "--k", "2", "--d", "1", "--radius",
            "0.05", "--seed", "21", "--out", path.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(
        std::fs::read(&a).unwrap(),
        {
            let c = dir.path().join("c.cnf");
            let out = run(&[
                "generate", "--model", "tilde", "--n", "40", "--k", "2", "--d", "1", "--radius",
                "0.05", "--seed", "22", "--out", c.to_str().unwrap(),
            ]);
            assert_code(&out, 0);
            std::fs::read(&c).unwrap()
        },
        "different seeds should give different formulas"
    );
}

#[test]
fn threshold_reports_an_estimate_near_the_known_constant() {
    // Small n keeps this quick; the bracket midpoint lands near the
    // finite-size crossing rather than the asymptotic constant.
    let out = run(&[
        "threshold", "--model", "mu", "--n", "120", "--k", "2", "--d", "1", "--lo", "0.2", "--hi",
        "1.2", "--rel-tol", "0.1", "--seed", "8",
    ]);
    assert_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let at_half = v["param_at_half"].as_f64().unwrap();
    assert!(at_half > 0.2 && at_half < 1.2, "param_at_half = {at_half}");
    assert!(v["width_10_90"].as_f64().unwrap() > 0.0);
}

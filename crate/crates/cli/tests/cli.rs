use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sharecap::format::{read_instance, SolutionFile};
use sharecap_core::solver::kkt_residuals;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn sharecap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharecap"))
        .args(args)
        .env_remove("SHARECAP_LOG")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = sharecap(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn solve_waterfilling() {
    let out = json(&run_ok(&["solve", fixture("waterfilling.json").to_str().unwrap()]));
    assert!((num(&out["capacity_nats"]) - (4.5f64.ln() + 1.125f64.ln())).abs() < 1e-12);
    assert!((num(&out["capacity_bits"]) - num(&out["capacity_nats"]) / std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(out["method"], "waterfilling");
    assert!((num(&out["R"][0][0][0]) - 0.875).abs() < 1e-12);
}

#[test]
fn solve_interference_limited() {
    let path = fixture("interference_limited.json");
    let auto = json(&run_ok(&["solve", path.to_str().unwrap()]));
    assert!((num(&auto["capacity_nats"]) - 4.5f64.ln()).abs() < 1e-10);
    assert_eq!(auto["method"], "full-rank-interference-limited");
    assert_eq!(auto["active_constraints"]["tpc"], false);
    let general = json(&run_ok(&["solve", path.to_str().unwrap(), "--method", "general"]));
    assert_eq!(general["method"], "general");
    assert!((num(&general["capacity_nats"]) - 4.5f64.ln()).abs() < 1e-8);
    let oracle = json(&run_ok(&["solve", path.to_str().unwrap(), "--method", "oracle"]));
    assert_eq!(oracle["method"], "oracle");
    assert!((num(&oracle["capacity_nats"]) - 4.5f64.ln()).abs() < 1e-6);
}

#[test]
fn solve_zero_capacity() {
    let out = json(&run_ok(&["solve", fixture("zero_capacity.json").to_str().unwrap()]));
    assert_eq!(num(&out["capacity_nats"]), 0.0);
    assert_eq!(out["regime"]["zero_capacity"], true);
}

#[test]
fn zero_forced_user_has_infinite_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zf.json");
    std::fs::write(
        &path,
        r#"{"m":2,"W1":[[[1,0],[0,0]],[[0,0],[1,0]]],"P_T":3,"users":[{"W2":[[[1,0],[0,0]],[[0,0],[0,0]]],"P_I":0}]}"#,
    )
    .unwrap();
    let text = run_ok(&["solve", path.to_str().unwrap()]);
    let out = json(&text);
    assert_eq!(out["duals"]["mu2"][0], "inf");
    assert!((num(&out["capacity_nats"]) - 4f64.ln()).abs() < 1e-12);
    let file = SolutionFile::parse(&text).unwrap();
    assert!(file.duals().interference[0].is_infinite());
}

#[test]
fn solve_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solution.json");
    let stdout = run_ok(&[
        "solve",
        fixture("beamforming.json").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(stdout.is_empty());
    let file = SolutionFile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((file.capacity_nats - 2.25f64.ln()).abs() < 1e-10);
}

#[test]
fn solution_round_trip_preserves_residuals() {
    let path = fixture("beamforming.json");
    let text = run_ok(&["solve", path.to_str().unwrap()]);
    let file = SolutionFile::parse(&text).unwrap();
    assert_eq!(file.to_json(), text);
    let instance = read_instance(&path).unwrap().instance;
    let again = kkt_residuals(&instance, &file.covariance().unwrap(), &file.duals()).unwrap();
    let stored = file.kkt();
    assert!((again.stationarity - stored.stationarity).abs() <= 1e-12);
    assert!((again.dual_feas - stored.dual_feas).abs() <= 1e-12);
    assert!((again.primal_feas - stored.primal_feas).abs() <= 1e-12);
}

#[test]
fn classify_reports() {
    let bounded = json(&run_ok(&["classify", fixture("bounded.json").to_str().unwrap()]));
    assert_eq!(bounded["unbounded_growth"], false);
    assert!(num(&bounded["capacity_upper_bound_nats"]).is_finite());

    let unbounded = json(&run_ok(&["classify", fixture("unbounded.json").to_str().unwrap()]));
    assert_eq!(unbounded["unbounded_growth"], true);
    assert_eq!(unbounded["favorable_rank"], true);
    assert!(unbounded["capacity_upper_bound_nats"].is_null());
    assert!(unbounded["certifying_vector"].is_array());

    let zero = json(&run_ok(&["classify", fixture("zero_capacity.json").to_str().unwrap()]));
    assert_eq!(zero["zero_capacity"], true);
    assert_eq!(zero["zero_cap_users"][0], 0);
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn sweep_cap_crosses_beamforming_cases() {
    let path = fixture("beamforming.json");
    let csv = run_ok(&["sweep", path.to_str().unwrap(), "--param", "pi:1", "--grid", "0.5:3.5:61"]);
    let methods = column(&csv, "method");
    let mut seen: Vec<&str> = Vec::new();
    for m in &methods {
        if seen.last() != Some(&m.as_str()) {
            seen.push(m);
        }
    }
    assert_eq!(
        seen,
        ["beamforming-interference-limited", "beamforming-both-active", "beamforming-power-limited"]
    );
    let caps: Vec<f64> = column(&csv, "capacity_nats").iter().map(|c| c.parse().unwrap()).collect();
    assert!(caps.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn sweep_power_respects_bound() {
    let path = fixture("bounded.json");
    let csv = run_ok(&["sweep", path.to_str().unwrap(), "--param", "pt", "--grid", "1:1e6:7", "--log"]);
    let caps: Vec<f64> = column(&csv, "capacity_nats").iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(caps.len(), 7);
    assert!(caps.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let bound = num(&json(&run_ok(&["classify", path.to_str().unwrap()]))["capacity_upper_bound_nats"]);
    assert!(caps[6] <= bound);
}

#[test]
fn sweep_jobs_do_not_change_output() {
    let path = fixture("unbounded.json");
    let args = |jobs: &'static str| {
        run_ok(&["sweep", path.to_str().unwrap(), "--param", "pt", "--grid", "0.1:1e4:40", "--log", "--jobs", jobs])
    };
    assert_eq!(args("1"), args("8"));
}

#[test]
fn sweep_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let stdout = run_ok(&[
        "sweep",
        fixture("interference_limited.json").to_str().unwrap(),
        "--param",
        "pt",
        "--grid",
        "1:5:5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.is_empty());
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("param,capacity_nats,trace_R,mu1,interference_1,active_tpc,active_ipc_1,method\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn validate_passes_and_fails() {
    let il = fixture("interference_limited.json");
    let report = json(&run_ok(&["validate", il.to_str().unwrap()]));
    assert_eq!(report["pass"], true);
    assert_eq!(report["oracle"], "pg");

    let bf = fixture("beamforming.json");
    let report = json(&run_ok(&["validate", bf.to_str().unwrap(), "--oracle", "grid", "--tol", "2e-3"]));
    assert_eq!(report["pass"], true);

    // both constraints bind; the grid search lands a few 1e-6 short
    let dir = tempfile::tempdir().unwrap();
    let both = dir.path().join("both.json");
    let text = std::fs::read_to_string(&bf).unwrap().replace("\"P_I\": 1 }", "\"P_I\": 1.8 }");
    std::fs::write(&both, text).unwrap();
    let out = sharecap(&["validate", both.to_str().unwrap(), "--oracle", "grid", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["pass"], false);
}

#[test]
fn grid_oracle_needs_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m3.json");
    run_ok(&["generate", "--seed", "3", "--dim", "3", "--out", path.to_str().unwrap()]);
    let out = sharecap(&["validate", path.to_str().unwrap(), "--oracle", "grid"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_instances_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let a = run_ok(&["generate", "--seed", "42", "--dim", "3", "--users", "2"]);
    run_ok(&["generate", "--seed", "42", "--dim", "3", "--users", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(a, std::fs::read_to_string(&path).unwrap());
    let doc = json(&a);
    assert_eq!(doc["meta"]["seed"], 42);
    assert_eq!(doc["users"].as_array().unwrap().len(), 2);

    let first = run_ok(&["validate", path.to_str().unwrap()]);
    let second = run_ok(&["validate", path.to_str().unwrap()]);
    assert_eq!(first, second);
    assert_eq!(json(&first)["pass"], true);
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", "{\"m\": 2,"),
        ("unknown.json", r#"{"m":1,"W1":[[[1,0]]],"P_T":1,"users":[],"bogus":0}"#),
        ("both.json", r#"{"m":1,"W1":[[[1,0]]],"H1":[[[1,0]]],"P_T":1,"users":[]}"#),
        ("shape.json", r#"{"m":2,"W1":[[[1,0]]],"P_T":1,"users":[]}"#),
        ("hermitian.json", r#"{"m":2,"W1":[[[1,0],[1,0]],[[0,0],[1,0]]],"P_T":1,"users":[]}"#),
    ];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let out = sharecap(&["solve", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        let err = json(&String::from_utf8(out.stderr).unwrap());
        assert_eq!(err["error"], "parse", "{name}");
    }
    let truncated = json(&String::from_utf8(sharecap(&["solve", dir.path().join("truncated.json").to_str().unwrap()]).stderr).unwrap());
    assert_eq!(truncated["detail"]["line"], 1);

    assert_eq!(sharecap(&["solve", "/definitely/not/here.json"]).status.code(), Some(1));
    assert_eq!(sharecap(&["solve", "x.json", "--method", "magic"]).status.code(), Some(1));
    assert_eq!(sharecap(&["--help"]).status.code(), Some(0));
}

#[test]
fn degenerate_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(&path, r#"{"m":2,"W1":[[[1,0],[0,0]],[[0,0],[-1,0]]],"P_T":1,"users":[]}"#).unwrap();
    let out = sharecap(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&String::from_utf8(out.stderr).unwrap())["error"], "degenerate");
}

#[test]
fn logging_goes_to_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_sharecap"))
        .args(["solve", fixture("waterfilling.json").to_str().unwrap()])
        .env("SHARECAP_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
    json(&String::from_utf8(out.stdout).unwrap());
}

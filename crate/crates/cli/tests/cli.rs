use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn qspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspace"))
        .args(args)
        .env_remove("QSPACE_SEED")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = qspace(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn distance_of_worked_example() {
    let v = json_ok(&["distance", &fixture("worked_a.json"), &fixture("worked_b.json")]);
    assert_eq!(f(&v["g_squared"]), 2.25);
    assert_eq!(f(&v["g"]), 1.5);
    assert!(v["witness"]["sigma"].is_array());
}

#[test]
fn distance_to_itself_is_zero() {
    let v = json_ok(&["distance", &fixture("worked_c.json"), &fixture("worked_c.json")]);
    assert_eq!(f(&v["g_squared"]), 0.0);
}

#[test]
fn oracle_flag_agrees_with_hungarian() {
    let a = fixture("random_q5_a.json");
    let b = fixture("random_q5_b.json");
    let fast = json_ok(&["distance", &a, &b]);
    let slow = json_ok(&["distance", &a, &b, "--oracle"]);
    let (x, y) = (f(&fast["g_squared"]), f(&slow["g_squared"]));
    assert!((x - y).abs() <= 1e-12 * x.max(y), "{x} vs {y}");
}

#[test]
fn geodesic_midpoint_and_constant_speed() {
    let v = json_ok(&[
        "geodesic",
        &fixture("worked_a.json"),
        &fixture("worked_b.json"),
        "--t",
        "0,0.5,1",
    ]);
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples[1]["point"]["points"], serde_json::json!([[0.0, 0.5], [0.5, -0.25]]));
    assert_eq!(samples[0]["point"]["points"], serde_json::json!([[0.0, 0.0], [0.0, 1.0]]));
    assert!(f(&v["max_speed_deviation"]) <= 1e-12);

    let r = json_ok(&[
        "geodesic",
        &fixture("random_q5_a.json"),
        &fixture("random_q5_b.json"),
        "--t",
        "0,0.1,0.3,0.35,0.8,1",
    ]);
    assert!(f(&r["max_speed_deviation"]) <= 1e-12 * f(&r["length"]));
}

#[test]
fn parse_errors_exit_2() {
    let bad = qspace(&["distance", &fixture("malformed.json"), &fixture("worked_a.json")]);
    assert_eq!(bad.status.code(), Some(2));
    let garbage = qspace(&["distance", &fixture("not_json.json"), &fixture("worked_a.json")]);
    assert_eq!(garbage.status.code(), Some(2));
    let missing = qspace(&["distance", &fixture("absent.json"), &fixture("worked_a.json")]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(qspace(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qspace(&["verify", "no-such-suite"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3() {
    let out = qspace(&["distance", &fixture("worked_a.json"), &fixture("plane_3d.json")]);
    assert_eq!(out.status.code(), Some(3));
    let far = qspace(&[
        "subtract",
        &fixture("stratum_example.json"),
        &fixture("worked_c.json"),
        "--r",
        "0.1",
    ]);
    assert_eq!(far.status.code(), Some(3));
}

#[test]
fn signature_and_decompositions() {
    let v = json_ok(&["signature", &fixture("stratum_example.json")]);
    assert_eq!(v["J"], 2);
    assert_eq!(v["k"], serde_json::json!([1, 2]));
    let d = json_ok(&["decompositions", "5"]);
    assert_eq!(d.as_array().unwrap().len(), 7);
    assert_eq!(d[0], serde_json::json!({"J": 1, "k": [5]}));
}

#[test]
fn subtraction_near_a_point() {
    let v = json_ok(&[
        "subtract",
        &fixture("near_stratum_example.json"),
        &fixture("stratum_example.json"),
        "--r",
        "0.4",
    ]);
    let pts: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| f(&p[0])).collect();
    let want = [-0.1, 0.1, 0.2];
    for (x, y) in pts.iter().zip(want) {
        assert!((x - y).abs() < 1e-15, "{pts:?}");
    }
}

#[test]
fn tangent_distance_and_exp() {
    let v = json_ok(&[
        "tangent-dist",
        &fixture("vertex_tangent_u.json"),
        &fixture("vertex_tangent_v.json"),
    ]);
    assert_eq!(f(&v["d"]), 2.0);
    assert!((f(&v["quotient"]) - 2.0).abs() <= 2e-6);

    let e = json_ok(&["exp", &fixture("vertex_tangent_u.json")]);
    assert_eq!(e["points"], serde_json::json!([[-1.0, 0.0], [1.0, 0.0]]));
}

#[test]
fn curve_commands() {
    let s = json_ok(&["tensor-sum", &fixture("minimizer_f.json"), &fixture("minimizer_g.json")]);
    assert_eq!(s["branches"].as_array().unwrap().len(), 4);
    // branch (0, 0) is x + (1 - x)
    for k in 0..11 {
        assert!((f(&s["branches"][0][k][0]) - 1.0).abs() < 1e-15);
    }

    let d = json_ok(&["dirichlet", &fixture("cross_branches.json")]);
    assert!((f(&d["dirichlet"]) - 2.0).abs() < 1e-12);

    let n = json_ok(&["lp-norm", &fixture("cross_branches.json"), "--k", "inf"]);
    assert!((f(&n["value"]) - 2f64.sqrt()).abs() < 1e-15);
    assert!(n["k"].is_null());
    let bad = qspace(&["lp-norm", &fixture("cross_branches.json"), "--k", "-1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn derivative_of_sampled_curves() {
    let v = json_ok(&["derivative", &fixture("affine_sampled.json"), "--at", "0.5"]);
    let vals: Vec<f64> = v["value"]["points"].as_array().unwrap().iter().map(|p| f(&p[0])).collect();
    assert!((vals[0] - 1.0).abs() < 1e-6 && (vals[1] - 2.0).abs() < 1e-6, "{vals:?}");

    let c = json_ok(&["derivative", &fixture("cross_sampled.json"), "--at", "0"]);
    let vals: Vec<f64> = c["value"]["points"].as_array().unwrap().iter().map(|p| f(&p[0])).collect();
    assert!((vals[0] + 1.0).abs() < 1e-6 && (vals[1] - 1.0).abs() < 1e-6, "{vals:?}");

    let off_grid = qspace(&["derivative", &fixture("cross_sampled.json"), "--at", "0.05"]);
    assert_eq!(off_grid.status.code(), Some(3));
}

#[test]
fn selection_commands() {
    let s = json_ok(&["select", &fixture("affine_sampled.json")]);
    assert_eq!(s["samples"], 11);
    assert_eq!(s["branches"].as_array().unwrap().len(), 2);

    let d = json_ok(&["select", &fixture("affine_sampled.json"), "--at", "0.5"]);
    let mut ders: Vec<f64> = d["derivatives"].as_array().unwrap().iter().map(|v| f(&v[0])).collect();
    ders.sort_by(f64::total_cmp);
    assert!((ders[0] - 1.0).abs() < 1e-6 && (ders[1] - 2.0).abs() < 1e-6, "{ders:?}");

    let rejected = qspace(&["select", &fixture("cross_sampled.json"), "--at", "0"]);
    assert_eq!(rejected.status.code(), Some(3));
}

#[test]
fn verify_is_deterministic_and_honors_env_seed() {
    let args = ["verify", "pc", "--seed", "5", "--trials", "300"];
    let a = qspace(&args);
    let b = qspace(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let seq = qspace(&["verify", "pc", "--seed", "5", "--trials", "300", "--sequential"]);
    assert_eq!(a.stdout, seq.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_qspace"))
        .args(["verify", "pc", "--trials", "300"])
        .env("QSPACE_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["passed"], true);
}

#[test]
fn verify_reports_failures_with_exit_1() {
    let out = qspace(&["verify", "flat1d", "--trials", "50", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn worked_examples_suite_passes() {
    let v = json_ok(&["verify", "paper-examples"]);
    assert_eq!(v["passed"], true);
    assert!(v["invariants"].as_array().unwrap().len() >= 10);
}

#[test]
fn out_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("qspace-out-{}.json", std::process::id()));
    let p = path.to_string_lossy().into_owned();
    let out = qspace(&["distance", &fixture("worked_a.json"), &fixture("worked_c.json"), "--out", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(f(&v["g_squared"]), 3.0);
    std::fs::remove_file(path).ok();
}

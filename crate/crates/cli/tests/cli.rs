use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn wardrop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wardrop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn solve_fisk() {
    let out = wardrop(&["solve", "--game", &fixture("fisk.json"), "--demand", "60,30,6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let lambda = v["lambda"]["bc"].as_f64().unwrap();
    assert!((lambda - 24.0).abs() < 1e-4, "{lambda}");
    assert_eq!(v["wardrop"]["pass"], Value::Bool(true));
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(&keys[..3], ["loads", "flows", "tau"]);
}

#[test]
fn breakpoints_of_ex41() {
    let out = wardrop(&["breakpoints", "--game", &fixture("ex41.json"), "--class", "alpha,beta"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), serde_json::json!([1.0, 3.0]));
}

#[test]
fn braess_chain_fails_monotonicity() {
    let out = wardrop(&["verify-mes", "--game", &fixture("braess.json"), "--chain", "h1:0.5:2.5:5"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(false));
    let violations = v["violations"].as_array().unwrap();
    assert!(!violations.is_empty());
    assert!(violations.iter().all(|x| x["resource"] == "v1v2"));
}

#[test]
fn bundled_fixture_names_resolve() {
    let out = wardrop(&["breakpoints", "--game", "ex41.json", "--class", "alpha"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn monotone_chain_passes() {
    let out = wardrop(&["verify-mes", "--game", &fixture("ex41.json"), "--box", "alpha:0:4,beta:0:4", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], Value::Bool(true));
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"resources\": [\n    {\"id\": \"a\", \"cost\": 3}\n  ]\n}").unwrap();
    let out = wardrop(&["solve", "--game", bad.to_str().unwrap(), "--demand", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    let out = wardrop(&["solve", "--game", &fixture("fisk.json"), "--demand", "60,30"]);
    assert_eq!(out.status.code(), Some(1));
    let out = wardrop(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(wardrop(&["--help"]).status.code(), Some(0));
    let out = wardrop(&["solve", "--game", dir.path().join("missing.json").to_str().unwrap(), "--demand", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn emitted_games_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let out = wardrop(&["combine", "product", "--game", &fixture("ex41.json"), "--game", &fixture("fisk.json"), "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let g = wardrop_kit::CongestionGame::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(g.num_commodities(), 6);

    let e = dir.path().join("e.json");
    let out = wardrop(&["embed", "sp", "--game", p.to_str().unwrap(), "--out", e.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let crg = wardrop_kit::compose::ConstrainedRoutingGame::from_json(&std::fs::read_to_string(&e).unwrap()).unwrap();
    assert_eq!(crg.to_game().unwrap().num_commodities(), 6);

    // The routing form solves to the same costs.
    let a = json(&wardrop(&["solve", "--game", p.to_str().unwrap(), "--demand", "1,1,60,30,6,2"]));
    let b = json(&wardrop(&["solve", "--crg", e.to_str().unwrap(), "--demand", "1,1,60,30,6,2"]));
    for (x, y) in a["lambda"].as_object().unwrap().values().zip(b["lambda"].as_object().unwrap().values()) {
        assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-5);
    }
}

#[test]
fn check_crg_reports_conditions() {
    let out = wardrop(&["check-crg", "--crg", &fixture("braess.crg.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["conditions"]["series_parallel"], Value::Bool(false));
}

#[test]
fn gradient_check_passes_on_fisk() {
    let out = wardrop(&["gradient-check", "--game", &fixture("fisk.json"), "--demand", "60,30,6"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn output_is_deterministic() {
    let args = ["regions", "--game", "ex45.json", "--box", "alpha:0:4,beta:0:4", "--grid", "7", "--seed", "3"];
    let a = wardrop(&args);
    let b = wardrop(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let single = Command::new(env!("CARGO_BIN_EXE_wardrop"))
        .args(args)
        .env("WARDROP_KIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, single.stdout);
    let csv = String::from_utf8(a.stdout).unwrap();
    assert!(csv.starts_with("mu_alpha,mu_beta,lambda_alpha,lambda_beta,order_label,regime_label,x_"));
    assert_eq!(csv.lines().count(), 1 + 49);
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn spinc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinc")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spinc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read_json(path: &PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gauss_run_exits_zero() {
    let out = scratch("gauss.json");
    let o = spinc(&["verify", "gauss", "--immersion", "sphere2-in-r3", "--samples", "100", "--seed", "7", "--tol", "1e-5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(v["checks"][0]["samples"], 100);
    assert_eq!(v["checks"][0]["points"].as_array().unwrap().len(), 100);
}

#[test]
fn failing_tolerance_exits_two() {
    let o = spinc(&["verify", "gauss", "--seed", "7", "--samples", "5", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL spinorial-gauss"));
}

#[test]
fn configuration_errors_exit_one() {
    let o = spinc(&["spectrum", "--scenario", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown scenario `nope`"));
    assert_eq!(spinc(&["verify", "gauss"]).status.code(), Some(1));
    assert_eq!(spinc(&["verify", "gauss", "--bogus"]).status.code(), Some(1));
    assert_eq!(spinc(&["verify", "no-such-check", "--seed", "1"]).status.code(), Some(1));
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"command": "verify", "check": "gauss", "seed": 1, "colour": "red"}"#).unwrap();
    assert_eq!(spinc(&["verify", "gauss", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let workers = Command::new(env!("CARGO_BIN_EXE_spinc")).env("SPINC_WORKERS", "zero").args(["list-scenarios"]).output().unwrap();
    assert_eq!(workers.status.code(), Some(1));
}

#[test]
fn flags_override_the_config_file() {
    let cfg = scratch("morel.json");
    std::fs::write(&cfg, r#"{"command": "verify", "check": "morel", "seed": 1, "samples": 3}"#).unwrap();
    let out = scratch("morel-out.json");
    let o = spinc(&["verify", "morel", "--config", cfg.to_str().unwrap(), "--samples", "4", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["config"]["samples"], 4);
    assert_eq!(v["config"]["seed"], 1);
}

#[test]
fn bound_lists_three_zero_modes() {
    let out = scratch("bound.json");
    let o = spinc(&["bound", "--scenario", "torus-magnetic", "--flux", "3", "--grid", "24", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&out)["data"]["zero_modes"].as_array().unwrap().len(), 3);
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let mut texts = Vec::new();
    for workers in ["1", "4"] {
        let o = Command::new(env!("CARGO_BIN_EXE_spinc"))
            .env("SPINC_WORKERS", workers)
            .args(["spectrum", "--scenario", "torus-magnetic", "--flux", "2", "--grid", "16", "--eigs", "6"])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        texts.push(v.to_string());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn spectrum_csv_and_eigenvector_dump() {
    let dump = scratch("vecs.csv");
    let o = spinc(&["spectrum", "--grid", "16", "--eigs", "4", "--format", "csv", "--dump-eigenvectors", dump.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("index,lambda,convergence\n"));
    assert_eq!(csv.lines().count(), 5);
    assert!(std::fs::read_to_string(&dump).unwrap().starts_with("mode,site"));
}

#[test]
fn scenario_listing() {
    let o = spinc(&["list-scenarios"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("torus2-flat") && text.contains("cylinder-sphere-cone"));
    let j = spinc(&["list-scenarios", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|r| r["name"] == "sphere2-in-r3"));
}

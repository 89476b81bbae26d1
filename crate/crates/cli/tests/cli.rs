use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_duhem"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn classify_presets() {
    let o = run(&["classify", "--config", &config("coleman_hodgdon.toml")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["orientation"], "CCW");
    let o = run(&["classify", "--config", &config("dahl.toml")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["orientation"], "CW");
}

#[test]
fn classify_degenerate_is_a_config_error() {
    let o = run(&["classify", "--config", &config("degenerate.toml")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coincide"));
}

#[test]
fn classify_mismatch_fails_checks() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("dahl.toml")).unwrap().replace("expect = \"cw\"", "expect = \"ccw\"");
    let p = dir.path().join("c.toml");
    fs::write(&p, text).unwrap();
    let o = run(&["classify", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unknown_keys_and_bad_steps_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("toy_case_c.toml")).unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, format!("{base}\n[extras]\nfoo = 1\n")).unwrap();
    assert_eq!(code(&run(&["simulate", "--config", p.to_str().unwrap()])), 2);
    fs::write(&p, base.replace("dt = 1e-3", "dt = 0.0")).unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&run(&["simulate", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["simulate"])), 2);
}

#[test]
fn certify_toy() {
    let o = run(&["certify", "--config", &config("toy_case_c.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["invariant_set"]["n"], serde_json::json!([-1.0, -1.0]));
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = run(&["simulate", "--config", &config("toy_case_c.toml"), "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    let csv = fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("trajectory.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,x1,u,y,y_phi,H_cl,invariant_dist\n"));
    assert!(text.lines().nth(1).unwrap().split(',').all(|f| f.contains('e')));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["tolerances"]["conv"], 1e-3);
    assert_eq!(m["pass"], true);
}

#[test]
fn tolerance_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--config",
        &config("toy_case_c.toml"),
        "--out",
        dir.path().to_str().unwrap(),
        "--tol-conv",
        "0",
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["tolerances"]["conv"], 0.0);
}

#[test]
fn storage_grid_and_integrate_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["storage-grid", "--config", &config("coleman_hodgdon.toml"), "--out", out])), 0);
    let grid = fs::read_to_string(dir.path().join("storage_grid.csv")).unwrap();
    assert!(grid.starts_with("gamma,v,H,branch,intersect\n"));
    assert_eq!(grid.lines().count(), 401);
    assert_eq!(code(&run(&["integrate", "--config", &config("dahl.toml"), "--out", out])), 0);
    let path = fs::read_to_string(dir.path().join("integrate.csv")).unwrap();
    assert!(path.starts_with("t,u,y_phi\n"));
    assert_eq!(path.lines().count(), 2002);
}

#[test]
fn reproduce_writes_a_rerunnable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = run(&["reproduce", "vii_b_negative", "ex_case_b", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for id in ["vii_b_negative", "ex_case_b"] {
        for f in ["config.toml", "trajectory.csv", "verification.json", "manifest.json"] {
            assert!(out.join(id).join(f).is_file(), "{id}/{f}");
        }
    }
    let again = dir.path().join("again");
    let cfg = out.join("ex_case_b").join("config.toml");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read(out.join("ex_case_b").join("trajectory.csv")).unwrap(),
        fs::read(again.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn reproduce_reports_the_rate_bound_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "vii_b_positive", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("vii_b_positive").join("manifest.json")).unwrap()).unwrap();
    let checks = m["checks"].as_array().unwrap();
    assert_eq!(checks[0]["name"], "certificate");
    assert_eq!(checks[0]["pass"], false);
    assert!(checks[1..].iter().all(|c| c["pass"] == true));
}

#[test]
fn reproduce_unknown_id_lists_valid_ones() {
    let o = run(&["reproduce", "nope"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("vii_a_negative") && err.contains("ex_case_d"));
}

#[test]
fn design_picks_the_stable_candidate() {
    let o = run(&["design", "--config", &config("design_mds.toml"), "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["outcome"], "found");
    assert_eq!(v["candidate"], 1);
    assert_eq!(v["case"], "b");
    assert_eq!(v["report"]["seed"], 11);
}

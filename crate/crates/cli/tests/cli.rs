use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockroots")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scalar_quadratic_table_gives_two_then_one() {
    let out = TempDir::new().unwrap();
    let o = run(&["factorize", s(&fixture("scalar_quadratic.json")), "--method", "qd", "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = json(&out.path().join("factors.json"));
    let q: Vec<f64> = f["factors"].as_array().unwrap().iter().map(|m| m[0][0].as_f64().unwrap()).collect();
    assert!((q[0] - 2.0).abs() < 1e-8 && (q[1] - 1.0).abs() < 1e-8, "{q:?}");
    assert!(out.path().join("qd_trace.csv").exists());
}

#[test]
fn example1_pipeline_writes_a_passing_report() {
    let out = TempDir::new().unwrap();
    let o = run(&["factorize", s(&fixture("example1.json")), "--method", "pipeline", "--solvents", "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["factors.json", "solvents_right.json", "solvents_left.json", "report.json", "trace.csv", "manifest.json"] {
        assert!(out.path().join(name).exists(), "{name}");
    }
    let report = json(&out.path().join("report.json"));
    let v = &report["verification"];
    assert_eq!(v["passed"], Value::Bool(true));
    for r in v["per_factor_residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-6);
    }
    let csv = fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("stage,iteration,delta_pct,residual,aux\n"));
}

#[test]
fn ragged_rows_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"format_version":"1","order":2,"degree":1,"coefficients":[[[1,0],[0,1]],[[1,2],[3]]]}"#,
    )
    .unwrap();
    let o = run(&["factorize", s(&bad), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("coefficient 1"), "{err}");
}

#[test]
fn non_convergence_exits_two_with_a_trace() {
    let out = TempDir::new().unwrap();
    let o = run(&[
        "factorize",
        s(&fixture("example4.json")),
        "--method",
        "two-stage",
        "--max-iter",
        "30",
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&o), 2);
    let csv = fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 31);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = run(&["factorize", s(&fixture("example2.json")), "--method", "horner", "--seed", "3", "--out", s(d.path())]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["factors.json", "report.json", "trace.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn replay_reproduces_a_run() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let o = run(&["factorize", s(&fixture("example1.json")), "--out", s(a.path())]);
    assert_eq!(code(&o), 0);
    let o = run(&["replay", s(&a.path().join("manifest.json")), "--out", s(b.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.path().join("factors.json")).unwrap(),
        fs::read(b.path().join("factors.json")).unwrap()
    );
    let m = json(&b.path().join("manifest.json"));
    assert_eq!(m["invocation"]["command"], "factorize");
}

#[test]
fn chain_and_right_solvents_roundtrip() {
    let dir = TempDir::new().unwrap();
    let (f, r, c) = (dir.path().join("f"), dir.path().join("r"), dir.path().join("c"));
    let poly = fixture("example1.json");
    assert_eq!(code(&run(&["factorize", s(&poly), "--out", s(&f)])), 0);
    let o = run(&["convert", s(&f.join("factors.json")), "--direction", "chain-to-right", "--poly", s(&poly), "--out", s(&r)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["convert", s(&r.join("solvents_right.json")), "--direction", "right-to-chain", "--poly", s(&poly), "--out", s(&c)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["verify", s(&poly), "--against", s(&c.join("factors.json"))]);
    assert_eq!(code(&o), 0);
    let o = run(&["convert", s(&r.join("solvents_right.json")), "--direction", "right-to-left", "--poly", s(&poly), "--out", s(&dir.path().join("l"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn wrong_factors_fail_verification() {
    let dir = TempDir::new().unwrap();
    let bogus = dir.path().join("bogus.json");
    fs::write(
        &bogus,
        r#"{"format_version":"1","kind":"spectral_factors","order":1,"degree":2,"ordering":"rightmost_first","factors":[[[3]],[[0]]]}"#,
    )
    .unwrap();
    let o = run(&["verify", s(&fixture("scalar_quadratic.json")), "--against", s(&bogus)]);
    assert_eq!(code(&o), 2);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], Value::Bool(false));
}

#[test]
fn gas_turbine_decoupling_evaluates_the_closed_loop() {
    let out = TempDir::new().unwrap();
    let o = run(&["decouple", s(&fixture("gas_turbine.json")), "--modes=-1,-2", "--eval=0,1,2+1i", "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out.path().join("decoupling.json"));
    assert_eq!(d["gain_blocks"].as_array().unwrap().len(), 3);
    for sample in d["closed_loop"].as_array().unwrap() {
        assert!(sample["deviation"].as_f64().unwrap() < 1e-6);
    }
    let csv = fs::read_to_string(out.path().join("closed_loop.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn missing_modes_is_a_usage_error() {
    let out = TempDir::new().unwrap();
    let o = run(&["decouple", s(&fixture("gas_turbine.json")), "--out", s(out.path())]);
    assert_eq!(code(&o), 1);
}

#[test]
fn siso_decoupling() {
    let out = TempDir::new().unwrap();
    let o = run(&["decouple", s(&fixture("siso.json")), "--modes=-5", "--modes=-6", "--eval=1", "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out.path().join("decoupling.json"));
    let k: Vec<f64> = d["gain"][0].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in k.iter().zip([82.0, 49.0, 7.0]) {
        assert!((got - want).abs() < 1e-9, "{k:?}");
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geostruct")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn laplacian_of_x1_sq_plus_x2_sq_vanishes_for_minkowski_plane() {
    let dir = TempDir::new().unwrap();
    let form = write(&dir, "minkowski2.json", r#"{"n": 2, "matrix": [[1, 0], [0, -1]]}"#);
    let o = run(&["laplacian", "--form", s(&form), "--field", "x1^2+x2^2", "--point", "1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn symplectic_perp_of_e1_is_lagrangian() {
    let dir = TempDir::new().unwrap();
    let form = write(&dir, "symplectic2.json", r#"{"n": 2, "matrix": [[0, 1], [-1, 0]]}"#);
    let e1 = write(&dir, "e1.json", "[[1, 0]]");
    let o = run(&["perp", "--form", s(&form), "--vectors", s(&e1), "--side", "left"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let basis: Vec<Vec<f64>> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(basis, vec![vec![1.0, 0.0]]);
}

#[test]
fn classify_shorthands() {
    let o = run(&["classify", "--form", "minkowski:4", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "minkowski");
    assert_eq!(v["signature"], serde_json::json!([3, 1]));
    let o = run(&["classify", "--form", "symplectic:4"]);
    assert_eq!(stdout(&o).trim(), "symplectic");
}

#[test]
fn pair_of_symplectic_plane() {
    let o = run(&["pair", "--form", "symplectic:2", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["b"], serde_json::json!([[0.0, -1.0], [1.0, 0.0]]));
}

#[test]
fn adjoint_and_group_check() {
    let dir = TempDir::new().unwrap();
    let boost = write(&dir, "boost.json", "[[1.25, 0.75], [0.75, 1.25]]");
    let o = run(&["group-check", "--form", "minkowski:2", "--op", s(&boost)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("member"));
    let o = run(&["group-check", "--form", "euclidean:2", "--op", s(&boost), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["member"], false);

    // for a group element the adjoint is the inverse
    let o = run(&["adjoint", "--form", "minkowski:2", "--op", s(&boost), "--side", "right"]);
    let m: Vec<Vec<f64>> = serde_json::from_slice(&o.stdout).unwrap();
    let expected = [[1.25, -0.75], [-0.75, 1.25]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[i][j] - expected[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn algebra_basis_dimension() {
    let o = run(&["algebra-basis", "--form", "symplectic:4"]);
    let v: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.len(), 10);
}

#[test]
fn grad_from_field_file() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", r#"{"nvars": 2, "expr": "x1*x2"}"#);
    let o = run(&["grad", "--form", "symplectic:2", "--field", s(&f), "--point", "1,2", "--side", "left"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g: Vec<f64> = serde_json::from_slice(&o.stdout).unwrap();
    // B^T (2, 1) with B = [[0, -1], [1, 0]]
    assert_eq!(g, vec![1.0, -2.0]);
}

#[test]
fn check_exit_codes() {
    let o = run(&["check", "invariant", "--form", "minkowski:3", "--field", "x1^2 + x2^2 - x3^2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"][0]["trials"], 10);

    let o = run(&["check", "invariant", "--form", "minkowski:3", "--field", "x1^2", "--group-sample", "4"]);
    assert_eq!(o.status.code(), Some(1));

    for identity in ["gradient-equivariance", "laplacian-coincidence", "laplacian-equivariance", "gradient-defining"] {
        let o = run(&["check", identity, "--form", "pseudo:4:2", "--field", "x1^2 - x3*x4 + sin(x2)"]);
        assert_eq!(o.status.code(), Some(0), "{identity}: {}", stderr(&o));
    }
    let o = run(&["check", "product-rule", "--form", "euclidean:3", "--field", "x1*x2", "--field2", "exp(x3)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["check", "round-trip", "--form", "symplectic:2", "--vector-field", "x1^2; x1*x2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn check_with_user_group() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.json", "[[[0, -1], [1, 0]], [[1, 0], [0, -1]]]");
    let o = run(&["check", "invariant", "--form", "euclidean:2", "--field", "x1^2 + x2^2", "--group", s(&h)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // a shear is not orthogonal
    let bad = write(&dir, "bad.json", "[[[1, 1], [0, 1]]]");
    let o = run(&["check", "invariant", "--form", "euclidean:2", "--field", "x1", "--group", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_name_the_offender() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"n": 2, "matrix": [[1, 0], [0, "a"]]}"#);
    let o = run(&["classify", "--form", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json") && stderr(&o).contains("matrix[1][1]"), "{}", stderr(&o));

    let degenerate = write(&dir, "deg.json", "[[1, 2], [2, 4]]");
    let o = run(&["pair", "--form", s(&degenerate)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("deg.json"), "{}", stderr(&o));

    let field = write(&dir, "f.json", r#"{"nvars": 2, "expr": "x1 +"}"#);
    let o = run(&["laplacian", "--form", "euclidean:2", "--field", s(&field), "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("expr"), "{}", stderr(&o));

    let o = run(&["laplacian", "--form", "euclidean:2", "--field", "x1", "--point", "0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--point"));

    let o = run(&["classify", "--form", "hyperbolic:3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", "no-such-identity", "--form", "euclidean:2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_small_run_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let args = ["verify", "--seed", "7", "--trials", "1", "--kinds", "euclidean,symplectic", "--n-max", "4", "--quiet"];
    let a = run(&[&args[..], &["--output", s(&out)]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = run(&args);
    let strip = |bytes: &[u8]| {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v["wall_time_s"] = Value::Null;
        v
    };
    assert_eq!(strip(&a.stdout), strip(&b.stdout));
    assert_eq!(strip(&std::fs::read(&out).unwrap()), strip(&a.stdout));
}

#[test]
fn verify_with_impossible_tolerance_fails() {
    let o = run(&["verify", "--trials", "1", "--kinds", "euclidean", "--n-max", "2", "--tol", "1e-18", "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn verify_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"trials": 0}"#);
    let o = run(&["verify", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trials"), "{}", stderr(&o));
}

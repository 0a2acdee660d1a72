use serde_json::{json, Value};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemcover"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) {
    fs::write(dir.join(name), serde_json::to_vec_pretty(v).unwrap()).unwrap();
}

fn read(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"].clone()
}

#[test]
fn cover_two_balls() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "fam.json",
        &json!({"space": {"kind": "euclidean", "dim": 1},
                "balls": [{"center": [0.0], "radius": 1.0}, {"center": [5.0], "radius": 1.0}]}),
    );
    let out = run(dir.path(), &["cover", "--input", "fam.json", "--out", "o"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sel = read(dir.path().join("o/selection.json"));
    assert_eq!(sel["chosen"], json!([0, 1]));
    let audit = read(dir.path().join("o/audit_selection.json"));
    assert_eq!(audit["passed"], json!(true));
    assert!(audit["tolerances"]["exact_slack"].is_number());

    // a second run refuses to overwrite, --force allows it
    let again = run(dir.path(), &["cover", "--input", "fam.json", "--out", "o"]);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(stderr_error(&again)["kind"], json!("invalid_input"));
    let forced = run(
        dir.path(),
        &["cover", "--input", "fam.json", "--out", "o", "--force"],
    );
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn audit_flags_a_corrupted_selection() {
    let dir = tempfile::tempdir().unwrap();
    // the small ball is listed first, so the radius order is violated
    write(
        dir.path(),
        "sel.json",
        &json!({"family": {"space": {"kind": "euclidean", "dim": 1},
                           "balls": [{"center": [0.0], "radius": 0.1}, {"center": [5.0], "radius": 1.0}]},
                "chosen": [0, 1], "sup_records": [1.0, 1.0]}),
    );
    let out = run(dir.path(), &["audit", "--input", "sel.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let rec = read(dir.path().join("o/audit.json"));
    assert_eq!(rec["passed"], json!(false));
    let clauses = rec["clauses"].as_array().unwrap();
    let a = clauses
        .iter()
        .find(|c| c["clause"] == json!("selection.a"))
        .unwrap();
    assert_eq!(a["passed"], json!(false));
    assert_eq!(a["witnesses"][0]["steps"], json!([1, 2]));
}

#[test]
fn color_reports_verification() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "fam.json",
        &json!({"balls": [{"center": [0.0], "radius": 0.75}, {"center": [1.0], "radius": 0.75},
                          {"center": [2.0], "radius": 0.75}]}),
    );
    let out = run(
        dir.path(),
        &[
            "color",
            "--space",
            "euclidean",
            "--dim",
            "1",
            "--input",
            "fam.json",
            "--out",
            "o",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = read(dir.path().join("o/coloring.json"));
    assert_eq!(rep["coloring"]["sigma"], json!([1, 2, 1]));
    assert_eq!(rep["verification"]["passed"], json!(true));
}

#[test]
fn differentiate_atoms_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("nu1.csv"), "x,y,w\n0.2,0.2,1\n0.7,0.4,2\n").unwrap();
    fs::write(dir.path().join("nu2.csv"), "0.2,0.2,3\n0.7,0.4,1\n").unwrap();
    write(
        dir.path(),
        "in.json",
        &json!({"space": {"kind": "euclidean", "dim": 2}, "nu1": {"csv": "nu1.csv"}, "nu2": {"csv": "nu2.csv"},
                "points": [[0.2, 0.2], [0.7, 0.4]], "ladder": {"r0": 0.2, "factor": 0.5, "depth": 5}}),
    );
    let out = run(
        dir.path(),
        &["differentiate", "--input", "in.json", "--out", "o"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = read(dir.path().join("o/estimates.json"));
    let est = rep["estimates"].as_array().unwrap();
    assert_eq!(est[0]["extrapolated"], json!(3.0));
    assert_eq!(est[1]["extrapolated"], json!(0.5));
    assert_eq!(est[0]["status"], json!("converged"));
    let csv = fs::read_to_string(dir.path().join("o/estimates.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,r1,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn monte_carlo_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "in.json",
        &json!({"space": {"kind": "euclidean", "dim": 2},
                "nu1": {"kind": "density", "density": {"name": "volume"}},
                "nu2": {"kind": "density", "density": {"name": "affine", "a": [1.0, 0.0], "b": 1.0},
                        "integration": {"method": "monte_carlo", "sample_count": 1000}},
                "region": {"box": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}},
                "grid": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "counts": [2, 2]}}),
    );
    let out = run(dir.path(), &["rncheck", "--input", "in.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_error(&out)["message"]
        .as_str()
        .unwrap()
        .contains("--seed"));
}

#[test]
fn vitali_single_atom() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "in.json",
        &json!({"space": {"kind": "euclidean", "dim": 2},
                "mu": {"kind": "atomic", "points": [[0.5, 0.5]], "weights": [1.0]}}),
    );
    let out = run(dir.path(), &["vitali", "--input", "in.json", "--out", "o"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = read(dir.path().join("o/fill.json"));
    assert_eq!(rep["fill"]["disjoint_balls"].as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(dir.path().join("o/residuals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn demo_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = run(
            dir.path(),
            &[
                "demo", "--space", "sphere", "--dim", "2", "--seed", "7", "--out", name,
            ],
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(
            fs::read(dir.path().join("a").join(&n)).unwrap(),
            fs::read(dir.path().join("b").join(&n)).unwrap()
        );
    }
}

#[test]
fn usage_and_input_errors_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], json!("usage"));

    let out = run(dir.path(), &["cover", "--input", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_error(&out);
    assert_eq!(err["kind"], json!("io"));
    assert!(err["message"].as_str().unwrap().contains("missing.json"));

    let out = run(dir.path(), &["demo", "--space", "sphere", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let help = run(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
}

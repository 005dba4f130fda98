use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scissors")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn homology_of_ssigma() {
    let out = run(&["homology", &fixture("ssigma.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["reduced_homology"][1]["rank"], 1);
    assert_eq!(v["reduced_homology"][0]["rank"], 0);
}

#[test]
fn homology_of_three_point_building() {
    let out = run(&["homology", &fixture("three_points.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["input"], "building");
    assert_eq!(v["reduced_homology"][1]["rank"], 2);
}

#[test]
fn malformed_input_is_an_input_error() {
    let out = run(&["homology", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(out.stdout.is_empty());
    assert_eq!(run(&["homology", &fixture("missing.json")]).status.code(), Some(2));
}

#[test]
fn classical_tetrahedron_and_cube() {
    let v = json(&run(&["classical", &fixture("tetrahedron.json")]));
    assert_eq!(v["dehn_invariant"]["zero"], false);
    assert_eq!(v["dehn_invariant"]["nonzero_heuristic"], true);
    let vol = v["volume"]["value"].as_f64().unwrap();
    assert!((vol - 2f64.sqrt() / 12.0).abs() < 1e-12);
    let c = json(&run(&["classical", "--bits", "256", &fixture("cube.json")]));
    assert_eq!(c["dehn_invariant"]["zero"], true);
    assert!((c["volume"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ccs_rotation() {
    let v = json(&run(&["ccs", &fixture("rotation.json")]));
    assert_eq!(v["sign"], 1);
    assert!((v["volume"]["value"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn dehn_complex_reports() {
    let out = run(&["dehn-complex", &fixture("lines12.json"), &fixture("d4.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["d"], 1);
    assert_eq!(v["spectral_sequence"]["e1_matches"], true);
    let out = run(&["dehn-complex", "--truncate", "5", &fixture("coordinate3.json"), &fixture("klein4.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["homology"][0]["rank"], 2);
    assert_eq!(v["coinvariants"]["matches"], true);
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("scissors-cli-{}.json", std::process::id()));
    let out = run(&["homology", "--coeff", "q", "--out", path.to_str().unwrap(), &fixture("ssigma.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["coeff"], "q");
    std::fs::remove_file(path).unwrap();
}

#[test]
fn deterministic_output() {
    let a = run(&["classical", &fixture("tetrahedron.json")]);
    let b = run(&["classical", &fixture("tetrahedron.json")]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn selftest_levels() {
    let out = run(&["selftest", "fast"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let ids: Vec<u64> = v["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![1, 2, 3, 6]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().filter(|l| l.contains("PASS")).count(), 4);
    assert_eq!(run(&["selftest", "slow"]).status.code(), Some(2));
    assert_eq!(run(&["--truncate", "0", "selftest"]).status.code(), Some(2));
}

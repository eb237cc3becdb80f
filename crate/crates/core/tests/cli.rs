use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn mtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlab")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mtp_check_exit_codes() {
    let ok = mtlab(&["mtp-check", "--measure", arg(&data("p4_uniform.json")), "--radius", "2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = mtlab(&["mtp-check", "--measure", arg(&data("p3_center_measure.json")), "--radius", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["verdict"], "FAIL");
    assert_eq!(v["sections"][0]["checks"][0]["value"], "2");
    assert!(v["sections"][0]["checks"][0]["certificate"]["doubly_rooted_code"].is_string());
}

#[test]
fn malformed_and_precondition_exit_codes() {
    let missing = mtlab(&["mtp-check", "--measure", "/nonexistent/measure.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let expr = mtlab(&["flow-invariance", "--density", "1+*x", "--t", "0.3"]);
    assert_eq!(expr.status.code(), Some(2));
    let few = mtlab(&["poisson-audit", "--space", arg(&data("poisson_space.json")), "--samples", "10"]);
    assert_eq!(few.status.code(), Some(3));
    let not_inv = mtlab(&["schreier", "--irs", arg(&data("s3_irs_not_invariant.json"))]);
    assert_eq!(not_inv.status.code(), Some(3));
}

#[test]
fn bs_distance_csv() {
    let out = mtlab(&["bs-distance", "--a", arg(&data("c3.json")), "--b", arg(&data("line.json")), "--rmax", "3", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "R,tv,weight,contribution");
    assert_eq!(lines.len(), 4);
}

#[test]
fn thinthick_csv_and_json_indent() {
    let out = mtlab(&["thinthick", "--surface", arg(&data("genus2.json")), "--eps", "0.2,0.05", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("eps,thin_area,fraction,bound\n"));
    let pretty = mtlab(&["--json-indent", "4", "thinthick", "--surface", arg(&data("genus2.json")), "--eps", "0.1"]);
    assert!(String::from_utf8(pretty.stdout).unwrap().contains("\n    \"command\": \"thinthick\""));
}

#[test]
fn reports_are_byte_identical_per_seed() {
    let space = data("poisson_space.json");
    let args = ["poisson-audit", "--space", arg(&space), "--samples", "20000", "--seed", "9"];
    let (a, b) = (mtlab(&args), mtlab(&args));
    assert_eq!(a.stdout, b.stdout);
    let other = mtlab(&["poisson-audit", "--space", arg(&space), "--samples", "20000", "--seed", "10"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn flow_invariance_separates_uniform_from_perturbed() {
    let uniform = mtlab(&["flow-invariance", "--density", "1", "--t", "0.37", "--samples", "1000000"]);
    assert_eq!(uniform.status.code(), Some(0));
    let bumped = mtlab(&["flow-invariance", "--density", "1+0.5*cos(2*pi*x)", "--t", "0.37", "--samples", "1000000"]);
    assert_eq!(bumped.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bumped.stdout).unwrap();
    assert!(v["sections"][0]["checks"][1]["certificate"]["lower_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn chabauty_lemchab_reports_the_hypothesis_demo() {
    let out = mtlab(&["chabauty-audit", "--which", "lemchab", "--trials", "200", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verdicts: Vec<&str> = v["sections"][0]["checks"].as_array().unwrap().iter().map(|c| c["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["PASS", "PASS", "HYPOTHESIS-VIOLATED"]);
}

#[test]
fn schreier_and_sasaki_pass_on_examples() {
    assert_eq!(mtlab(&["schreier", "--irs", arg(&data("s3_irs.json"))]).status.code(), Some(0));
    let s = mtlab(&["sasaki-check", "--metric", arg(&data("hyperbolic.json")), "--against", arg(&data("hyperbolic_scaled.json")), "--k", "1"]);
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stdout));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bochner_cli::RunReport;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bochner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bochner")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("valid report")
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn compute_flat_has_zero_bochner_norm() {
    let out = bochner(&["compute", "--chart", "flat", "--point", "0,0,0,0"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r.command, "compute");
    assert_eq!(num(&r.results["bochner_norm"]), 0.0);
    assert_eq!(r.results["metric"][0][0], 2.0);
}

#[test]
fn compute_fubini_study_is_bochner_flat() {
    let out = bochner(&["compute", "--chart", "fubini-study", "--point", "0.1,0.2,-0.1,0.05"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let ratio = num(&r.results["bochner_norm"]) / num(&r.results["curvature_norm"]);
    assert!(ratio <= 1e-6);
    assert!(num(&r.results["scalar_curvature"]) > 0.0);
    for (_, v) in r.results["curvature_symmetry"].as_object().unwrap() {
        assert!(num(v) <= 1e-8);
    }
}

#[test]
fn compute_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = bochner(&[
        "compute",
        "--chart",
        "product-cp1-cp1",
        "--point",
        "-0.2,0.1,0.3,0",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let r = RunReport::from_json(&text).unwrap();
    assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
    assert_eq!(r.results["curvature"].as_array().unwrap().len(), 4);
}

#[test]
fn compute_rejects_wrong_coordinate_count() {
    let out = bochner(&["compute", "--chart", "flat", "--point", "0,0"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn compute_reports_domain_errors() {
    let out = bochner(&["compute", "--chart", "complex-hyperbolic", "--point", "0.9,0,0.9,0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
}

#[test]
fn compute_rejects_unknown_chart_and_bad_spec() {
    assert_eq!(code(&bochner(&["compute", "--chart", "sphere", "--point", "0,0,0,0"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.chart");
    std::fs::write(&path, "name = polynomial\nn = 2\n1,0|1,0 1 0\n1,0|0,0 0.1 0\n").unwrap();
    let out = bochner(&["compute", "--chart-file", path.to_str().unwrap(), "--point", "0,0,0,0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn compute_accepts_chart_files() {
    let path = fixture("random_poly.chart");
    let out = bochner(&["compute", "--chart-file", path.to_str().unwrap(), "--point", "0.1,0,0,0.1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out).inputs["chart"]["seed"], 7);
}

#[test]
fn check_random_corpus_passes() {
    let out = bochner(&["check", "--random", "--trials", "50", "--seed", "7", "--n", "2"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(num(&r.results["max"]["trace_identity"]) <= 1e-8);
    let trials = r.results["trials"].as_array().unwrap();
    let seeds: Vec<u64> = trials.iter().map(|t| t["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, (7..57).collect::<Vec<_>>());
}

#[test]
fn check_flat_chart_is_exactly_zero() {
    let out = bochner(&["check", "--chart", "flat"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    for (_, v) in r.results["max"].as_object().unwrap() {
        assert_eq!(num(v), 0.0);
    }
}

#[test]
fn check_rejects_empty_corpus() {
    assert_eq!(code(&bochner(&["check", "--random", "--trials", "0"])), 2);
}

#[test]
fn check_reports_breaches() {
    let path = fixture("steep_numeric.chart");
    let out = bochner(&["check", "--chart-file", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert!(r.results["breaches"].as_u64().unwrap() > 0);
    assert!(num(&r.results["worst"]["ratio_to_tolerance"]) > 1.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("worst offender"));
}

#[test]
fn output_is_stable_apart_from_timestamp() {
    let run = || {
        let out = bochner(&["check", "--random", "--trials", "12", "--seed", "3", "--n", "3"]);
        let text = String::from_utf8(out.stdout).unwrap();
        let cut = text.find("\"timestamp\"").unwrap();
        text[..cut].to_string()
    };
    assert_eq!(run(), run());
}

fn certify(name: &str) -> Output {
    bochner(&["certify", fixture(name).to_str().unwrap()])
}

#[test]
fn certify_identity_and_complex_structure() {
    for (name, tol) in [("identity.map", 1e-10), ("complex_structure.map", 1e-9)] {
        let out = certify(name);
        assert_eq!(code(&out), 0, "{name}");
        let cert = &report(&out).results["certificates"][0];
        assert_eq!(cert["verdict"], "Homothety");
        assert!((num(&cert["mu"]) - 1.0).abs() <= tol);
    }
}

#[test]
fn certify_non_conformal_map_is_not_preserving() {
    let out = certify("stretch.map");
    assert_eq!(code(&out), 4);
    assert_eq!(report(&out).results["certificates"][0]["verdict"], "NotPreserving");
}

#[test]
fn certify_flat_chart() {
    assert_eq!(code(&certify("flat.map")), 5);
}

#[test]
fn certify_non_j_linear_map() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skew.map");
    std::fs::write(
        &path,
        "chart product-cp1-cp1\npoint-p 0,0,0,0\npoint-q 0,0,0,0\nF\n2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
    )
    .unwrap();
    let out = bochner(&["certify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 6);
    assert_eq!(report(&out).results["certificates"][0]["verdict"], "NotJLinear");
}

#[test]
fn certify_parse_failure_names_line() {
    let out = certify("bad_row.map");
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));
}

fn constancy(name: &str) -> Output {
    bochner(&["constancy", fixture(name).to_str().unwrap()])
}

#[test]
fn constancy_on_swap_fixture() {
    let out = constancy("swap_diagonal.map");
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let mus: Vec<f64> = r.results["mus"].as_array().unwrap().iter().map(num).collect();
    assert_eq!(mus.len(), 3);
    assert!(mus.iter().all(|m| (m - 1.0).abs() <= 1e-8));
    assert!(num(&r.results["spread"]) <= 1e-8);
    assert_eq!(r.results["constant"], true);
}

#[test]
fn constancy_two_identity_blocks() {
    assert_eq!(code(&constancy("two_identities.map")), 0);
}

#[test]
fn constancy_needs_two_blocks() {
    assert_eq!(code(&constancy("identity.map")), 2);
}

#[test]
fn constancy_reports_first_failing_block() {
    let out = constancy("identity_then_flat.map");
    assert_eq!(code(&out), 5);
    let r = report(&out);
    assert_eq!(r.results["constant"], false);
    assert_eq!(r.results["failing_index"], 1);
    assert_eq!(r.results["failing_line"], 10);
}

//! End-to-end runs of the binary against the checked-in problem files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("problems")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edpolar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(file: &str, args: &[&str]) -> Output {
    let path = problems_dir().join(file);
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.push(path.to_string_lossy().into_owned());
    let full_ref: Vec<&str> = full.iter().map(String::as_str).collect();
    run(&full_ref)
}

#[test]
fn cardioid_eddeg_report() {
    let out = run_on("cardioid.prob", &["eddeg"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ed_degree"], 3);
    assert_eq!(report["m_infinity"], 0);
    assert_eq!(report["methods_agree"], true);
    let points = report["points"].as_array().unwrap();
    let mults: Vec<(i64, i64, i64)> = points
        .iter()
        .map(|p| {
            (
                p["n_p"].as_i64().unwrap(),
                p["mult_f"].as_i64().unwrap(),
                p["mult_l"].as_i64().unwrap(),
            )
        })
        .collect();
    assert!(mults.contains(&(2, 4, 2)));
    assert!(mults.contains(&(1, 2, 1)));
}

#[test]
fn crossed_planes_polar_empty() {
    let out = run_on("crossed_planes.prob", &["polar"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["polar"]["empty"], true);
    assert_eq!(report["polar"]["dimension"], -1);
}

#[test]
fn siersma_identity_from_file() {
    let out = run_on("siersma.prob", &["stratcalc"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["siersma"]["n_zero"], 3);
}

#[test]
fn escape_instance_counts() {
    let out = run_on("escape.prob", &["morsify"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["m_infinity"], 2);
    assert_eq!(report["total_morse"], 2);
    assert!(report.get("points").is_none() || report["points"].as_array().unwrap().is_empty());
}

#[test]
fn circle_arbitrary_point_degree() {
    let out = run_on("circle.prob", &["eddeg", "--method", "polar"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ed_degree"], 2);
}

#[test]
fn multiplicity_breakdown_at_candidates() {
    let out = run_on("cardioid.prob", &["multiplicity"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows: Vec<(i64, i64, i64)> = report["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["n_p"].as_i64().unwrap(),
                p["mult_f"].as_i64().unwrap(),
                p["mult_l"].as_i64().unwrap(),
            )
        })
        .collect();
    assert!(rows.contains(&(2, 4, 2)));
    assert!(rows.contains(&(1, 2, 1)));
}

#[test]
fn stratcalc_defect_route_closes_against_tracking() {
    let out = run_on("cardioid_strata.prob", &["stratcalc"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["stratcalc"]["n"]["O"], 2);
    assert_eq!(report["stratcalc"]["n"]["P"], 1);
    assert_eq!(report["stratcalc"]["morse_count"], 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = run_on("cardioid.prob", &["eddeg"]);
    let b = run_on("cardioid.prob", &["eddeg"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run_on("siersma.prob", &["stratcalc"]);
    let d = run_on("siersma.prob", &["stratcalc"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn validate_reports_diagnostics() {
    let dir = tempdir();
    let good = dir.join("good.prob");
    std::fs::write(&good, "variables = [\"x\"]\nfunction = \"x^2\"\n").unwrap();
    let out = run(&["validate", good.to_str().unwrap()]);
    assert!(out.status.success());

    let bad = dir.join("bad.prob");
    std::fs::write(&bad, "variables = [\"x\"]\nfunction = \"x + q\"\n").unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("unknown variable"));
}

#[test]
fn io_errors_exit_one_scope_errors_exit_two() {
    let out = run(&["eddeg", "/nonexistent/file.prob"]);
    assert_eq!(out.status.code(), Some(1));

    // Scope error: eddeg without a data point.
    let dir = tempdir();
    let f = dir.join("nofunc.prob");
    std::fs::write(&f, "variables = [\"x\"]\nfunction = \"x^2\"\n").unwrap();
    let out = run(&["eddeg", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tracking_flags_are_honored() {
    let out = run_on(
        "cardioid.prob",
        &["eddeg", "--t0", "0.05", "--schedule-steps", "35"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ed_degree"], 3);
    assert_eq!(report["methods_agree"], true);

    let out = run_on("escape.prob", &["morsify", "--escape-radius", "1e6"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["m_infinity"], 2);
}

#[test]
fn seed_flag_overrides_file() {
    let a = run_on("cardioid.prob", &["eddeg", "--seed", "23"]);
    assert!(a.status.success());
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 23);
    assert_eq!(report["ed_degree"], 3);
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("edpolar-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

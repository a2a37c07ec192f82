use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GAUSSIAN: &str = r#"{"type":"gaussian","dim":1,"sigma":1.0}"#;
const MIXTURE: &str = r#"{"type":"mixture","dim":1,"weights":[0.5,0.5],
    "components":[{"type":"gaussian","sigma":1,"mean":[-2]},{"sigma":1,"mean":[2]}]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropy-flow"))
}

fn spec_file(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], density: &Path) -> Output {
    bin().args(args).arg("--density").arg(density).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_gaussian_passes() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "g.json", GAUSSIAN);
    let out = run(&["verify"], &spec);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tag,lhs,rhs,slack,tol,pass,meta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 14);
    assert!(rows.iter().all(|r| r.contains(",true,")));
    assert!(rows[2].starts_with("ISO,1.70794684"));
}

#[test]
fn flow_writes_fixed_columns() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "m.json", MIXTURE);
    let out_path = dir.path().join("flow.csv");
    let out = bin()
        .args(["flow", "--t-min", "0.2", "--t-max", "1", "--steps", "3", "--dt", "0.001", "--out"])
        .arg(&out_path)
        .arg("--density")
        .arg(&spec)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let mut reader = csv::Reader::from_path(&out_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["t", "H", "N", "I", "J", "Upsilon", "debruijn_residual", "fisher_residual", "n_second_diff"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        // 17 significant digits in scientific notation
        let mantissa = row[0].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{}", &row[0]);
        let debruijn: f64 = row[6].parse().unwrap();
        assert!(debruijn < 1e-3);
        let n2: f64 = row[8].parse().unwrap();
        assert!(n2 <= 0.0);
    }
    assert_eq!(rows[2][0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn json_output_parses() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "g.json", GAUSSIAN);
    let out = run(&["nash", "--format", "json"], &spec);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows[0]["tag"], "NASH");
    assert_eq!(rows[1]["tag"], "NASH_GENERAL");
    let ratio = rows[0]["ratio"].as_f64().unwrap();
    assert!((ratio - std::f64::consts::E / 4.0).abs() < 1e-4);
    assert!((rows[1]["mass"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn scaling_accepts_custom_factors() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "m.json", MIXTURE);
    let out = run(&["scaling", "--scales", "0.5,3"], &spec);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 7);
    let out = run(&["scaling", "--scales", "5"], &spec);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn failed_check_exits_one_and_names_tag() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "m.json", MIXTURE);
    let out = run(&["verify", "--tol", "-1"], &spec);
    assert_eq!(out.status.code(), Some(2));
    // scaling deviations are roundoff-sized but nonzero, so a 1e-300 tolerance rejects them
    // while the genuine inequalities keep positive slack
    let out = run(&["verify", "--tol", "1e-300"], &spec);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("SCALING_H"), "{err}");
    assert!(!err.contains("KEY") && !err.contains("ISO"), "{err}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("SCALING_H,") && l.contains(",false,")));
}

#[test]
fn malformed_json_is_a_usage_error_without_output() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "bad.json", r#"{"type":"gaussian","dim":1,"#);
    let out_path = dir.path().join("out.csv");
    let out = bin().args(["verify", "--out"]).arg(&out_path).arg("--density").arg(&spec).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
    assert!(out.stdout.is_empty());
    assert!(stderr(&out).contains("invalid density spec"));
}

#[test]
fn unknown_spec_type_and_bad_weights_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    for (i, body) in [
        r#"{"type":"laplace","dim":1,"sigma":1}"#,
        r#"{"type":"mixture","dim":1,"weights":[0.5,0.6],"components":[{"sigma":1},{"sigma":1}]}"#,
        r#"{"type":"gaussian","dim":3,"sigma":1}"#,
        r#"{"type":"gaussian","dim":1,"sigma":-1}"#,
    ]
    .iter()
    .enumerate()
    {
        let spec = spec_file(&dir, &format!("s{i}.json"), body);
        let out = run(&["verify"], &spec);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", stderr(&out));
    }
}

#[test]
fn time_grid_errors_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "g.json", GAUSSIAN);
    for args in [
        &["flow", "--t-min", "0"][..],
        &["flow", "--steps", "2"],
        &["flow", "--t-min", "1", "--t-max", "0.5"],
        &["flow", "--dt", "0.5"],
        &["flow", "--points", "8"],
    ] {
        let out = run(args, &spec);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
    let out = bin().args(["flow"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn narrow_domain_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "g.json", GAUSSIAN);
    let out = run(&["verify", "--half-width", "3", "--points", "64"], &spec);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("half_width"));
    assert!(out.stdout.is_empty());
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let spec = spec_file(&dir, "m.json", MIXTURE);
    let outputs: Vec<Vec<u8>> = ["1", "3", "8"]
        .iter()
        .map(|n| {
            let out = bin()
                .env("ENTROPY_FLOW_THREADS", n)
                .args(["flow", "--format", "json", "--steps", "4", "--density"])
                .arg(&spec)
                .output()
                .unwrap();
            assert_eq!(out.status.code(), Some(0));
            out.stdout
        })
        .collect();
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

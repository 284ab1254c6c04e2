use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use ym::export::parse_density_csv;

fn ym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ym")).current_dir(dir).args(args).output().expect("ym runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TWO_CONSTANTS: &str = r#"{
  "dimension": 1,
  "domain": [[[0, 2]]],
  "codomain": [[0, 1]],
  "pieces": [
    { "subdomain": [[0, 1]], "forward": ["0.25"] },
    { "subdomain": [[1, 2]], "forward": ["0.75"] }
  ]
}"#;

#[test]
fn atoms_of_two_constants_are_halves() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("two.json"), TWO_CONSTANTS).unwrap();
    let v = json(&ym(dir.path(), &["atoms", "--input", "two.json"]));
    assert_eq!(v["variant"], "atoms");
    let atoms = v["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 2);
    assert_eq!(atoms[0]["location"][0], 0.25);
    assert_eq!(atoms[0]["weight"], 0.5);
    assert_eq!(atoms[1]["weight"], 0.5);
}

#[test]
fn density_and_prob_agree() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ym(dir.path(), &["example", "harmonic", "--n", "16", "--output", "h.json"]).status.success());
    assert!(ym(dir.path(), &["density", "--input", "h.json", "--output", "d.csv", "--grid", "2048"]).status.success());
    let rows = parse_density_csv(&fs::read_to_string(dir.path().join("d.csv")).unwrap()).unwrap();
    let (a, b) = (0.2, 0.65);
    // Trapezoid over the rows inside [a, b]; the grid brackets the breakpoints,
    // so the only error is the partial cells at a and b.
    let inside: Vec<_> = rows.iter().filter(|r| a <= r.y && r.y <= b).collect();
    let from_density: f64 = inside.windows(2).map(|w| 0.5 * (w[0].g + w[1].g) * (w[1].y - w[0].y)).sum();
    let edge = 2.0 * 3.0 * 1.0 / 2048.0;

    let v = json(&ym(dir.path(), &["prob", "--input", "h.json", "--interval", "0.2", "0.65"]));
    let p = v["value"].as_f64().unwrap();
    assert!((p - from_density).abs() < edge, "{p} vs {from_density}");
    assert_eq!(v["tail_bound"], 1.0 / 16.0);
}

#[test]
fn density_plot_is_written_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = ym(dir.path(), &["density", "--input", "square", "--output", "sq.csv", "--plot", "--grid", "256"]);
    assert!(out.status.success());
    let svg = fs::read_to_string(dir.path().join("sq.svg")).unwrap();
    assert!(svg.contains("<polyline"));
}

#[test]
fn functional_on_identity_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&ym(dir.path(), &["functional", "--input", "identity", "--beta", "s", "--n", "200000"]));
    let mc = &v["monte_carlo"];
    assert!((mc["value"].as_f64().unwrap() - 0.5).abs() < 4.0 * mc["stderr"].as_f64().unwrap());
    assert_eq!(mc["generator"], "splitmix64-counter v1");
}

#[test]
fn sample_reports_ks_for_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = ym(dir.path(), &["sample", "--input", "identity", "--n", "50000", "--output", "s.csv"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.contains("# generator: splitmix64-counter v1\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 50_001);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(ym(dir.path(), &["density", "--input", "bad.json"]).status.code(), Some(1));
    assert_eq!(ym(dir.path(), &["density", "--input", "missing.json"]).status.code(), Some(3));
    // A flat piece marked monotone carries an atom, so it has no density.
    let flat = TWO_CONSTANTS.replace(r#""forward": ["0.75"] }"#, r#""forward": ["0.75+0*x"], "monotone": true }"#);
    fs::write(dir.path().join("flat.json"), flat).unwrap();
    assert_eq!(ym(dir.path(), &["density", "--input", "flat.json"]).status.code(), Some(1));
    // sqrt of a negative number while sampling is a numerical failure.
    let negative = TWO_CONSTANTS.replace(r#""forward": ["0.25"]"#, r#""forward": ["sqrt(x-0.5)"]"#);
    fs::write(dir.path().join("negative.json"), negative).unwrap();
    assert_eq!(ym(dir.path(), &["sample", "--input", "negative.json", "--n", "1000"]).status.code(), Some(2));
    assert_eq!(ym(dir.path(), &["atoms", "--input", "identity"]).status.code(), Some(1));
    let out = ym(dir.path(), &["density", "--input", "square", "--output", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_flags_overlaps() {
    let dir = tempfile::tempdir().unwrap();
    let overlapping = TWO_CONSTANTS.replace("[[1, 2]]", "[[0.5, 2]]");
    fs::write(dir.path().join("o.json"), overlapping).unwrap();
    let out = ym(dir.path(), &["validate", "--input", "o.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["overlaps"][0], serde_json::json!([0, 1]));
    let ok = json(&ym(dir.path(), &["validate", "--input", "harmonic"]));
    assert_eq!(ok["valid"], true);
}

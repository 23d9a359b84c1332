use std::path::Path;
use std::process::{Command, Output};

fn foliate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foliate"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run foliate")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_flat_torus_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = foliate(
        &["verify", "--scenario", "flat_t2.json", "--signature", "riemannian", "--no-timestamp"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("flat_t2_riemannian_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v.get("timestamp").is_none());
    for c in v["checks"].as_array().unwrap() {
        for key in ["check_id", "paper_ref", "residual", "threshold", "passed", "runtime_ms", "notes"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn spectrum_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = foliate(&["spectrum", "--scenario", "warped.json", "--eigs", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("warped_circle_spectrum.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,re,im,magnitude");
    assert_eq!(lines.len(), 11);
    let mags: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(mags.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn lorentzian_spectrum_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = foliate(
        &["spectrum", "--scenario", "flat_t2_lorentzian", "--eigs", "4", "--format", "json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("flat_t2_lorentzian_spectrum.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v.as_array().map(|a| a.len()), Some(4));
}

#[test]
fn malformed_expression_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
  "name": "bad",
  "n": 1,
  "L": 8,
  "circumference": ["2*pi"],
  "spin_structure": ["antiperiodic"],
  "metric": {"kind": "constant_diagonal", "scale": ["1 + 0.3*sin(t"]},
  "lapse": {"kind": "time_only", "expr": "1"},
  "time": {"kind": "circle", "T_per": "2*pi", "Nt": 8, "spin_structure": "antiperiodic"},
  "signature": "riemannian"
}"#,
    )
    .unwrap();
    let o = foliate(&["verify", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("metric.scale[0]"), "{}", stderr(&o));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["verify", "--scenario", "no_such_scenario"],
        &["verify", "--scenario", "flat_t2", "--checks", "bogus"],
        &["spectrum", "--scenario", "flat_t2", "--resolution", "x,4"],
        &["clifford", "--dim", "2"],
    ];
    for args in cases {
        let o = foliate(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn broken_lapse_bounds_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lapse.json");
    std::fs::write(
        &path,
        r#"{
  "name": "tight_lapse",
  "n": 1,
  "L": 8,
  "circumference": ["2*pi"],
  "spin_structure": ["antiperiodic"],
  "metric": {"kind": "constant_diagonal", "scale": ["1"]},
  "lapse": {"kind": "time_only", "expr": "2 + sin(t)", "bounds": [1.5, 3]},
  "time": {"kind": "circle", "T_per": "2*pi", "Nt": 8, "spin_structure": "antiperiodic"},
  "signature": "riemannian",
  "resolutions": [[8, 8]]
}"#,
    )
    .unwrap();
    let o = foliate(&["verify", "--scenario", path.to_str().unwrap(), "--no-timestamp"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("tight_lapse_report.json")).unwrap();
    assert!(text.contains("\"skipped\""));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "verify",
        "--scenario",
        "exponential",
        "--no-timestamp",
        "--checks",
        "curvature.identity,family.axioms,assembler.oddness",
    ];
    for dir in [&a, &b] {
        let o = foliate(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = foliate(&["spectrum", "--scenario", "warped", "--eigs", "6"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["exponential_report.json", "warped_circle_spectrum.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn family_bundle_round_trips_through_assemble() {
    let dir = tempfile::tempdir().unwrap();
    let o = foliate(&["family", "--scenario", "warped"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle = dir.path().join("warped_circle_family.json");
    let o = foliate(&["assemble", "--family", bundle.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 2);
    let text = std::fs::read_to_string(dir.path().join("warped_circle_family_d_plus.txt")).unwrap();
    assert!(text.starts_with("# 512 512 "));
}

#[test]
fn clifford_and_oracle_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = foliate(&["clifford", "--dim", "3", "--signature", "lorentzian"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("clifford_n3_lorentzian.json").exists());
    let o = foliate(&["oracle", "--scenario", "exponential"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("exponential_curvature.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["max_discrepancy"].as_f64().unwrap() < 1e-8);
}

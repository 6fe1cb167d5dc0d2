use std::process::{Command, Output};

use serde_json::Value;

fn entdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = entdist(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn fef_two_qubit_example() {
    let v = json(&["fef", "--dim", "2", "--spectrum", "0.8,0.2"]);
    assert!((num(&v, "fef") - 0.9).abs() < 1e-12);
    assert!((num(&v, "negativity") - 0.4).abs() < 1e-12);
    assert_eq!(v["passed"], true);
}

#[test]
fn fef_endpoints() {
    let v = json(&["fef", "--dim", "3", "--spectrum", "uniform"]);
    assert!((num(&v, "fef") - 1.0).abs() < 1e-12);
    let v = json(&["fef", "--dim", "2", "--spectrum", "1,0"]);
    assert!((num(&v, "fef") - 0.5).abs() < 1e-12);
}

#[test]
fn amplitudes_flag() {
    let v = json(&[
        "fef",
        "--dim",
        "2",
        "--spectrum",
        "0.6,0.8",
        "--amplitudes",
        "--normalize",
    ]);
    assert!((num(&v, "fef") - (1.0 + 2.0 * 0.48) / 2.0).abs() < 1e-12);
}

#[test]
fn protocol_matches_fef() {
    let v = json(&[
        "protocol",
        "--dim",
        "2",
        "--spectrum",
        "0.8,0.2",
        "--shots",
        "2000",
    ]);
    assert!((num(&v, "success") - 0.9).abs() < 1e-10);
    assert!((num(&v, "simulated_success") - 0.9).abs() < 1e-10);
    assert_eq!(v["sampling"]["shots"], 2000);
}

#[test]
fn certificate_qutrit() {
    let v = json(&["certificate", "--dim", "3", "--spectrum", "0.5,0.3,0.2"]);
    assert_eq!(v["feasibility"]["passed"], true);
    assert!((num(&v, "trace_value") - num(&v, "fef")).abs() < 1e-12);
}

#[test]
fn sandwich_examples() {
    let v = json(&["sandwich", "--dim", "2", "--spectrum", "0.8,0.2"]);
    assert_eq!(v["passed"], true);
    assert!((v["sdp"]["value"].as_f64().unwrap() - 0.9).abs() < 1e-3);

    let v = json(&[
        "sandwich",
        "--dim",
        "2",
        "--spectrum",
        "0.8,0.2",
        "--n-states",
        "3",
    ]);
    assert_eq!(v["passed"], true);
    assert!((num(&v, "lower") - 2.8 / 3.0).abs() < 1e-10);
    let sdp = v["sdp"]["value"].as_f64().unwrap();
    assert!(sdp >= num(&v, "lower") - 1e-3 && sdp <= 1.0 + 1e-3);
}

#[test]
fn bounds_reports_both_strategies() {
    let v = json(&[
        "bounds",
        "--dim",
        "3",
        "--spectrum",
        "random",
        "--n-states",
        "5",
        "--strategy",
        "projector",
    ]);
    assert_eq!(v["selected"]["strategy"], "projector");
    assert_eq!(v["alternative"]["strategy"], "completion");
    assert_eq!(v["certificate_feasible"], true);
}

#[test]
fn sandwich_qutrit_random_spectrum() {
    let v = json(&[
        "sandwich",
        "--dim",
        "3",
        "--spectrum",
        "random",
        "--seed",
        "3",
    ]);
    assert_eq!(v["passed"], true, "{v}");
    assert_eq!(v["agree"], true);
}

#[test]
fn verify_qubit_and_qutrit() {
    for (d, budget) in [("2", 5), ("3", 60)] {
        let start = std::time::Instant::now();
        let v = json(&["verify", "--dim", d]);
        assert_eq!(v["passed"], true, "{v}");
        assert!(start.elapsed().as_secs() < budget);
    }
}

#[test]
fn json_is_reproducible() {
    let args = ["sdp", "--dim", "2", "--spectrum", "random", "--seed", "11"];
    let a = entdist(&args);
    let b = entdist(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn basis_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weyl3.json");
    let p = path.to_str().unwrap();
    json(&["basis", "--dim", "3", "--export", p]);
    let v = json(&["certificate", "--basis-file", p, "--spectrum", "product"]);
    assert_eq!(v["basis"], p);
    assert!((num(&v, "trace_value") - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn corrupted_basis_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dim": 2, "unitaries": [[[1, 0]"#).unwrap();
    let out = entdist(&["basis", "--basis-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Well-formed JSON whose matrices are not orthogonal.
    let one = "[[1,0],[0,0],[0,0],[1,0]]";
    std::fs::write(
        &path,
        format!(r#"{{"dim": 2, "unitaries": [{one}, {one}, {one}, {one}]}}"#),
    )
    .unwrap();
    let out = entdist(&["basis", "--basis-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(
        entdist(&["fef", "--dim", "2", "--spectrum", "0.7,0.7"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(entdist(&["fef", "--dim", "2"]).status.code(), Some(2));
    assert_eq!(
        entdist(&[
            "protocol",
            "--dim",
            "2",
            "--spectrum",
            "uniform",
            "--n-states",
            "3"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        entdist(&[
            "bounds",
            "--dim",
            "2",
            "--spectrum",
            "uniform",
            "--n-states",
            "9"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = entdist(&[
        "fef",
        "--dim",
        "2",
        "--sweep",
        "5",
        "--csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "weights,negativity,fef,protocol,certificate");
    assert_eq!(lines.len(), 6);
}

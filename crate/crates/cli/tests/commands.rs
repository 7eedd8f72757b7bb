use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwpotts")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cwpotts-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn landmarks_of_the_sextic_case() {
    let v = json(&["landmarks", "--p", "4", "--q", "2"]);
    assert!((v["beta_c"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-8);
    assert!((v["beta_tilde"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-8);
    assert!(v["h_tilde"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(v["type"], "II");
}

#[test]
fn figure_point_snaps_to_type_one() {
    let v = json(&["classify", "--p", "4", "--q", "3", "--beta", "0.778", "--h", "0.485", "--snap", "0.002"]);
    assert_eq!(v["tag"], "SpecialTypeI");
    assert_eq!(v["snapped"]["target"], "SpecialPoint");
    let plain = json(&["classify", "--p", "4", "--q", "3", "--beta", "0.616", "--h", "0.67"]);
    assert_eq!(plain["tag"], "Regular");
    assert!(plain["snapped"].is_null());
}

#[test]
fn independent_sites_have_uniform_mean() {
    let csv = stdout(&["exact", "--p", "3", "--q", "4", "--beta", "0", "--h", "0", "--N", "15"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("quantity,coordinate,count,value"));
    let u1 = csv.lines().find(|l| l.starts_with("u1,")).unwrap();
    let value: f64 = u1.rsplit(',').next().unwrap().parse().unwrap();
    assert!((value - 0.25).abs() < 1e-15);
    let marginal_mass: f64 = csv
        .lines()
        .filter(|l| l.starts_with("marginal,1,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((marginal_mass - 1.0).abs() < 1e-13);
}

#[test]
fn precondition_violations_exit_with_two() {
    assert_eq!(run(&["classify", "--p", "1", "--q", "3", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(run(&["landmarks", "--p", "4"]).status.code(), Some(2));
    let bad_data = ["estimate", "--p", "2", "--q", "3", "--beta", "0.5", "--axis", "field", "--N", "10", "--data", "1,0,0"];
    assert_eq!(run(&bad_data).status.code(), Some(2));
    assert_eq!(run(&["landmarks", "--p", "4", "--q", "2", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = |path: &str| {
        vec![
            "simulate", "--p", "4", "--q", "3", "--beta", "0.616", "--h", "0.67", "--N", "200", "--samples", "500",
            "--seed", "12", "--out", path,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let (a, b) = (scratch_path("a.csv"), scratch_path("b.csv"));
    for p in [&a, &b] {
        let list = args(p.to_str().unwrap());
        let refs: Vec<&str> = list.iter().map(String::as_str).collect();
        assert!(run(&refs).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let gibbs = ["simulate", "--p", "3", "--q", "2", "--beta", "0.5", "--N", "30", "--samples", "50", "--sampler", "gibbs", "--seed", "4"];
    assert_eq!(stdout(&gibbs), stdout(&gibbs));
}

#[test]
fn json_outputs_round_trip() {
    let commands: Vec<Vec<&str>> = vec![
        vec!["landmarks", "--p", "7", "--q", "5"],
        vec!["classify", "--p", "2", "--q", "3", "--beta", "3", "--h", "0"],
        vec!["exact", "--p", "2", "--q", "2", "--beta", "0.5", "--h", "0.1", "--N", "20", "--format", "json"],
        vec!["estimate", "--p", "4", "--q", "3", "--beta", "0.616", "--h", "0.67", "--axis", "coupling", "--N", "300", "--simulate", "--seed", "2"],
        vec!["curve", "--p", "4", "--q", "3", "--samples", "5", "--format", "json"],
    ];
    for args in commands {
        let text = stdout(&args);
        let value: Value = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
        assert_eq!(again, text, "{args:?}");
    }
}

#[test]
fn estimate_schema() {
    let v = json(&["estimate", "--p", "4", "--q", "3", "--beta", "0.616", "--h", "0.67", "--axis", "field", "--N", "1000", "--data", "0.68,0.17,0.15"]);
    for key in ["estimate", "bracket", "iterations", "converged", "boundary_flag", "ci"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    for key in ["lower", "upper", "appended", "method", "level"] {
        assert!(!v["ci"][key].is_null(), "missing ci.{key}");
    }
    let (lo, hi) = (v["ci"]["lower"].as_f64().unwrap(), v["ci"]["upper"].as_f64().unwrap());
    let est = v["estimate"].as_f64().unwrap();
    assert!(lo < est && est < hi);
}

#[test]
fn two_step_interval_on_the_curve() {
    let curve = json(&["curve", "--p", "4", "--q", "3", "--samples", "2", "--format", "json"]);
    let beta = curve["curve"][0]["beta"].as_f64().unwrap().to_string();
    let v = json(&["ci", "--p", "4", "--q", "3", "--beta", &beta, "--h", "0.5", "--axis", "field", "--N", "800", "--simulate", "--seed", "1"]);
    assert_eq!(v["ci"]["method"], "two_step");
    assert!(!v["slice_test"].is_null());
    assert!(v["slice_test"]["null_value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn limit_check_reports_a_distance() {
    let v = json(&["limit-check", "--p", "4", "--q", "3", "--beta", "0.616", "--h", "0.67", "--N", "500", "--samples", "5000", "--seed", "3"]);
    assert_eq!(v["class"], "Regular");
    assert!(v["ks_distance"].as_f64().unwrap() < 0.05);
    assert_eq!(v["pass"], true);
    assert_eq!(v["law"]["kind"], "Normal");
}

#[test]
fn phase_diagram_csv_and_landmarks() {
    let landmarks = scratch_path("landmarks.json");
    let csv = stdout(&[
        "phase-diagram", "--p", "4", "--q", "3", "--resolution", "6", "--beta-range", "0.5,1.5", "--h-range", "0,0.8",
        "--landmarks-out", landmarks.to_str().unwrap(),
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "beta,h,tag");
    assert_eq!(lines.len(), 1 + 36);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(landmarks).unwrap()).unwrap();
    assert!((v["beta_c"].as_f64().unwrap() - 1.1114120105312).abs() < 1e-9);
}

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localknn"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &[
    "simulate", "--spec", "setting1", "--dim", "1", "--n", "60", "--m", "100", "--test-size", "100",
    "--reps", "4", "--bayes-mc", "5000", "--seed", "9",
];

#[test]
fn simulate_twice_gives_identical_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let mut args = SMALL.to_vec();
        args.extend(["--out", path.to_str().unwrap()]);
        assert!(run(&args).status.success());
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("spec,d,n,m,test_size,reps,method,mean_risk,se,bayes_risk,regret_ratio,ratio_se,seed\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn serial_flag_does_not_change_output() {
    let parallel = run(SMALL);
    let mut args = SMALL.to_vec();
    args.push("--serial");
    let serial = run(&args);
    assert!(parallel.status.success() && serial.status.success());
    assert_eq!(parallel.stdout, serial.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"spec":"setting2","dim":2,"n":50,"m":80,"test_size":80,"reps":3,"methods":["knn"],"bayes_draws":2000}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--reps", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..7], &["setting2", "2", "50", "80", "80", "2", "knn"]);
}

#[test]
fn json_output_parses() {
    let mut args = SMALL.to_vec();
    args.extend(["--format", "json", "--methods", "knn,ss"]);
    let out = run(&args);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["methods"].as_array().unwrap().len(), 2);
}

#[test]
fn constants_report_closed_forms() {
    let out = run(&["constants", "--spec", "example1", "--dim", "2", "--B", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["b1"].as_f64().unwrap() - 0.1875).abs() < 1e-6);
    assert!((v["b2"].as_f64().unwrap() - 3.0).abs() < 1e-5);
    assert!(v["b3"].as_f64().is_some());
}

#[test]
fn bayes_risk_reports_estimate_and_se() {
    let out = run(&["bayes-risk", "--spec", "setting1", "--dim", "1", "--mc", "20000", "--seed", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let est = v["estimate"].as_f64().unwrap();
    assert!((est - 0.2267).abs() < 4.0 * v["se"].as_f64().unwrap());
}

#[test]
fn rate_and_kde_check_run() {
    let out = run(&[
        "rate", "--spec", "setting1", "--dim", "1", "--method", "oracle", "--n-grid", "40,80,160",
        "--reps", "2", "--m", "50", "--test-size", "50", "--bayes-mc", "2000", "--fixed-B", "1.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    let out = run(&["kde-check", "--spec", "setting1", "--dim", "1", "--m", "500"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["integral"].as_f64().unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["simulate", "--spec", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--reps", "0"]).status.code(), Some(1));
    assert_eq!(run(&["constants", "--spec", "setting1"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let blocked = dir.path().join("missing-dir").join("out.csv");
    let mut args = SMALL.to_vec();
    args.extend(["--out", blocked.to_str().unwrap()]);
    assert_eq!(run(&args).status.code(), Some(2));
}

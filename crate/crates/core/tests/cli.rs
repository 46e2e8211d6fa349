use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dqm(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqm"))
        .args(args)
        .env("DQM_OUT_DIR", out_dir)
        .output()
        .expect("run dqm")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn version_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dqm(tmp.path(), &["--version"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("dqm {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn planck_prints_csv_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dqm(tmp.path(), &["planck", "--lengths", "1,8,64"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "L,m_star,dL_qm,dL_gr,dL_min,exponent_fit");
    assert_eq!(lines.len(), 4);
    let row: Vec<f64> = lines[3].split(',').map(|c| c.parse().unwrap()).collect();
    // L = 64: m* = 16^(1/3), dL_min = 3·16^(1/3)
    assert!((row[4] - 3.0 * 16f64.cbrt()).abs() < 1e-9);
    assert!((row[5] - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn run_writes_under_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": "collapse", "seed": 2, "state": {"delta_e": 0.1}, "schedule": {"trials": 200}}"#);
    let out = dqm(tmp.path(), &["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dirs: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].file_name().unwrap().to_string_lossy().starts_with("collapse-"));
    let trials = fs::read_to_string(dirs[0].join("trials.csv")).unwrap();
    assert_eq!(trials.lines().nth(1).unwrap(), "trial,steps,outcome");
    assert_eq!(trials.lines().count(), 202);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["tau_c"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"experiment": "double_slit", "seed": 1, "state": {"slitt_width": 2}}"#);
    let out = dqm(tmp.path(), &["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("state.slitt_width: unknown key"));

    let wraps = write(
        tmp.path(),
        "wrap.json",
        r#"{"experiment": "double_slit", "seed": 1, "grid": {"x_min": -40, "x_max": 40, "n_points": 512},
            "state": {"slit_separation": 8}, "schedule": {"screen_time": 100}}"#,
    );
    let out = dqm(tmp.path(), &["run", &wraps]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain error"));

    let out = dqm(tmp.path(), &["collapse", "--delta-e", "0.001", "--seed", "1", "--trials", "100", "--max-steps", "10"]);
    assert_eq!(out.status.code(), Some(4));

    let out = dqm(tmp.path(), &["collapse", "--delta-e", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn protect_and_sweep_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dqm(tmp.path(), &["protect", "--regions", "4", "-T", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["max_rel_error_a"].as_f64().unwrap() < 0.01);

    let sweep = write(
        tmp.path(),
        "s.json",
        r#"{"experiment": "collapse", "seed": 3, "schedule": {"trials": 100},
            "sweep": {"state.rho0": [0.25, 0.75]}}"#,
    );
    let out = dqm(tmp.path(), &["sweep", &sweep]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["points"], 2);
}

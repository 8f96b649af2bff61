//! End-to-end runs of the `impact` binary.

use std::path::Path;
use std::process::{Command, Output};

fn impact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impact")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn empty_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.json", "");
    let out = impact(&["modes", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("model.type required"), "{}", stderr(&out));
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"model":{"type":"string","colour":1}}"#);
    let out = impact(&["modes", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_with_validation_code() {
    assert_eq!(impact(&["explode", "--config", "x.json"]).status.code(), Some(2));
    assert_eq!(impact(&["modes"]).status.code(), Some(2));
}

#[test]
fn singular_model_simulation_exits_3_without_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eb.json", r#"{"model":{"type":"euler-bernoulli"}}"#);
    let out_dir = dir.path().join("out");
    let out = impact(&["simulate", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("singular model"));
    assert!(!out_dir.join("trajectory.csv").exists());
    assert!(!out_dir.join("events.json").exists());
}

#[test]
fn single_mode_kernel_is_identically_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.json",
        r#"{"model":{"type":"string","size":1},"forcing":null,"run":{"eps":1e-3,"t_end":0.05}}"#,
    );
    let out = impact(&["kernel", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,L1,L2"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(&cols[1..], &["0", "0"], "{row}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("kernel.json")).unwrap()).unwrap();
    assert_ne!(summary["verdict"], "regular");
    assert_eq!(summary["L_plus"], serde_json::json!([0.0, 0.0]));
    assert_eq!(summary["jumps"].as_array().unwrap().len(), 0);
}

#[test]
fn kernel_json_has_required_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#"{"model":{"type":"string","size":16,"damping":0},"run":{"eps":1e-3,"t_end":3}}"#);
    let out = impact(&["kernel", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("kernel.json")).unwrap()).unwrap();
    for key in ["L_plus", "L_infty", "verdict", "jumps"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let jump = &v["jumps"][0];
    assert_eq!(jump["tau"], 2.0);
    assert!(jump.get("tau").is_some() && jump.get("dL1").is_some() && jump.get("dL2").is_some());
}

#[test]
fn overrides_and_out_dir_are_honoured_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tm.json", r#"{"model":{"type":"timoshenko"}}"#);
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = impact(&[
            "simulate",
            "--config",
            &cfg,
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--override",
            "run.t_end=0.5",
            "--override",
            "run.eps=1e-4",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        (
            std::fs::read(out_dir.join("trajectory.csv")).unwrap(),
            std::fs::read(out_dir.join("events.json")).unwrap(),
        )
    };
    let (traj_a, events_a) = run("a");
    let (traj_b, events_b) = run("b");
    assert_eq!(traj_a, traj_b);
    assert_eq!(events_a, events_b);
    let text = String::from_utf8(traj_a).unwrap();
    assert!(text.starts_with("t,y1,y2,fc,in_contact\n"));
    let last = text.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 0.5).abs() < 1e-9, "{last}");
    let events: serde_json::Value = serde_json::from_slice(&events_a).unwrap();
    let first = &events[0];
    assert_eq!(first["kind"], "onset");
    assert!(first.get("fc_before").is_some() && first.get("fc_after").is_some() && first.get("t").is_some());
}

#[test]
fn asymptotics_outputs_json_and_csv_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#"{"model":{"type":"string","damping":0},"run":{"asymptotics":{"points":3}}}"#);
    let out = impact(&["asymptotics", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("asymptotics.json")).unwrap()).unwrap();
    for key in ["delta_t", "fc", "exponent_fit", "N_measured", "N_estimated", "reversal_defect"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("asymptotics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn timoshenko_asymptotics_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tm.json", r#"{"model":{"type":"timoshenko"}}"#);
    let out = impact(&["asymptotics", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn modes_and_regularity_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tm.json", r#"{"model":{"type":"timoshenko"}}"#);
    for sub in ["modes", "regularity"] {
        let out = impact(&[sub, "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", stderr(&out));
    }
    let reg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("regularity.json")).unwrap()).unwrap();
    assert_eq!(reg["verdict"], "regular");
    let modes = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert!(modes.starts_with("k,omega,damping,tip_value\n"));
}

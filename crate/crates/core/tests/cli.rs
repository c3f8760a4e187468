use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use notchrod::metrics::rmse_paired;
use notchrod::statics::io::read_positions_csv;
use notchrod::{ReferenceConfig, RobotGeometry, SectionProperties};

fn notchrod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_notchrod")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .parse()
        .unwrap()
}

fn positions(path: &Path) -> Vec<nalgebra::Vector3<f64>> {
    read_positions_csv(fs::File::open(path).unwrap(), &path.display().to_string()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn section_reports_properties() {
    let o = notchrod(&["section", "--preset", "prototype1"]);
    assert!(o.status.success());
    assert!((csv_value(&stdout(&o), "r_na") - 0.4652).abs() < 1e-4);
    let o = notchrod(&["section", "--preset", "prototype3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected = 63.27f64.hypot(2.0 * std::f64::consts::PI * 0.8129);
    assert!((v["properties"]["l_na"].as_f64().unwrap() - expected).abs() < 1e-3);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = RobotGeometry::preset("prototype1").unwrap();
    g.psi = 0.0;
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, serde_json::json!({ "geometry": g }).to_string()).unwrap();
    let o = notchrod(&["section", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("psi"));
    assert_eq!(notchrod(&["section", "--preset", "prototype7"]).status.code(), Some(2));
    assert_eq!(notchrod(&["solve", "--tau", "-1"]).status.code(), Some(2));
    assert_eq!(notchrod(&["solve", "--eta", "0"]).status.code(), Some(2));
}

#[test]
fn solve_zero_tension_emits_reference_helix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = notchrod(&["solve", "--tau", "0", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pts = positions(&dir.path().join("solution.csv"));
    let g = RobotGeometry::preset("prototype1").unwrap();
    let r = ReferenceConfig::from_geometry(&g).unwrap();
    let n = pts.len() - 1;
    let expected: Vec<_> = (0..=n).map(|k| r.pose(r.l_na * k as f64 / n as f64).unwrap().0).collect();
    assert!(rmse_paired(&pts, &expected).unwrap() < 1e-6);
    assert_eq!(json(&dir.path().join("diagnostics.json"))["converged"], true);
}

#[test]
fn solve_gravity_lowers_tip_x() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut tips = Vec::new();
    for (dir, gravity) in dirs.iter().zip(["off", "on"]) {
        let o = notchrod(&["solve", "--tau", "0.7", "--gravity", gravity, "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success());
        tips.push(json(&dir.path().join("diagnostics.json"))["tip"][0].as_f64().unwrap());
    }
    assert!(tips[1] < tips[0], "{tips:?}");
}

#[test]
fn solve_half_exposure_arc_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = notchrod(&["solve", "--tau", "0.45", "--eta", "0.5", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let pts = positions(&dir.path().join("solution.csv"));
    let arc: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let l_na = SectionProperties::new(&RobotGeometry::preset("prototype1").unwrap()).unwrap().l_na;
    assert!((arc / (0.5 * l_na) - 1.0).abs() < 1e-3, "{arc}");
}

#[test]
fn solve_failure_still_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let mut g = RobotGeometry::preset("prototype1").unwrap();
    // a very soft tube under high tension is beyond the solver's reach
    g.youngs_modulus = 1.0;
    g.shear_modulus = 0.4;
    fs::write(&cfg, serde_json::json!({ "geometry": g, "tau": 50.0, "gravity": true }).to_string()).unwrap();
    let out = dir.path().join("out");
    let o = notchrod(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let diag = json(&out.join("diagnostics.json"));
    assert_eq!(o.status.code(), Some(1), "{diag}");
    assert_eq!(diag["converged"], false);
    assert!(diag["error"].is_string());
    assert!(!out.join("solution.csv").exists());
}

#[test]
fn metrics_of_self_and_shifted_copy() {
    let dir = tempfile::tempdir().unwrap();
    let o = notchrod(&["solve", "--tau", "0.7", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let a = dir.path().join("solution.csv");
    let pts = positions(&a);
    let shifted = dir.path().join("shifted.csv");
    let mut text = String::from("px,py,pz\n");
    for p in &pts {
        text.push_str(&format!("{},{},{}\n", p.x + 0.3, p.y - 0.4, p.z));
    }
    fs::write(&shifted, text).unwrap();

    let o = notchrod(&["metrics", a.to_str().unwrap(), a.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rmse"], 0.0);
    assert_eq!(v["med"], 0.0);
    assert_eq!(v["nearest_rmse"], 0.0);

    let o = notchrod(&["metrics", a.to_str().unwrap(), shifted.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["rmse"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["med"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "px,py,pz\n1,2,3\n4,oops,6\n").unwrap();
    let o = notchrod(&["metrics", a.to_str().unwrap(), broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ftl_writes_plan_fit_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = notchrod(&[
        "ftl", "--tau-des", "0.45", "--delta-eta", "0.1", "--format", "json", "--fit", "--replay-polynomial",
        "0,0,0.45", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = json(&dir.path().join("plan.json"));
    assert_eq!(plan["eta_grid"].as_array().unwrap().len(), 10);
    assert_eq!(plan["complete"], true);
    assert_eq!(json(&dir.path().join("fit.json"))["coefficients"].as_array().unwrap().len(), 3);
    assert!(json(&dir.path().join("replay.json"))["rmse"].as_f64().unwrap() < 1e-6);
    assert!(dir.path().join("reference.csv").exists());
    assert!(dir.path().join("shapes/eta_1.000.csv").exists());
    assert!(stdout(&o).contains("replay RMSE"));
}

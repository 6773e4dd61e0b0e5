use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isac_core::scenario::Scenario;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac"))
}

fn tmp(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("isac-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&p);
    p
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn write_scenario(dir: &Path, s: &Scenario) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let p = dir.join("scenario.toml");
    std::fs::write(&p, s.to_toml()).unwrap();
    p
}

#[test]
fn design_writes_full_artifact() {
    let out = tmp("design");
    let o = run(&["design", "--method", "sdr"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(out.join("design.json"));
    let gamma = d["gamma_db"].as_f64().unwrap();
    for s in d["sinrs_db"].as_array().unwrap() {
        assert!(s.as_f64().unwrap() >= gamma - 1e-5);
    }
    assert_eq!(d["constraints_satisfied"], Value::Bool(true));
    assert_eq!(d["beamformers"]["re"].as_array().unwrap().len(), 16);
    let (header, rows) = csv_rows(out.join("beampattern.csv"));
    assert_eq!(header, ["angle_deg", "gain"]);
    assert_eq!(rows.len(), 181);
    assert_eq!(rows[0][0], "-90.0");
    assert_eq!(rows[180][0], "90.0");
    let m = json(out.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["files"].as_array().unwrap().len(), 3);
    assert!(out.join("scenario.toml").exists());
}

#[test]
fn zf_design_reports_direction_set() {
    let out = tmp("zf");
    assert_eq!(run(&["design", "--method", "zf"], &out).status.code(), Some(0));
    let d = json(out.join("design.json"));
    assert_eq!(d["details"]["method"], "zf");
    assert_eq!(d["details"]["direction_set"].as_array().unwrap().len(), 4);
}

#[test]
fn infeasible_design_exits_two() {
    let dir = tmp("infeasible");
    let mut s = Scenario::default();
    s.constraints.gamma_db = 60.0;
    let path = write_scenario(&dir, &s);
    let out = dir.join("run");
    let o = run(&["design", "--scenario", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let d = json(out.join("design.json"));
    assert_eq!(d["status"], "infeasible");
    assert!(d["error"].as_str().unwrap().contains("sinr"));
    assert_eq!(json(out.join("manifest.json"))["status"], "infeasible");
}

#[test]
fn bad_inputs_exit_four() {
    let dir = tmp("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[array]\nn_t = 4\n").unwrap();
    for args in [
        vec!["validate", "--scenario", bad.to_str().unwrap()],
        vec!["validate", "--scenario", "/nonexistent/scenario.toml"],
        vec!["design", "--method", "nope"],
        vec!["crb-sweep", "--sweep", "bogus=1:2:1"],
        vec!["crb-sweep", "--sweep", "d_o=1:2"],
        vec!["compare", "--sweep", "k=1:2:1"],
        vec!["frobnicate"],
    ] {
        let o = bin().args(&args).arg("--out").arg(dir.join("o")).output().unwrap();
        assert_eq!(o.status.code(), Some(4), "{args:?}");
    }
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn validate_prints_summary_and_scenario() {
    let o = bin().arg("validate").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], Value::Bool(true));
    assert_eq!(v["units"]["p_t_w"].as_f64(), Some(1.0));
    assert_eq!(v["units"]["sigma_n2_w"].as_f64(), Some(1e-11));
    let o = bin().args(["validate", "--print"]).output().unwrap();
    let s = Scenario::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(s, Scenario::default());
}

#[test]
fn empty_sweep_has_header_only() {
    let out = tmp("empty");
    assert_eq!(run(&["crb-sweep", "--sweep", "d_o=50:20:5"], &out).status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("crb_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("index,d_o_m,status,crb_d,crb_phi,crb_varphi,crb_d_pt,crb_phi_pt,diagnostics,error"));
}

#[test]
fn range_sweep_approaches_point_target() {
    let dir = tmp("range");
    let mut s = Scenario::default();
    s.target.normalize_lengths = true;
    s.sensing.radar_snr_hold = true;
    let path = write_scenario(&dir, &s);
    let out = dir.join("run");
    let o = run(&["crb-sweep", "--scenario", path.to_str().unwrap(), "--sweep", "d_o=20:200:45"], &out);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = csv_rows(out.join("crb_sweep.csv"));
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let ratio: Vec<f64> = rows
        .iter()
        .map(|r| r[col("crb_phi")].parse::<f64>().unwrap() / r[col("crb_phi_pt")].parse::<f64>().unwrap())
        .collect();
    assert_eq!(ratio.len(), 5);
    assert!(ratio.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{ratio:?}");
    assert!((ratio[4] - 1.0).abs() < 0.1);
    for r in &rows {
        assert!(out.join(&r[col("diagnostics")]).exists());
    }
}

#[test]
fn subsection_sweep_is_smooth() {
    let out = tmp("ksweep");
    assert_eq!(run(&["crb-sweep", "--sweep", "k=4:16:1"], &out).status.code(), Some(0));
    let (h, rows) = csv_rows(out.join("crb_sweep.csv"));
    let i = h.iter().position(|c| c == "crb_phi").unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r[i].parse().unwrap()).collect();
    assert!(v.iter().all(|x| x.is_finite() && *x > 0.0));
    for w in v.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.2, "{v:?}");
    }
}

#[test]
fn failed_points_do_not_abort_the_sweep() {
    let out = tmp("partial");
    let o = run(&["crb-sweep", "--sweep", "n_c=3:6:1"], &out);
    assert_eq!(o.status.code(), Some(3));
    let (_, rows) = csv_rows(out.join("crb_sweep.csv"));
    let status: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(status, ["ok", "ok", "failed", "failed"]);
    assert!(!rows[2][9].is_empty());
    assert_eq!(json(out.join("manifest.json"))["failures"], 2);
}

#[test]
fn compare_single_point() {
    let out = tmp("compare");
    assert_eq!(run(&["compare", "--sweep", "gamma=10:10:1"], &out).status.code(), Some(0));
    let (h, rows) = csv_rows(out.join("compare.csv"));
    assert_eq!(rows.len(), 1);
    let col = |name: &str| rows[0][h.iter().position(|c| c == name).unwrap()].parse::<f64>().unwrap();
    assert!(col("zf_crb_phi") >= col("sdr_crb_phi"));
}

#[test]
fn mse_reports_bound_and_trials() {
    let out = tmp("mse");
    assert_eq!(run(&["mse", "--trials", "50", "--seed", "9"], &out).status.code(), Some(0));
    let m = json(out.join("mse.json"));
    assert_eq!(m["n_trials"], 50);
    assert_eq!(m["seed"], 9);
    assert!(m["rmse"].as_f64().unwrap() >= m["root_crb"].as_f64().unwrap());
    let (h, rows) = csv_rows(out.join("mse_trials.csv"));
    assert_eq!(h, ["trial", "phi_hat_rad", "error_rad"]);
    assert_eq!(rows.len(), 50);
}

#[test]
fn seed_changes_monte_carlo_output() {
    let a = tmp("seed-a");
    let b = tmp("seed-b");
    run(&["mse", "--trials", "20", "--method", "isotropic", "--seed", "1"], &a);
    run(&["mse", "--trials", "20", "--method", "isotropic", "--seed", "2"], &b);
    let ta = std::fs::read(a.join("mse_trials.csv")).unwrap();
    let tb = std::fs::read(b.join("mse_trials.csv")).unwrap();
    assert_ne!(ta, tb);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iohlqg::benchmark;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iohlqg")).args(args).output().unwrap()
}

fn plant_file(dir: &Path) -> PathBuf {
    let path = dir.join("plant.json");
    fs::write(&path, benchmark::PROBLEM_JSON).unwrap();
    path
}

fn json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let end = text.rfind('}').unwrap();
    serde_json::from_str(&text[..=end]).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bin(&[]).status.code(), Some(2));
    assert_eq!(bin(&["synth"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_plant_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let o = bin(&["synth", "--plant", "nope.json", "--iters", "5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert!(!out_dir.exists());
}

#[test]
fn synth_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let plant = plant_file(dir.path());
    let out_dir = dir.path().join("run");
    let o = bin(&[
        "synth", "--plant", plant.to_str().unwrap(), "--L", "3", "--alpha", "1e-4", "--iters", "200",
        "--seeds", "2", "--record-every", "50", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&o);
    assert_eq!(summary["L"], 3);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    for s in 0..2 {
        let trace = fs::read_to_string(out_dir.join(format!("trace_seed{s}.csv"))).unwrap();
        assert!(trace.starts_with("iter,J,J_eps,grad_norm,rho,hsv_1,hsv_2,hsv_3,wall_ms"));
        assert_eq!(trace.lines().count(), 1 + 5);
        let gain = iohlqg::commands::load_gain(&out_dir.join(format!("gain_seed{s}.json"))).unwrap();
        assert_eq!((gain.l, gain.nu, gain.ny), (3, 1, 2));
        iohlqg::commands::load_controller(&out_dir.join(format!("controller_seed{s}.json"))).unwrap();
    }
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn baseline_full_order_truncation_keeps_cost() {
    let dir = tempfile::tempdir().unwrap();
    let plant = plant_file(dir.path());
    let o = bin(&["baseline", "--plant", plant.to_str().unwrap(), "--order", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let s = json(&o);
    let (full, red) = (s["lqg_cost"].as_f64().unwrap(), s["reduced_cost"].as_f64().unwrap());
    assert!((full - red).abs() <= 1e-8 * full);
    assert_eq!(s["hankel_singular_values"].as_array().unwrap().len(), 3);
    for f in ["lqg_controller.json", "reduced_controller.json", "baseline.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn gradcheck_passes_on_three_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let plant = plant_file(dir.path());
    for seed in ["0", "1", "2"] {
        let o = bin(&["gradcheck", "--plant", plant.to_str().unwrap(), "--L", "3", "--seed", seed]);
        assert!(o.status.success(), "seed {seed}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(json(&o)["max_rel_error"].as_f64().unwrap() <= 1e-5);
    }
}

#[test]
fn gradcheck_rejects_destabilizing_gain() {
    let dir = tempfile::tempdir().unwrap();
    let plant = plant_file(dir.path());
    let gain = dir.path().join("gain.json");
    fs::write(&gain, r#"{"L": 3, "nu": 1, "ny": 2, "K": [[50, 50, 50, 50, 50, 50, 50, 50, 50]]}"#).unwrap();
    let o = bin(&["gradcheck", "--plant", plant.to_str().unwrap(), "--gain", gain.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_on_noiseless_plant() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(benchmark::PROBLEM_JSON).unwrap();
    doc["Vw"] = serde_json::json!([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    doc["Vv"] = serde_json::json!([[0.0, 0.0], [0.0, 0.0]]);
    let plant = dir.path().join("quiet.json");
    fs::write(&plant, doc.to_string()).unwrap();
    let o = bin(&["gradcheck", "--plant", plant.to_str().unwrap(), "--epsilon", "1e-2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bode_of_static_gain_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let ctl = dir.path().join("ctl.json");
    // xi+ = y, u = 2 xi: a pure delay with gain 2
    fs::write(&ctl, r#"{"G": [[0.0]], "H": [[1.0]], "F": [[2.0]]}"#).unwrap();
    let out = dir.path().join("bode.csv");
    let o = bin(&["bode", "--controller", ctl.to_str().unwrap(), "--points", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "omega,mag_db_1_1,phase_deg_1_1");
    for line in lines {
        let mag: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mag - 20.0 * 2f64.log10()).abs() < 1e-10);
    }

    let one = dir.path().join("one.csv");
    let o = bin(&["bode", "--controller", ctl.to_str().unwrap(), "--points", "1", "--out", one.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&one).unwrap().lines().count(), 2);
}

#[test]
fn bode_of_a_gain_file() {
    let dir = tempfile::tempdir().unwrap();
    let gain = dir.path().join("gain.json");
    fs::write(&gain, r#"{"L": 2, "nu": 1, "ny": 2, "K": [[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]]}"#).unwrap();
    let out = dir.path().join("bode.csv");
    let o = bin(&["bode", "--gain", gain.to_str().unwrap(), "--points", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let header = fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "omega,mag_db_1_1,phase_deg_1_1,mag_db_1_2,phase_deg_1_2");
}

#[test]
fn simulate_check_against_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let plant = plant_file(dir.path());
    let report = dir.path().join("sim.json");
    let traj = dir.path().join("traj.csv");
    let o = bin(&[
        "simulate", "--plant", plant.to_str().unwrap(), "--horizon", "20000", "--rollouts", "10", "--check",
        "--out", report.to_str().unwrap(), "--trajectory", traj.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    assert_eq!(r["check_passed"], true);
    assert!(r["z_score"].as_f64().unwrap() <= 3.0);
    assert!(report.exists());
    assert_eq!(fs::read_to_string(&traj).unwrap().lines().count(), 20_001);
}

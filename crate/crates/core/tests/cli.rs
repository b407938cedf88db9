//! End-to-end runs of the `secrate` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use secrate::cli::optimize_row;
use secrate::closedform::PaMode;
use secrate::config::RunConfig;
use secrate::optimizer::{maximize_rs, Algorithm, DEFAULT_STEP};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn secrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secrate"))
        .args(args)
        .env_remove("SECRATE_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(csv: &str, column: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap();
    row[i].to_string()
}

#[test]
fn eval_at_reference_theta_has_zero_passive_slope() {
    let base = std::fs::read_to_string(configs().join("verify/fig5_jea6.cfg")).unwrap();
    let cfg = scratch("fig5_ref.cfg", &format!("{base}theta = 0.2\nr_s = 1\n"));
    let out = secrate(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(field(&text, "dp_so2_dtheta").parse::<f64>().unwrap().abs() < 1e-9);
    assert!(!text.contains('\r'));
}

#[test]
fn eval_output_round_trips() {
    let cfg = scratch("rt.cfg", "n_antennas = 7\nrho_ea = 0.7\nvar_jea_db = 4.5\ntheta = 0.35\nr_s = 2.25\n");
    let first = secrate(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(first.status.success());
    let csv = scratch("rt.csv", &stdout(&first));
    let second = secrate(&["eval", "--config", csv.to_str().unwrap()]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn malformed_key_is_a_config_error() {
    let cfg = scratch("bad.cfg", "n_antennas = 5\nvar_jeaa_db = 3\n");
    let out = secrate(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("var_jeaa_db") && err.contains("line 2"), "{err}");
}

#[test]
fn tiny_delta_is_infeasible() {
    let cfg = scratch("tiny_delta.cfg", "delta = 1e-9\n");
    let out = secrate(&["optimize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert_eq!(field(&text, "feasible"), "false");
    assert_eq!(field(&text, "reason"), "PA_EXCEEDS_PMAX");
}

#[test]
fn optimize_row_matches_library() {
    let path = configs().join("verify/fig2_n6.cfg");
    let out = secrate(&["optimize", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let params = RunConfig::load(&path).unwrap().params.validate().unwrap();
    let direct = maximize_rs(&params, Algorithm::Alg1, DEFAULT_STEP, PaMode::NoiseLimited).unwrap();
    assert_eq!(stdout(&out).lines().nth(1).unwrap(), optimize_row(&direct));

    let il = secrate(&["optimize", "--config", path.to_str().unwrap(), "--pa-mode", "interference_limited"]);
    assert_ne!(field(&stdout(&il), "p_a_star"), field(&stdout(&out), "p_a_star"));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let out_file = Path::new(env!("CARGO_TARGET_TMPDIR")).join("fig2.csv");
    let path = configs().join("fig2_rate_vs_n.cfg");
    let out = secrate(&["sweep", "--config", path.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,axis_value,overlay,r_s_star,theta_star,p_a_star,feasible,reason");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("n_antennas,4,base,"));
}

#[test]
fn every_figure_config_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let cfg = RunConfig::load(&path).unwrap();
            assert!(cfg.sweep.is_some(), "{}", path.display());
        }
    }
}

#[test]
fn verify_passes_detects_corruption_and_is_deterministic() {
    let path = configs().join("verify/fig5_jea6.cfg");
    let p = path.to_str().unwrap();
    let a = secrate(&["verify", "--config", p, "--trials", "100000", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let b = secrate(&["verify", "--config", p, "--trials", "100000", "--seed", "42"]);
    assert_eq!(a.stdout, b.stdout);

    let bad = secrate(&["verify", "--config", p, "--trials", "20000", "--corrupt"]);
    assert_eq!(bad.status.code(), Some(4));

    let flag = secrate(&["verify", "--config", p, "--trials", "20000", "--seed", "7"]);
    let env = Command::new(env!("CARGO_BIN_EXE_secrate"))
        .args(["verify", "--config", p, "--trials", "20000", "--seed", "1"])
        .env("SECRATE_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let other = secrate(&["verify", "--config", p, "--trials", "20000", "--seed", "8"]);
    assert_ne!(flag.stdout, other.stdout);

    let few = secrate(&["verify", "--config", p, "--trials", "100"]);
    assert_eq!(few.status.code(), Some(2));
}

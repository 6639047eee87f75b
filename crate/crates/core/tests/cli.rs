//! End-to-end checks of the `volterra` binary.

use std::fs;
use std::process::{Command, Output};

fn volterra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volterra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn error_mode_csv_shape() {
    let o = volterra(&["error"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,error"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, e) = l.split_once(',').unwrap();
            (x.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 151);
    assert_eq!(rows[0].0, -15.0);
    assert!((rows[150].0 - 15.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.1.abs() < 5e-2));
}

#[test]
fn deterministic_mode_writes_requested_times() {
    let o = volterra(&["deterministic", "--alpha", "2", "--output-times", "0,3,6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("t,x,value\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 151);
}

#[test]
fn unknown_alpha_is_reported_with_exit_code_2() {
    let o = volterra(&["deterministic", "--alpha", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error kind="), "{err}");
    assert!(err.contains("alpha must be 1 or 2"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn inconsistent_grid_names_key() {
    let o = volterra(&["error", "--m", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key="), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("paths.csv");
    fs::write(&cfg, "# coarse run\nm = 60\nh = 0.5\nseed = 7\nI = 120\noutput_times = 0,6\n").unwrap();
    let o = volterra(&[
        "stochastic",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,t,x,deterministic,convolution,total"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2 * 61);
    assert!(body.iter().all(|l| l.starts_with("9,")));
}

#[test]
fn different_seeds_give_different_paths() {
    let a = volterra(&["stochastic", "--seed", "1", "--output-times", "6", "--source", "analytic"]);
    let b = volterra(&["stochastic", "--seed", "2", "--output-times", "6", "--source", "analytic"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn spectral_mode_rows() {
    let o = volterra(&["spectral", "--modes", "4", "--paths", "200", "--T", "1", "--I", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("k,mu_k,target_variance,sample_variance,n_paths\n"));
    assert_eq!(text.lines().count(), 5);
}

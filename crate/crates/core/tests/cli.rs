//! End-to-end tests of the `seirct` binary: exit codes, output schemas,
//! determinism, and error reporting.

use std::process::{Command, Output};

fn seirct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seirct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn rates_prints_provenance_and_schema() {
    let out = seirct(&["rates", "--mu-t", "2.0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("# seirct rates\n"));
    assert!(text.contains("p_E,p_I,p_R,theta,psi\n"));
    let data = text.lines().last().unwrap();
    let fields: Vec<f64> = data.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields.len(), 5);
    assert!((fields[0] + fields[1] + fields[2] - 1.0).abs() < 1e-6);
}

#[test]
fn check_exit_codes_split_on_the_verdict() {
    let controlled = seirct(&["check", "--alpha", "0.95", "--mu-t", "0.5"]);
    assert_eq!(controlled.status.code(), Some(0));
    assert!(stdout(&controlled).contains("controlled,1"));

    let uncontrolled = seirct(&["check", "--alpha", "0.2", "--mu-t", "4.0"]);
    assert_eq!(uncontrolled.status.code(), Some(2));
    assert!(stdout(&uncontrolled).contains("controlled,0"));
}

#[test]
fn simulate_deterministic_csv() {
    let out = seirct(&["simulate", "--t-end", "30"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("t,S_U,E_U,I_U,S_T,E_T,I_T,R\n"));
    // 31 sampled days plus headers
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 31);
}

#[test]
fn simulate_stochastic_summary() {
    let out = seirct(&[
        "--seed",
        "9",
        "simulate",
        "--stochastic",
        "--runs",
        "3",
        "--t-end",
        "20",
        "--population",
        "2000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("run,seed,outcome,attack_rate,peak_infectious_fraction,events\n"));
    assert!(text.contains("# outbreak_frequency="));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
}

#[test]
fn sweep_outputs_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[sweep]\nmu_t_range = [0.0, 2.0, 0.5]\nalpha_range = [0.0, 1.0, 0.25]\n",
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let run = seirct(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "2",
            "sweep",
        ]);
        assert!(run.status.success());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.contains("scenario_id,mu_T,alpha_min\n"));

    let grid = seirct(&["--config", cfg.to_str().unwrap(), "sweep", "--emit-grid"]);
    assert!(grid.status.success());
    assert!(stdout(&grid).contains("scenario_id,mu_T,alpha,controlled\n"));

    let curve = seirct(&["--config", cfg.to_str().unwrap(), "sweep", "--emit-curve"]);
    assert!(curve.status.success());
    assert!(stdout(&curve).contains("mu_T,p_E,p_I,p_R\n"));
}

#[test]
fn errors_are_single_line_and_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[scenario]\nr_zero = 2.0\n").unwrap();
    let out = seirct(&["--config", cfg.to_str().unwrap(), "rates"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "stderr: {err}");
    assert!(err.starts_with("error: "));

    let out = seirct(&["sweep", "--family", "fig9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_properties_and_fault_injection_fails() {
    let out = seirct(&["--seed", "5", "validate", "--draws", "300"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("property coefficients_match_determinant_route: 300/300 pass [ok]"));
    assert!(text.contains("property margin_sign_matches_spectral_verdict:"));
    assert!(text.contains("info all_eigenvalues_real:"));

    let out = seirct(&[
        "--seed",
        "5",
        "validate",
        "--draws",
        "300",
        "--inject-k0-sign-flip",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

use std::fs;
use std::process::{Command, Output};

fn wsn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsn-sim")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = wsn(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn deploy_cluster_accuracy_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let dep = dir.path().join("field.txt");
    let dep_s = dep.to_str().unwrap();
    stdout(&["deploy", "--seed", "9", "--out", dep_s]);
    let text = fs::read_to_string(&dep).unwrap();
    assert!(text.contains("seed,9"));
    assert_eq!(text.lines().filter(|l| l.starts_with("CH,")).count(), 25);
    assert_eq!(text.lines().filter(|l| l.starts_with("N,")).count(), 100);
    assert_eq!(text.lines().filter(|l| l.starts_with("T,")).count(), 25);

    let clusters = stdout(&["cluster", "--deployment", dep_s]);
    let mut lines = clusters.lines();
    assert_eq!(lines.next(), Some("head_id,member_ids"));
    let members: usize = lines
        .map(|l| l.split_once(',').unwrap().1)
        .map(|m| if m.is_empty() { 0 } else { m.split(';').count() })
        .sum();
    assert_eq!(members, 100);

    let diag = stdout(&["cluster", "--deployment", dep_s, "--diagnostics"]);
    assert_eq!(diag.lines().count(), 101);

    let acc = stdout(&["accuracy", "--deployment", dep_s]);
    assert!(acc.starts_with("# wsn-core"));
    assert!(acc.contains("log=natural"));
    assert_eq!(acc.lines().filter(|l| l.starts_with("CH")).count(), 25);

    let json = stdout(&["accuracy", "--deployment", dep_s, "--format", "json"]);
    assert!(json.contains("\"method\": \"closed_form\""));

    let mc = stdout(&["accuracy", "--deployment", dep_s, "--samples", "2000", "--workers", "2"]);
    assert!(mc.contains(",monte_carlo,"));
    assert!(mc.lines().any(|l| l.ends_with(",2000")));
}

#[test]
fn experiments_are_deterministic() {
    let a = stdout(&["experiment", "setup1", "--seed", "5"]);
    let b = stdout(&["experiment", "setup1", "--seed", "5"]);
    assert_eq!(a, b);
    assert_ne!(a, stdout(&["experiment", "setup1", "--seed", "6"]));
    assert!(a.contains("# config={"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 5\ntheta1 = 50.0\nformat = \"json\"\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let from_file = stdout(&["--config", cfg_s, "experiment", "setup1"]);
    assert!(from_file.trim_start().starts_with('{'));
    assert!(from_file.contains("\"theta1\": 50.0"));
    assert!(from_file.contains("\"seed\": 5"));

    let flagged = stdout(&["--config", cfg_s, "experiment", "setup1", "--theta1", "100", "--format", "csv"]);
    assert!(flagged.starts_with("# wsn-core"));
    assert!(flagged.contains("\"theta1\":100.0"));
    assert!(flagged.contains("\"seed\":5"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig5.csv");
    let printed = stdout(&["experiment", "fig5", "--out", out.to_str().unwrap()]);
    assert!(printed.is_empty());
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("theta1,radius,m,d_a,std_err"));
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    for args in [
        &["accuracy", "--theta1", "-3"][..],
        &["experiment", "fig8", "--noise-profile", "1,2"],
        &["cluster", "--deployment", "/nonexistent/field.txt"],
        &["experiment", "setup2", "--runs", "0"],
        &["accuracy", "--samples", "10"],
    ] {
        let out = wsn(args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("wsn-sim: error:"), "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
    }
    assert!(!wsn(&["experiment", "fig7"]).status.success());
}

#[test]
fn malformed_config_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sead = 5\n").unwrap();
    let out = wsn(&["--config", cfg.to_str().unwrap(), "experiment", "setup1"]);
    assert!(!out.status.success());
}

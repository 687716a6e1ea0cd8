use std::path::PathBuf;
use std::process::Command;

fn torctl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torctl"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn passing_scenario_exits_zero_and_writes_a_run() {
    let out = tempfile::tempdir().unwrap();
    let status = torctl()
        .args(["simulate", "--scenario"])
        .arg(scenario("minimal_simulate.json"))
        .arg("--out")
        .arg(out.path())
        .env("TORCTL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let runs: Vec<_> = std::fs::read_dir(out.path()).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let dir = runs[0].as_ref().unwrap().path();
    assert!(dir.join("report.json").exists());
    assert!(dir.join("norm.csv").exists());
}

#[test]
fn failing_criterion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("late.json");
    // The blow-up happens near t = 0.125, outside the expected window.
    std::fs::write(
        &path,
        r#"{"name": "late", "kind": "simulate", "dim": 1,
            "nonlinearity": {"poly": [0, 0, 0, -1]},
            "solver": {"cutoff": 2, "dt": 1e-5, "blowup_threshold": 1e3},
            "u0": {"dim": 1, "modes": [{"k": [0], "cos": 2.0}]},
            "horizon": 0.5, "expect_blowup_in": [0.3, 0.4]}"#,
    )
    .unwrap();
    let status = torctl()
        .args(["simulate", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_control_set_exits_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"name\": \"bad\",\n  \"kind\": \"saturate\",\n  \"dim\": 1,\n  \"control_set\": [[-1], [1]],\n  \"degree\": 3,\n  \"cutoff\": 4\n}",
    )
    .unwrap();
    let output = torctl().args(["saturate", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":5:3:") && stderr.contains("origin"), "{stderr}");
}

#[test]
fn wrong_subcommand_for_kind_is_an_error() {
    let output = torctl()
        .args(["plan", "--scenario"])
        .arg(scenario("minimal_simulate.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let output = torctl().args(["verify", "--suite", "quick"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("quick"));
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let output = torctl()
        .args(["saturate", "--scenario"])
        .arg(scenario("saturate_cross_2d.json"))
        .env("TORCTL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

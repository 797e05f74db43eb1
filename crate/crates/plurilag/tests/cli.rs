//! Command-line behaviour: exit codes, report determinism, golden output,
//! JSON reports and diagnostics.

use std::path::PathBuf;
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_plurilag")
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(exe())
        .args(args)
        .output()
        .expect("failed to spawn the binary")
}

/// The report body below the metadata header line.
fn body(output: &Output) -> String {
    let stdout = String::from_utf8_lossy(&output.stdout);
    match stdout.split_once('\n') {
        Some((_, rest)) => rest.to_owned(),
        None => String::new(),
    }
}

#[test]
fn selftest_matches_the_golden_report() {
    let output = run(&["selftest"]);
    assert!(
        output.status.success(),
        "selftest failed:\n{}",
        String::from_utf8_lossy(&output.stdout)
    );
    let golden_path = manifest_dir().join("tests/golden/selftest_body.txt");
    let golden = std::fs::read_to_string(&golden_path).expect("missing golden file");
    assert_eq!(
        body(&output),
        golden,
        "selftest body diverged from the golden report"
    );
}

#[test]
fn reports_are_deterministic() {
    let first = run(&["selftest"]);
    let second = run(&["selftest"]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.status.code(), second.status.code());
}

#[test]
fn corrupted_witness_fails_with_the_expected_residual() {
    let problem = manifest_dir().join("problems/sine_gordon_corrupted.plf");
    let output = run(&["check-symmetry", "--problem", problem.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("status: FAIL"), "report:\n{stdout}");
    assert!(stdout.contains("residual: -u_xy"), "report:\n{stdout}");
    assert!(stdout.contains("failed=1"), "report:\n{stdout}");
}

#[test]
fn bundled_problem_runs_per_command() {
    let problem = manifest_dir().join("problems/sine_gordon.plf");
    let path = problem.to_str().unwrap();

    // only the tasks of the requested type run
    let output = run(&["closure", "--problem", path]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.matches("task:").count(), 3);
    assert!(stdout.contains("summary: tasks=3 passed=3 failed=0"));

    // a single task can be picked by name
    let output = run(&["reduce", "--problem", path, "--task", "reversed-interpretation"]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.matches("task:").count(), 1);
    assert!(stdout.contains("result: 1/2*u_x^2*sin(u) + u_xx*cos(u)"));
}

#[test]
fn wave_translation_problem_passes_every_command() {
    let problem = manifest_dir().join("problems/wave_translation.plf");
    let path = problem.to_str().unwrap();
    for (command, tasks) in [
        ("check-symmetry", 1),
        ("euler", 1),
        ("conservation", 1),
        ("reduce", 1),
        ("witness-search", 2),
    ] {
        let output = run(&[command, "--problem", path]);
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(
            output.status.success(),
            "`{command}` failed:\n{stdout}"
        );
        assert!(
            stdout.contains(&format!("summary: tasks={tasks} passed={tasks} failed=0")),
            "`{command}` report:\n{stdout}"
        );
    }

    // the energy-momentum fluxes are reported in canonical form
    let output = run(&["conservation", "--problem", path]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("flux[x]: -1/2*u_x^2 - 1/2*u_y^2"));
    assert!(stdout.contains("flux[y]: u_x*u_y"));
}

#[test]
fn json_report_is_written_and_structured() {
    let dir = std::env::temp_dir().join(format!("plurilag-json-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json_path = dir.join("selftest.json");

    let output = run(&["selftest", "--json", json_path.to_str().unwrap()]);
    assert!(output.status.success());

    let text = std::fs::read_to_string(&json_path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).expect("invalid JSON report");
    assert_eq!(value["command"], "selftest");
    assert_eq!(value["failed"], 0);
    let tasks = value["tasks"].as_array().expect("tasks array");
    assert_eq!(tasks.len(), 15);
    let first = &tasks[0];
    assert_eq!(first["name"], "variational-symmetry");
    assert_eq!(first["status"], "PASS");
    assert_eq!(first["residual"], "0");
    // canonical expression strings appear in the details
    let closure = tasks
        .iter()
        .find(|t| t["name"] == "closure-full")
        .expect("closure task present");
    assert!(closure["details"]["raw[x,y,z]"]
        .as_str()
        .unwrap()
        .contains("u_z*sin(u)"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn input_errors_exit_with_code_two() {
    // unreadable file
    let output = run(&["euler", "--problem", "/nonexistent/nowhere.plf"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot read"));

    // unknown command
    let output = run(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));

    // missing --problem
    let output = run(&["euler"]);
    assert_eq!(output.status.code(), Some(2));

    // grammar error with file and line diagnostics
    let dir = std::env::temp_dir().join(format!("plurilag-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.plf");
    std::fs::write(
        &bad,
        "[context]\nindependent = x\ndependent = u\n[expr]\nL = u +\n",
    )
    .unwrap();
    let output = run(&["euler", "--problem", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bad.plf:line 5"), "stderr: {stderr}");

    // unresolved reference
    let unresolved = dir.join("unresolved.plf");
    std::fs::write(
        &unresolved,
        "[context]\nindependent = x\ndependent = u\n[task]\neuler of=missing\n",
    )
    .unwrap();
    let output = run(&["euler", "--problem", unresolved.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown expression"));

    // unknown task name under --task
    let problem = manifest_dir().join("problems/sine_gordon.plf");
    let output = run(&["euler", "--problem", problem.to_str().unwrap(), "--task", "nope"]);
    assert_eq!(output.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn help_is_available() {
    let output = run(&["--help"]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("usage: plurilag"));
}

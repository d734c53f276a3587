use std::path::Path;
use std::process::{Command, Output};

fn kcont(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcont")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.conf");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lists_presets() {
    let out = kcont(&["--list-presets"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(names.len(), 15);
    assert!(names.iter().any(|n| n == "fig3c"));
}

#[test]
fn preset_run_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = kcont(&["--preset", "fig1b", "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("pass")), "{stdout}");
    for file in ["fig1b_a0.csv", "thresholds.txt", "checks.txt"] {
        assert!(out_dir.join(file).is_file(), "{file} missing");
    }
}

#[test]
fn failed_check_exits_one() {
    // The fold for this a lies far beyond the window.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = fig2b\na_values = 0.05\nlambda_window = 0.1, 60\n");
    let out_dir = dir.path().join("out");
    let out = kcont(&["--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout).unwrap().contains("fail"));
}

#[test]
fn checks_off_skips_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = fig2b\na_values = 0.05\nlambda_window = 0.1, 60\n");
    let out_dir = dir.path().join("out");
    let out = kcont(&["--config", &cfg, "--out-dir", out_dir.to_str().unwrap(), "--checks", "off"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
}

#[test]
fn solver_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = fig2b\na_values = 0.05\namplitude = 1e3\n");
    let out_dir = dir.path().join("out");
    let out = kcont(&["--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8(out.stderr).unwrap().contains("bifurcation"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "p = 3\na_values = 0.1\ng = sine 1 3\nlambda = 4\n");
    assert_eq!(code(&kcont(&["--config", &bad])), 2);
    assert_eq!(code(&kcont(&["--preset", "nope"])), 2);
    assert_eq!(code(&kcont(&["--preset", "fig1a", "--config", &bad])), 2);
    assert_eq!(code(&kcont(&["--preset", "fig1a", "--mesh-n", "1"])), 2);
    assert_eq!(code(&kcont(&[])), 2);
    let missing = dir.path().join("missing.conf");
    assert_eq!(code(&kcont(&["--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn sample_file_paths_resolve_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=100)
        .map(|i| {
            let x = i as f64 / 100.0;
            format!("{x} {}\n", -(3.0 * std::f64::consts::PI * x).sin())
        })
        .collect();
    std::fs::write(dir.path().join("g.txt"), rows).unwrap();
    let cfg = write_config(dir.path(), "preset = fig1a\ng = file g.txt\n");
    let out_dir = dir.path().join("out");
    let out = kcont(&["--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

//! Exit codes and output files of the `hopsim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn hopsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopsim")).args(args).current_dir(cwd).output().unwrap()
}

#[test]
fn nominal_fly_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopsim(&["fly", "--profile", "combined", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("out");
    for f in ["flight_telemetry.csv", "flight_report.json", "flight_report.txt"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
}

#[test]
fn hard_landing_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), "[vehicle]\ntouchdown_speed_limit = 0.01\n").unwrap();
    let o = hopsim(&["fly", "--config", "s.toml", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_key_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), "[profile]\ncruise_altitud = 50.0\n").unwrap();
    let o = hopsim(&["fly", "--config", "s.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cruise_altitud"));
}

#[test]
fn missing_config_and_bad_profile_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hopsim(&["fly", "--config", "absent.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(hopsim(&["fly", "--profile", "sideways"], dir.path()).status.code(), Some(2));
}

#[test]
fn budget_with_defaults_is_nominal() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopsim(&["budget", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_dir(dir.path().join("out")).unwrap().count() >= 2);
}

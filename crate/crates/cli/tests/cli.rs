use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn exotendon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exotendon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn low_peak_force_stalls_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = exotendon(&["simulate", "--peak-force", "10"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read(dir.path(), "summary.txt");
    assert!(summary.contains("# stall_time_s=0.35\n"), "{summary}");
    assert!(summary.contains("check actuation_stall_semantics pass"));
    let csv = read(dir.path(), "actuation.csv");
    assert!(csv.lines().any(|l| l.starts_with("t_s,")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["experiment", "--seed", "7", "--noise-sigma", "0.5", "--tension-steps", "40"];
    assert!(exotendon(&args, a.path()).status.success());
    assert!(exotendon(&args, b.path()).status.success());
    for name in ["experiment.csv", "summary.txt"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let c = tempfile::tempdir().unwrap();
    let mut other = args;
    other[2] = "8";
    assert!(exotendon(&other, c.path()).status.success());
    assert_ne!(read(a.path(), "experiment.csv"), read(c.path(), "experiment.csv"));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(&cfg, "[design] variant=A x1=14 x2=16\n[study] theta_step=10\n").unwrap();
    let out = exotendon(
        &["moment-arm", "--config", cfg.to_str().unwrap(), "--x2", "22"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "moment_arm.csv");
    assert!(csv.contains("# design=A(14,22)\n"), "{csv}");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 10);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(&bad, "[study]\nfoo=1\n").unwrap();
    let out = exotendon(&["compare", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = exotendon(&["sweep-a", "--x1", "-3"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.ini");
    let out = exotendon(&["compare", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(4));

    let single = dir.path().join("single.ini");
    fs::write(&single, "[study] x1_grid=17\n").unwrap();
    let out = exotendon(&["sweep-a", "--config", single.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(read(dir.path(), "summary.txt").contains("FAIL"));
}

#[test]
fn force_curves_for_three_designs_pass_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = exotendon(
        &["force-curve", "--design", "baseline", "--design", "A", "--design", "B"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["force_curve_baseline.csv", "force_curve_A.csv", "force_curve_B.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(read(dir.path(), "summary.txt").contains("check force_curve_ordering pass"));
}

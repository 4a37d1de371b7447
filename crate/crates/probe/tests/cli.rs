//! The `probe` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probe")).args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn repeated_runs_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let file = scenario("normal_online.json");
    for out in [&a, &b] {
        let o = probe(&["run", "--scenario", arg(&file), "--out", arg(out), "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "report.json",
        "normal_online_zp.csv",
        "normal_online_qsss.csv",
        "circuit_table.csv",
        "normal_online_run.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn compare_prints_a_delta() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["normal_online", "doubled_l"] {
        let o = probe(&[
            "run",
            "--scenario",
            arg(&scenario(&format!("{name}.json"))),
            "--out",
            arg(dir.path()),
        ]);
        assert!(o.status.success());
    }
    let o = probe(&[
        "compare",
        "--baseline",
        arg(&dir.path().join("normal_online_run.json")),
        "--candidate",
        arg(&dir.path().join("doubled_l_run.json")),
    ]);
    assert!(o.status.success());
    let delta: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(delta["flagged"], true);
    assert!((delta["relative"][0].as_f64().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn validation_failure_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: serde_json::Value = serde_json::from_slice(&fs::read(scenario("normal_clean.json")).unwrap()).unwrap();
    s["probe"]["bit_duration"] = serde_json::json!(1e-3);
    let path = dir.path().join("slow.json");
    fs::write(&path, serde_json::to_vec(&s).unwrap()).unwrap();
    assert_eq!(probe(&["validate", "--scenario", arg(&path)]).status.code(), Some(2));
    assert_eq!(
        probe(&["run", "--scenario", arg(&path), "--out", arg(dir.path())])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        probe(&["validate", "--scenario", arg(&scenario("all.json"))])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn stage_failure_exits_with_3_and_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = probe(&[
        "run",
        "--scenario",
        arg(&scenario("outage_clean.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("stage continuous failed"), "{stderr}");
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("outage_clean_zp.csv").exists());
}

#[test]
fn oracle_writes_the_impulse_response() {
    let dir = tempfile::tempdir().unwrap();
    let o = probe(&[
        "oracle",
        "--scenario",
        arg(&scenario("normal_clean.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert!(o.status.success());
    let h = pcp_probe::io::read_waveform(&dir.path().join("normal_clean_oracle.csv")).unwrap();
    assert_eq!(h.len(), 500);
    assert_eq!(h.samples()[0], 0.0);
}

#[test]
fn overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = probe(&[
        "run",
        "--scenario",
        arg(&scenario("normal_clean.json")),
        "--out",
        arg(dir.path()),
        "--periods",
        "3",
        "--force-order",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"][0]["probe"]["periods"], 3);
    assert_eq!(report["runs"][0]["metrics"]["order"], 4);
}

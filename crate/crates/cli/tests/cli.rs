use std::path::Path;
use std::process::{Command, Output};

fn zeno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeno"))
        .args(args)
        .env_remove("ZENO_WORKERS")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

fn tau_in(summary: &[u8]) -> f64 {
    let v: serde_json::Value = serde_json::from_slice(summary).unwrap();
    v["fit"]["tau_eff_envelope_fs"].as_f64().unwrap()
}

const OUTPUTS: [&str; 5] = [
    "config.expanded",
    "trace.csv",
    "spectrum.csv",
    "summary.json",
    "provenance.json",
];

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = zeno(&["run", "--preset", "li_plus", "--out", dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in OUTPUTS {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = zeno(&[
        "run",
        "--preset",
        "li_plus",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let second = tmp.path().join("second");
    let echoed = first.join("config.expanded");
    let out = zeno(&[
        "run",
        "--config",
        echoed.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["trace.csv", "spectrum.csv", "config.expanded"] {
        assert_eq!(read(&first, name), read(&second, name), "{name} differs");
    }
}

#[test]
fn bad_unit_suffix_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "preset = li\n\ndrive.t_m = 0.32 eV\n").unwrap();
    let out = zeno(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("drive.t_m") && err.contains("line 3"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = zeno(&[
        "validate",
        "--preset",
        "li",
        "--override",
        "drive.Omgea=1 eV",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_value_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let sweep_dir = tmp.path().join("sweep");
    let out = zeno(&[
        "run",
        "--preset",
        "li_plus",
        "--override",
        "drive.t_m=0.5 fs",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = zeno(&[
        "sweep",
        "--preset",
        "li_plus",
        "--axis",
        "t_m",
        "--values",
        "0.5",
        "--workers",
        "1",
        "--out",
        sweep_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let point = sweep_dir.join("point_000");
    let (a, b) = (
        tau_in(&read(&run_dir, "summary.json")),
        tau_in(&read(&point, "summary.json")),
    );
    assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
    let table = String::from_utf8(read(&sweep_dir, "sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn preset_listing_names_every_preset() {
    let out = zeno(&["presets"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in zeno_cli::presets::NAMES {
        assert!(text.contains(name));
    }
}

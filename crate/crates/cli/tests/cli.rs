use std::path::Path;
use std::process::{Command, Output};

fn nls_relax(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-relax"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NLS_RELAX_OUTPUT_DIR")
        .output()
        .unwrap()
}

const SMALL: &str = r#"
problem = "two_soliton"
tableau = "ars3"
dt = 0.01
t_end = 0.1
snapshot_times = [0.05]

[operator]
kind = "fourier"
n = 64

[relaxation]
mode = "quadratic_preserving"
"#;

#[test]
fn run_writes_invariants_snapshots_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = nls_relax(&["run", "--config", "small.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run_dir = dir.path().join("output/small");
    let inv = std::fs::read_to_string(run_dir.join("invariants.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        inv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 10);
    let (m0, e0) = (rows[0][3], rows[0][4]);
    for r in &rows {
        assert!((r[3] - m0).abs() < 1e-12 && (r[4] - e0).abs() < 1e-11);
    }
    assert!((rows.last().unwrap()[1] - 0.1).abs() < 1e-3);

    let snaps = std::fs::read_to_string(run_dir.join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().next().unwrap().split(',').count(), 1 + 2 * 64);
    let meta: String = std::fs::read_to_string(run_dir.join("metadata.json")).unwrap();
    assert!(meta.contains("\"status\": \"ok\""), "{meta}");
}

#[test]
fn output_flag_overrides_default_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = nls_relax(&["run", "--config", "small.toml", "--output", "elsewhere"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("elsewhere/invariants.csv").exists());
    assert!(!dir.path().join("output").exists());
}

#[test]
fn conformance_passes_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = nls_relax(&["conformance", "--output", "conf"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let table = std::fs::read_to_string(dir.path().join("conf/conformance.csv")).unwrap();
    assert!(table.lines().count() > 20);
}

#[test]
fn impossible_conformance_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = nls_relax(&["conformance", "--tol", "1e-30", "--output", "conf"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), format!("{SMALL}\n[extra]\nfoo = 1\n")).unwrap();
    let out = nls_relax(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}

#[test]
fn missing_sweep_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = nls_relax(&["converge", "--config", "small.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

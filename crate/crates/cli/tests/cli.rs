use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpcc-ledger")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_warehouses_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "terminals_per_warehouse = 10\n").unwrap();
    let o = cli(&["--config", "c.toml", "run"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("warehouses"), "{}", stderr(&o));
}

#[test]
fn invalid_flag_value_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["--block-time-ms", "0", "run"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("block_time_ms"), "{}", stderr(&o));
}

#[test]
fn nonexistent_snapshot_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "--snapshot", "missing.ndjson"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing.ndjson"), "{}", stderr(&o));
}

#[test]
fn load_run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let load = cli(&["load", "--out", "loaded"], p);
    assert!(load.status.success(), "{}", stderr(&load));
    assert!(p.join("loaded/snapshot.ndjson").exists());

    let run = |out: &str| {
        let o = cli(&["--seed", "42", "--duration-secs", "60", "--warmup-secs", "5", "--out", out, "run", "--snapshot", "loaded/snapshot.ndjson"], p);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run("a");
    run("b");
    for name in ["records.csv", "summary.json", "summary.md", "run.json", "error_profile.dat"] {
        assert_eq!(fs::read(p.join("a").join(name)).unwrap(), fs::read(p.join("b").join(name)).unwrap(), "{name} differs");
    }

    let report = cli(&["--out", "r", "report", "a/records.csv"], p);
    assert!(report.status.success(), "{}", stderr(&report));
    assert_eq!(fs::read(p.join("r/summary.json")).unwrap(), fs::read(p.join("a/summary.json")).unwrap());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("c.toml"), "warehouses = 1\nterminals_per_warehouse = 20\nduration_secs = 40\nwarmup_secs = 5\nout = \"from-file\"\n").unwrap();
    assert!(cli(&["--config", "c.toml", "load", "--snapshot", "s.ndjson"], p).status.success());
    let o = cli(&["--config", "c.toml", "--terminals-per-warehouse", "5", "run", "--snapshot", "s.ndjson"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(p.join("from-file/summary.json")).unwrap()).unwrap();
    assert_eq!(summary[0]["terminals"], 5);
}

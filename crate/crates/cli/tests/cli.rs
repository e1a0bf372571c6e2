use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn octagon(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_octagon"));
    cmd.args(args).env_remove("OCTAGON_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn octagon")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL_SCAN: &[&str] = &["scan", "--t", "4", "--n", "2000", "--seed", "7"];

#[test]
fn verify_exits_zero_and_prints_table() {
    let o = octagon(&["verify"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.lines().all(|l| !l.starts_with("FAIL")));
    assert!(table.contains("cocycle identity"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["scan", "--t", "-1"][..],
        &["scan", "--kappa", "1.5"],
        &["scan", "--n", "10"],
        &["tremor", "--ell", "banana"],
        &["verify", "--format", "csv"],
        &["verify", "--format", "xml"],
        &["nonsense"],
    ] {
        let o = octagon(args, &[]);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_config_file_exits_one() {
    let o = octagon(&["verify", "--config", "/nonexistent/octagon.json"], &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let mut args = SMALL_SCAN.to_vec();
    let a_s = a.to_str().unwrap();
    args.extend(["--out", a_s]);
    assert_eq!(code(&octagon(&args, &[])), 0);
    // Replay from the written report's config block.
    let o = octagon(&["scan", "--config", a_s, "--out", b.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (va, vb): (Value, Value) = (serde_json::from_slice(&ta).unwrap(), serde_json::from_slice(&tb).unwrap());
    assert_eq!(va["report"], vb["report"]);
    assert_eq!(va["config"]["t"], vb["config"]["t"]);

    // Same flags, same destination: byte-identical.
    assert_eq!(code(&octagon(&args, &[])), 0);
    assert_eq!(ta, std::fs::read(&a).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"t": 3.0, "n": 1500, "seed": 4}"#).unwrap();
    let o = octagon(&["scan", "--config", cfg.to_str().unwrap(), "--t", "2"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["t"].as_f64(), Some(2.0));
    assert_eq!(v["config"]["n"].as_u64(), Some(1500));
    assert_eq!(v["config"]["seed"].as_u64(), Some(4));
    assert_eq!(v["report"]["n_samples"].as_u64(), Some(1500));
}

#[test]
fn json_round_trips_and_reparses_stably() {
    let o = octagon(&["tremor", "--ell", "1/2 + 1/4*sqrt2", "--t", "1", "--s", "0.25"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["report"]["commutes_with_horocycle"], Value::Bool(true));
    assert!(v["report"]["pushed_distance"]["distance"].as_f64().unwrap() >= 0.0);
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn csv_has_one_row_per_bin() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let csv = dir.path().join("s.csv");
    let mut a = SMALL_SCAN.to_vec();
    a.extend(["--out", json.to_str().unwrap()]);
    let mut b = SMALL_SCAN.to_vec();
    b.extend(["--format", "csv", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&octagon(&a, &[])), 0);
    assert_eq!(code(&octagon(&b, &[])), 0);
    let v: Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    let bins = v["report"]["histogram"]["masses"].as_array().unwrap().len();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin_left,bin_right,mass"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), bins);
    let total: f64 = rows.iter().map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = octagon(&["verify", "--seed", "3"], &[("OCTAGON_OUT_DIR", dir.path())]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("verify-3.json");
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["report"]["seed"].as_u64(), Some(3));
    assert_eq!(v["config"]["command"], "verify");
}

#[test]
fn recur_and_avoid_emit_csv() {
    let o = octagon(
        &["recur", "--t-list", "1,2", "--n", "200", "--haar-n", "2000", "--format", "csv"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
    let o = octagon(
        &["avoid", "--t", "3", "--n-s", "50", "--n-ell", "50", "--deltas", "0.01,0.1", "--format", "csv"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("delta,exact,grid"));
    assert_eq!(text.lines().count(), 3);
}

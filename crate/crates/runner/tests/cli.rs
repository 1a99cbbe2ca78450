use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stab_runner::{run, Experiment, ExperimentConfig};

const SMALL_FIXEDPOINT: &str = r#"
[algebra]
domain = [2, 3]

[perturbation]
kind = "radial"
theta_prime = 0.1

[control]
p = 0.5

[sampling]
seed = 5
samples = 6
depth = 6
unitaries = 2
m_max = 8
"#;

const SMALL_ALGEBRA: &str = r#"
experiment = "verify-algebra"

[algebra]
domain = [2, 3]

[control]
p = 0.5

[sampling]
seed = 3
trials = 40
"#;

fn stab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stab")).args(args).output().expect("stab runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn same_seed_gives_the_same_report() {
    let cfg = ExperimentConfig::from_toml(SMALL_FIXEDPOINT).unwrap();
    let a = run(Experiment::RunFixedpoint, &cfg).unwrap();
    let b = run(Experiment::RunFixedpoint, &cfg).unwrap();
    assert_eq!(a.canonical_summary(), b.canonical_summary());
    assert_eq!(a.records.len(), b.records.len());

    let mut other = cfg.clone();
    other.sampling.seed = 6;
    let c = run(Experiment::RunFixedpoint, &other).unwrap();
    assert_ne!(a.canonical_summary(), c.canonical_summary());
}

#[test]
fn cli_writes_summary_records_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "alg.toml", SMALL_ALGEBRA);
    let out = dir.path().join("alg.json");
    let csv = dir.path().join("alg.csv");
    let o = stab(&["verify-algebra", "--config", s(&cfg), "--out", s(&out), "--csv", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["verdict"], "PASS");
    assert_eq!(summary["checks"][0]["id"], "C01");
    let records = fs::read_to_string(dir.path().join("alg.records.jsonl")).unwrap();
    for line in records.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let rows = fs::read_to_string(&csv).unwrap();
    assert!(rows.lines().count() > 40);
}

#[test]
fn cli_summary_is_deterministic_apart_from_the_clock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fp.toml", SMALL_FIXEDPOINT);
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = stab(&["run-fixedpoint", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    assert_eq!(read("a.json"), read("b.json"));
}

#[test]
fn exit_code_follows_the_expected_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "alg.toml", SMALL_ALGEBRA);
    let out = dir.path().join("o.json");
    let o = stab(&["verify-algebra", "--config", s(&cfg), "--out", s(&out), "--expect", "fail"]);
    assert_eq!(o.status.code(), Some(1));
    let o = stab(&["verify-algebra", "--config", s(&cfg), "--out", s(&out), "--expect", "pass"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "alg.toml", SMALL_ALGEBRA);
    let out = dir.path().join("o.json");
    assert_eq!(stab(&["verify-algebra", "--config", s(&cfg), "--seed", "77", "--out", s(&out)]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 77);
}

#[test]
fn config_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(stab(&["verify-algebra", "--config", s(&missing)]).status.code(), Some(2));

    let unknown = write(dir.path(), "u.toml", &format!("{SMALL_ALGEBRA}\n[extra]\nx = 1\n"));
    assert_eq!(stab(&["verify-algebra", "--config", s(&unknown)]).status.code(), Some(2));

    let cfg = write(dir.path(), "alg.toml", SMALL_ALGEBRA);
    assert_eq!(stab(&["run-hyers", "--config", s(&cfg)]).status.code(), Some(2), "declared experiment differs");

    let out = dir.path().join("no/such/dir/o.json");
    assert_eq!(stab(&["verify-algebra", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // the fitted θ overflows, so no control function exists
    let text = SMALL_FIXEDPOINT.replace("theta_prime = 0.1", "theta_prime = 1e308");
    let cfg = write(dir.path(), "bad.toml", &text);
    let o = stab(&["run-fixedpoint", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

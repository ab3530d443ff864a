use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn pmesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmesim"))
        .args(args)
        .env_remove("PMESIM_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pmesim-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1);
    serde_json::from_str(&text).unwrap()
}

#[test]
fn same_seed_same_bytes() {
    let args = ["pea", "--dim", "2", "--qubits", "3", "--time", "1", "--mode", "ideal", "--seed", "7"];
    let (a, b) = (pmesim(&args), pmesim(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = pmesim(&["pea", "--dim", "2", "--qubits", "3", "--time", "1", "--mode", "ideal", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn record_layout() {
    let rec = record(&pmesim(&["controllize", "--dim", "2", "--time", "1", "--m", "4", "--seed", "1"]));
    assert_eq!(rec["schema_version"], 1);
    assert_eq!(rec["subcommand"], "controllize");
    assert_eq!(rec["flags"]["m"], 4);
    assert!(rec.get("wall_clock_seconds").is_none());
    let a = rec["results"]["slice_coherence"].as_f64().unwrap();
    let diamond = rec["results"]["diamond_distance"].as_f64().unwrap();
    assert!((diamond - (1.0 - a.powi(4))).abs() < 1e-12);
    let timed = record(&pmesim(&["controllize", "--seed", "1", "--timing"]));
    assert!(timed["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn pea_ledger_and_cue_moment() {
    let rec = record(&pmesim(&["pea", "--qubits", "3", "--time", "0.1", "--seed", "1"]));
    assert!((rec["ledger"]["total_evolution_time"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let rec = record(&pmesim(&["cue", "--dim", "3", "--r", "1", "--trials", "100000", "--seed", "3"]));
    let emp = rec["results"]["empirical"].as_f64().unwrap();
    let se = rec["results"]["stderr"].as_f64().unwrap();
    assert!((emp - 1.0 / 9.0).abs() < 4.0 * se);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("config");
    let path = dir.join("run.toml");
    std::fs::write(&path, "dim = 3\ntime = 0.5\nseed = 11\nqubits = 2\n").unwrap();
    let rec = record(&pmesim(&["pea", "--config", path.to_str().unwrap(), "--time", "0.25"]));
    assert_eq!(rec["config"]["dim"], 3);
    assert_eq!(rec["config"]["time"], 0.25);
    assert_eq!(rec["config"]["seed"], 11);
    assert_eq!(rec["config_file"]["time"], 0.5);
    assert_eq!(rec["flags"]["time"], 0.25);

    std::fs::write(&path, "dimension = 3\n").unwrap();
    assert_eq!(pmesim(&["pea", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(pmesim(&["pea"]).status.code(), Some(2));
    assert_eq!(pmesim(&["pea", "--seed", "1", "--delta", "0.9"]).status.code(), Some(2));
    assert_eq!(pmesim(&["nonsense", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(pmesim(&["pea", "--seed", "1", "--dim", "64", "--qubits", "10"]).status.code(), Some(3));
    assert_eq!(pmesim(&["controllize", "--seed", "1", "--dim", "16"]).status.code(), Some(3));
    // Spread pi at unit slice time makes Tr U vanish for d = 2.
    let pi = std::f64::consts::PI.to_string();
    let args = ["controllize", "--seed", "1", "--dim", "2", "--m", "1", "--spread", pi.as_str()];
    assert_eq!(pmesim(&args).status.code(), Some(4));
    assert_eq!(pmesim(&["dqc1", "--seed", "1", "--dim", "1", "--shots", "0"]).status.code(), Some(2));
    assert_eq!(pmesim(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_destinations() {
    let dir = scratch("out");
    let out = Command::new(env!("CARGO_BIN_EXE_pmesim"))
        .args(["fig3", "--format", "csv"])
        .env("PMESIM_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.join("fig3-0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("coherence,qubits,n,f,prob"));
    assert_eq!(lines.count(), 3 * (2 + 4 + 8 + 16));

    let explicit = dir.join("nested/cue.jsonl");
    let out = pmesim(&["cue", "--seed", "2", "--trials", "1000", "--output", explicit.to_str().unwrap()]);
    assert!(out.status.success());
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&explicit).unwrap()).unwrap();
    assert_eq!(rec["subcommand"], "cue");
}

#[test]
fn every_subcommand_runs() {
    for args in [
        &["dqc1", "--seed", "1"][..],
        &["delta-max", "--dim", "8", "--time", "40", "--seed", "3"],
        &["metrics", "--seed", "4", "--mode", "controllized"],
        &["bounds", "--dim", "8", "--seed", "5"],
        &["fig3"],
    ] {
        let rec = record(&pmesim(args));
        assert!(rec["results"].is_object(), "{args:?}");
        assert!(rec["ledger"].is_object(), "{args:?}");
    }
}

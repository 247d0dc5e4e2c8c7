use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use regchain_core::analyzer::{read_csv, SWEEP_HEADER};
use regchain_core::SweepRow;
use serde_json::Value;

fn regchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regchain"))
        .args(args)
        .env_remove("REGCHAIN_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = regchain(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    regchain(args).status.code().expect("exited normally")
}

fn rows(csv: &str) -> Vec<SweepRow> {
    assert_eq!(csv.lines().next(), Some(SWEEP_HEADER));
    read_csv(csv.as_bytes()).unwrap()
}

/// Rows of a generic CSV as header-keyed maps.
fn records(csv: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let h = r.headers().unwrap().clone();
    r.records().map(|x| h.iter().map(String::from).zip(x.unwrap().iter().map(String::from)).collect()).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_requires_alpha() {
    let out = regchain(&["simulate", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn full_regulated_share_takes_everything() {
    let r = rows(&ok(&["simulate", "--alpha-r", "1.0", "--trials", "50", "--epochs", "200"]));
    assert_eq!(r.len(), 1);
    assert_eq!((r[0].g_r, r[0].t_f), (1.0, 1.0));
}

#[test]
fn frontier_play_gets_fair_share() {
    let r = rows(&ok(&["simulate", "--alpha-r", "0.6", "--model", "ir", "--trials", "2000", "--epochs", "200", "-E", "20"]));
    assert!((r[0].g_r - 0.6).abs() < 0.01, "{}", r[0].g_r);
    assert_eq!(r[0].t_f, 1.0);
}

#[test]
fn frontier_sweep_has_21_monotone_rows() {
    let r = rows(&ok(&["sweep", "--alpha-grid", "0:1:0.05", "--trials", "200", "--epochs", "100", "-E", "10"]));
    assert_eq!(r.len(), 21);
    assert!(r.windows(2).all(|w| w[1].alpha_r > w[0].alpha_r && w[1].g_r >= w[0].g_r));
    assert!(r.iter().all(|x| x.t_f == 1.0));
}

#[test]
fn strategic_release_crosses_fair_share() {
    let csv = ok(&[
        "sweep", "--alpha-grid", "0.25:0.45:0.1", "--model", "sr", "--strategy-r", "withhold:2", "-E", "inf", "--trials", "1000",
        "--epochs", "500",
    ]);
    let r = rows(&csv);
    assert_eq!(r.len(), 3);
    assert!(r[0].g_r < r[0].alpha_r);
    assert!(r[2].g_r > r[2].alpha_r);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&["sweep", "--alpha-grid", "0:1:0"]), 2);
    assert_eq!(code(&["sweep", "--trials", "10"]), 2);
    assert_eq!(code(&["simulate", "--alpha-r", "0.5", "--strategy-ur", "withhold:2"]), 2);
    assert_eq!(code(&["simulate", "--alpha-r", "1.5"]), 2);
    assert_eq!(code(&["simulate", "--alpha-r", "0.5", "--rho", "0.1"]), 2);
    assert_eq!(code(&["simulate", "--alpha-r", "0.5", "--model", "nope"]), 2);
    assert_eq!(code(&["license-demo", "--executors", "0"]), 2);
    assert_eq!(code(&["thresholds", "--which", "h-ocf-ir", "--method", "mc"]), 2);
}

#[test]
fn runtime_errors_exit_1() {
    // no fee below the cap stops deviations at this share
    assert_eq!(code(&["thresholds", "--which", "min-ocf", "--alpha-r", "0.3", "--rho-cap", "0.01", "-E", "6"]), 1);
}

#[test]
fn csv_is_reproducible_across_runs_and_thread_counts() {
    let args = ["sweep", "--alpha-grid", "0.3:0.5:0.1", "--model", "ir", "--strategy-ur", "ai:1", "--trials", "300", "--epochs", "100", "-E", "8", "--seed", "7"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let mut single = vec!["--threads", "1"];
    single.extend(args);
    assert_eq!(a, ok(&single));
    let mut other = args.to_vec();
    *other.last_mut().unwrap() = "8";
    assert_ne!(a, ok(&other));
}

#[test]
fn manifest_replays_to_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    ok(&["sweep", "--alpha-grid", "0.2:0.8:0.3", "--trials", "300", "--epochs", "100", "-E", "10", "--out", path(&out)]);
    let manifest = dir.path().join("s.csv.manifest.json");
    let m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "sweep");
    assert_eq!(m["config"]["trials"], 300);
    assert_eq!(m["config"]["game"]["E"], 10);
    assert!(m["startedAt"].is_string() && m["finishedAt"].is_string());
    assert!(m["versions"]["regchain-core"].is_string());
    ok(&["replay", path(&manifest), "--check"]);
    let again = dir.path().join("r.csv");
    ok(&["replay", path(&manifest), "--out", path(&again)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    fs::write(&out, "tampered").unwrap();
    assert_eq!(code(&["replay", path(&manifest), "--check"]), 1);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "alphaR = 0.7\nE = 12\ntrials = 40\nmaxEpochs = 60\nseed = 3\n").unwrap();
    let r = rows(&ok(&["simulate", "--config", path(&cfg)]));
    assert_eq!((r[0].alpha_r, r[0].trials, r[0].depth.to_string()), (0.7, 40, "12".to_string()));
    let r = rows(&ok(&["simulate", "--config", path(&cfg), "--alpha-r", "0.2", "--trials", "30"]));
    assert_eq!((r[0].alpha_r, r[0].trials), (0.2, 30));

    let json = dir.path().join("run.json");
    fs::write(&json, r#"{"alphaR": 0.4, "model": "sr", "E": "inf", "trials": 20, "maxEpochs": 50}"#).unwrap();
    let r = rows(&ok(&["simulate", "--config", path(&json)]));
    assert_eq!(r[0].strategy_r.to_string(), "rdub-frontier");
    assert_eq!(r[0].depth.to_string(), "inf");

    fs::write(&cfg, "alphaR = 0.7\nunknownKey = 1\n").unwrap();
    assert_eq!(code(&["simulate", "--config", path(&cfg)]), 2);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--alpha-r", "0.5", "--trials", "20", "--epochs", "50", "-E", "10", "--out", path(&out)];
        args.extend(extra);
        let st = Command::new(env!("CARGO_BIN_EXE_regchain")).args(&args).env("REGCHAIN_SEED", "41").status().unwrap();
        assert!(st.success());
        let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o.csv.manifest.json")).unwrap()).unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[]), 41);
    assert_eq!(run(&["--seed", "2"]), 2);
}

#[test]
fn trace_has_one_record_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    ok(&["simulate", "--alpha-r", "0.5", "--trials", "5", "--epochs", "40", "-E", "5", "--trace", path(&trace)]);
    let text = fs::read_to_string(&trace).unwrap();
    let recs: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(recs.len() >= 40);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["epoch"].as_u64(), Some(i as u64 + 1));
        assert!(r["owner"].is_string() && r["action"].is_string() && r["stateAfter"].is_object());
    }
}

#[test]
fn exact_threshold_commands() {
    let roots = records(&ok(&["thresholds", "--which", "poly-roots"]));
    let root = |i: usize| roots[i]["root"].parse::<f64>().unwrap();
    assert!((root(0) - 0.361).abs() < 1e-3 && (root(1) - 0.308).abs() < 1e-3);

    let e3 = records(&ok(&["thresholds", "--which", "e3-check"]));
    assert!(e3[0]["maxAbsDiff"].parse::<f64>().unwrap() <= 1e-9);

    let sr = records(&ok(&["thresholds", "--which", "h-sr"]));
    assert_eq!(sr[0]["name"], "h_SR");
    assert!((sr[0]["estimate"].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-3);

    let ocf = records(&ok(&["thresholds", "--which", "h-ocf-ir", "-E", "10"]));
    let h: f64 = ocf[0]["estimate"].parse().unwrap();
    assert!((h - 0.5).abs() < 0.02, "{h}");
    assert_eq!(ocf[0]["method"], "bisection+DP");
}

#[test]
fn hir_vs_e_uses_the_sweep_schema() {
    let r = rows(&ok(&["thresholds", "--which", "hir-vs-e", "--e-values", "3,5,8,12"]));
    assert_eq!(r.len(), 4);
    let h: Vec<f64> = r.iter().map(|x| 1.0 - x.alpha_r).collect();
    assert!((h[0] - 0.455).abs() < 2e-3, "{h:?}");
    assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-3), "{h:?}");
    assert!(h[3] > 0.41 && h[3] < 0.43);
}

#[test]
fn license_demo_verifies_everything() {
    let v: Value = serde_json::from_str(&ok(&["license-demo", "--jurisdictions", "2", "--assets", "2", "--executors", "3", "--window", "10"])).unwrap();
    assert_eq!(v["allValid"], true);
    assert_eq!(v["announcementVerified"], true);
    let ex = v["executorLicenses"].as_array().unwrap();
    assert_eq!(ex.len(), 3);
    assert!(ex.iter().all(|l| l["status"] == "Valid" && l["license"]["rulesDigest"] == v["rulesDigest"]));
    assert_eq!(v["announcement"]["rules"]["jurisdictions"].as_array().unwrap().len(), 2);
    assert_eq!(v["windowCheck"]["status"], "Expired");

    let w: Value = serde_json::from_str(&ok(&["license-demo", "--window", "1", "--root-epoch", "5", "--executors", "1"])).unwrap();
    assert_eq!(w["windowCheck"]["epoch"], 6);
    assert_eq!(w["windowCheck"]["status"], "Expired");
    assert_eq!(w["windowCheck"]["statusAtLastValidEpoch"], "Valid");
}

#[test]
fn crypto_selftest_passes() {
    let r = records(&ok(&["selftest", "crypto", "--samples", "2000"]));
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|x| x["pass"] == "true"), "{r:?}");
    assert_eq!(code(&["selftest", "crypto", "--samples", "10"]), 2);
}

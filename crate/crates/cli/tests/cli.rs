//! End-to-end tests of the binary: every subcommand and exit-code path, run
//! against temporary files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

const DEMO_CONFIG: &str = r#"{
  "n": 3,
  "q": 3,
  "k_a": 2,
  "shares": [1, 2],
  "s": 1,
  "secret": "paper-example",
  "seed": 11,
  "outcomes": [0, 1],
  "masks": [0.5235987755982988, 3.141592653589793]
}"#;

#[test]
fn run_recovers_the_demo_secret() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir, "demo.json", DEMO_CONFIG);
    let out = dir.path().join("transcript.json");
    let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("fidelity 1.000000000"), "{stdout}");
    assert!(stdout.contains("recovered"));

    let transcript: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(transcript["verdict"], "recovered");
    assert_eq!(transcript["config"]["n"], 3);
    assert_eq!(transcript["announcements"][0]["kind"], "s");
    assert!(transcript["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert_eq!(transcript["recovered"].as_array().unwrap().len(), 2);
}

#[test]
fn identical_config_and_seed_reproduce_byte_identical_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir, "demo.json", DEMO_CONFIG);
    let out1 = dir.path().join("a.json");
    let out2 = dir.path().join("b.json");
    for out in [&out1, &out2] {
        let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(result.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap(),
        "transcripts must replay byte-identically"
    );
}

#[test]
fn non_prime_modulus_fails_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        "bad.json",
        r#"{"n": 3, "q": 4, "k_a": 1, "secret": "paper-example", "seed": 1}"#,
    );
    let out = dir.path().join("never.json");
    let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("BadModulus"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn unreadable_config_fails_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let result = qsr(&["run", "--config", "/nonexistent/config.json", "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("cannot read"), "{stderr}");
}

#[test]
fn external_attack_aborts_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        "attacked.json",
        r#"{
  "n": 3, "q": 3, "k_a": 2, "shares": [1, 2], "s": 1,
  "secret": "paper-example", "seed": 5, "decoys": 64,
  "attack": {"kind": "external"}
}"#,
    );
    let out = dir.path().join("aborted.json");
    let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    let transcript: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(transcript["verdict"], "aborted: channel-error");
    assert!(transcript.get("fidelity").is_none());
}

#[test]
fn internal_attack_report_is_embedded() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        "fake.json",
        r#"{
  "n": 3, "q": 3, "k_a": 2, "shares": [1, 2], "s": 1,
  "secret": "paper-example", "seed": 5,
  "attack": {"kind": "combiner-fake", "bits": [1, 0]}
}"#,
    );
    let out = dir.path().join("attacked.json");
    let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0));
    let transcript: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let report = &transcript["attack_report"];
    assert!(report["best_guess_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert_eq!(report["z_statistics"].as_array().unwrap().len(), 2);
}

#[test]
fn qmss_run_writes_one_transcript_per_secret() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        &dir,
        "qmss.json",
        r#"{
  "n": 3, "q": 5, "k_a": 3, "secret": [[0.6, 0.0], [0.0, 0.8]], "seed": 9,
  "qmss": {"w": 2, "randomizers": [1, 2]}
}"#,
    );
    let out = dir.path().join("runs.json");
    let result = qsr(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let runs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for run in runs {
        assert_eq!(run["verdict"], "recovered");
        assert!(run["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    }
    assert_ne!(runs[0]["config"]["s"], runs[1]["config"]["s"]);
}

#[test]
fn report_example_prints_seven_steps() {
    let result = qsr(&["report", "example"]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&result.stdout);
    for step in 1..=7 {
        assert!(stdout.contains(&format!("step {step}:")), "{stdout}");
    }
    // JSON form carries all 8 amplitudes per row
    let result = qsr(&["report", "example", "--json"]);
    let rows: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&result.stdout)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 7);
    assert_eq!(rows[0]["amplitudes"].as_array().unwrap().len(), 8);
}

#[test]
fn report_experiment_histogram_never_fails_verification() {
    let result = qsr(&["report", "experiment", "--shots", "800", "--seed", "3", "--json"]);
    assert_eq!(result.status.code(), Some(0));
    let out: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&result.stdout)).unwrap();
    let histogram = out["histogram"].as_object().unwrap();
    let mut total = 0u64;
    for (key, count) in histogram {
        assert!(key.starts_with('0'), "key {key}");
        total += count.as_u64().unwrap();
    }
    assert_eq!(total, 800);
}

#[test]
fn report_cost_prints_the_expected_numbers() {
    let result = qsr(&["report", "cost", "--n", "3", "--q-bits", "2", "--m", "1"]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("proposed"));
    assert!(stdout.contains("6 bits/state"), "{stdout}");
    assert!(stdout.contains("O(n)T_a + O(1)T_m"));
}

#[test]
fn report_attacks_covers_all_four_scenarios() {
    let result = qsr(&["report", "attacks", "--seed", "5", "--json"]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let out: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&result.stdout)).unwrap();
    assert_eq!(out["external"]["verdict"], "aborted: channel-error");
    assert!(out["combiner-fake"]["best_guess_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert!(out["collusion-i"]["best_guess_fidelity"].as_f64().unwrap() < 1.0);
    assert!(out["collusion-ii"]["guess_probabilities"].as_array().unwrap().len() > 1);
}

#[test]
fn unknown_report_kind_is_a_usage_error() {
    let result = qsr(&["report", "nonsense"]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("unknown report kind"), "{stderr}");
}

#[test]
fn selftest_passes_every_criterion_within_budget() {
    let start = std::time::Instant::now();
    let result = qsr(&["selftest"]);
    let elapsed = start.elapsed();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert_eq!(stdout.matches("PASS").count(), 12, "{stdout}");
    assert_eq!(stdout.matches("FAIL").count(), 0, "{stdout}");
    assert!(stdout.contains("12/12 criteria passed"));
    assert!(elapsed.as_secs() < 120, "selftest took {elapsed:?}");
}

//! End-to-end tests of the command-line surface: flag validation, output
//! determinism, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use typiclust::io::{write_embeddings, write_labels, write_scores};
use typiclust::synthetic::blobs_fixture;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_typiclust"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    embeddings: PathBuf,
    labels: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let set = blobs_fixture(1);
    let embeddings = root.join("blobs.emb");
    let labels = root.join("blobs.lbl");
    write_embeddings(&embeddings, &set).unwrap();
    write_labels(&labels, set.labels().unwrap()).unwrap();
    Fixture {
        _dir: dir,
        root,
        embeddings,
        labels,
    }
}

fn stderr_error_code(output: &Output) -> String {
    let text = String::from_utf8_lossy(&output.stderr);
    let line = text.lines().last().unwrap_or("");
    let parsed: serde_json::Value = serde_json::from_str(line).expect("stderr is error JSON");
    parsed["error"].as_str().unwrap().to_string()
}

#[test]
fn select_typiclust_covers_clusters() {
    let fx = fixture();
    let out = fx.root.join("batch.json");
    let output = run(&[
        "select",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--strategy",
        "typiclust_rp",
        "--budget",
        "30",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let batch: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let indices = batch["indices"].as_array().unwrap();
    assert_eq!(indices.len(), 30);
    let diagnostics = batch["diagnostics"].as_array().unwrap();
    let mut clusters: Vec<i64> = diagnostics
        .iter()
        .map(|d| d["cluster"].as_i64().expect("cluster id recorded"))
        .collect();
    clusters.sort_unstable();
    clusters.dedup();
    assert_eq!(clusters.len(), 30, "one pick per cluster");
}

#[test]
fn select_margin_without_scores_exits_2() {
    let fx = fixture();
    let output = run(&[
        "select",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--strategy",
        "margin",
        "--budget",
        "5",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert_eq!(stderr_error_code(&output), "MissingScores");
}

#[test]
fn select_is_byte_deterministic() {
    let fx = fixture();
    let out_a = fx.root.join("a.json");
    let out_b = fx.root.join("b.json");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "select",
            "--embeddings",
            fx.embeddings.to_str().unwrap(),
            "--strategy",
            "tpc_rand",
            "--budget",
            "12",
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
}

#[test]
fn select_with_scores_runs_uncertainty_family() {
    let fx = fixture();
    let scores_path = fx.root.join("scores.scr");
    // 1000 rows, 10 classes; make low-index rows most uncertain
    let mut probs = Vec::with_capacity(1000 * 10);
    for i in 0..1000usize {
        let confident = 0.1 + 0.89 * (i as f64 / 999.0);
        let rest = (1.0 - confident) / 9.0;
        for c in 0..10 {
            probs.push(if c == 0 { confident } else { rest });
        }
    }
    write_scores(&scores_path, &probs, 10).unwrap();
    let out = fx.root.join("margin.json");
    let output = run(&[
        "select",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--strategy",
        "margin",
        "--scores",
        scores_path.to_str().unwrap(),
        "--budget",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let batch: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // lowest margins live at the lowest indices
    assert_eq!(batch["indices"][0], 0);
    assert_eq!(batch["indices"][1], 1);
    assert_eq!(batch["indices"][2], 2);
}

#[test]
fn phase_reports_crossing_near_closed_form() {
    let fx = fixture();
    let out = fx.root.join("phase.csv");
    let output = run(&[
        "simulate", "phase", "--error", "exp", "--k", "1", "--nu", "1", "--p", "0.8",
        "--alpha", "0.1", "--delta", "0.01", "--m-min", "0.01", "--m-max", "50",
        "--grid", "400", "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let z1_line = text
        .lines()
        .find(|l| l.starts_with("# z1="))
        .expect("transition comment");
    let z1: f64 = z1_line
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("z1=").and_then(|v| v.parse().ok()))
        .unwrap();
    let closed_form = (40.0f64).ln() / 0.78;
    assert!((z1 - closed_form).abs() < 0.05, "z1 {z1}");
    assert!(text.contains("single_phase=true"));
    assert!(text.lines().any(|l| l == "m,diff_r1,diff_r2"));
}

#[test]
fn phase_rejects_invalid_alpha_with_exit_2() {
    let fx = fixture();
    let out = fx.root.join("phase.csv");
    let output = run(&[
        "simulate", "phase", "--p", "0.8", "--alpha", "9", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert_eq!(stderr_error_code(&output), "InvalidMixture");
}

#[test]
fn linear_smoke_scale_writes_table() {
    let fx = fixture();
    let out = fx.root.join("linear.csv");
    let output = run(&[
        "simulate", "linear", "--p", "0.9", "--alpha", "0.2", "--dim", "40",
        "--reps", "10", "--test-size", "500", "--seed", "3",
        "--m-grid", "10,20,40", "--out", out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == "m,delta_mode,mean_error,std_error,repetitions"));
    // 3 grid points x 3 modes
    let data_rows = text.lines().filter(|l| l.ends_with(",10")).count();
    assert_eq!(data_rows, 9);
}

#[test]
fn evaluate_single_class_batch_tv() {
    let fx = fixture();
    // batch of 10 points all from blob 0 (indices 0..10)
    let batch = serde_json::json!({
        "strategy": "manual",
        "seed": 0,
        "indices": (0..10).collect::<Vec<usize>>(),
        "truncated": false,
        "diagnostics": [],
    });
    let batch_path = fx.root.join("batch.json");
    std::fs::write(&batch_path, serde_json::to_string(&batch).unwrap()).unwrap();
    let output = run(&[
        "evaluate",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--batch",
        batch_path.to_str().unwrap(),
        "--metric",
        "tv",
    ]);
    assert!(output.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&output.stdout).unwrap();
    // single-class batch against a uniform reference over 10 classes
    let tv = parsed["tv_distance"].as_f64().unwrap();
    assert!((tv - 0.9).abs() < 1e-12, "tv {tv}");
}

#[test]
fn evaluate_one_nn_probe_on_covering_batch() {
    let fx = fixture();
    let batch = serde_json::json!({
        "strategy": "manual",
        "seed": 0,
        "indices": (0..10).map(|b| b * 100).collect::<Vec<usize>>(),
        "truncated": false,
        "diagnostics": [],
    });
    let batch_path = fx.root.join("cover.json");
    std::fs::write(&batch_path, serde_json::to_string(&batch).unwrap()).unwrap();
    let output = run(&[
        "evaluate",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--batch",
        batch_path.to_str().unwrap(),
        "--probe",
        "1nn",
        "--metric",
        "acc",
    ]);
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(parsed["accuracy"].as_f64().unwrap() >= 0.95);
}

#[test]
fn evaluate_mismatched_labels_exit_2() {
    let fx = fixture();
    let short_labels = fx.root.join("short.lbl");
    write_labels(&short_labels, &[0, 1, 2]).unwrap();
    let batch_path = fx.root.join("b.json");
    std::fs::write(
        &batch_path,
        serde_json::to_string(&serde_json::json!({
            "strategy": "manual", "seed": 0, "indices": [0],
            "truncated": false, "diagnostics": [],
        }))
        .unwrap(),
    )
    .unwrap();
    let output = run(&[
        "evaluate",
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--labels",
        short_labels.to_str().unwrap(),
        "--batch",
        batch_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert_eq!(stderr_error_code(&output), "CountMismatch");
}

fn write_iterate_config(fx: &Fixture, out_dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "embeddings": fx.embeddings,
        "labels": fx.labels,
        "strategies": ["typiclust_rp", "random"],
        "budgets": [10, 10],
        "seeds": [0, 1],
        "probes": ["1nn"],
        "out_dir": out_dir,
    });
    let path = fx.root.join("iterate.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn iterate_writes_records_and_summary() {
    let fx = fixture();
    let out_dir = fx.root.join("results");
    let config = write_iterate_config(&fx, &out_dir);
    let output = run(&["iterate", "--config", config.to_str().unwrap()]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    // 2 strategies x 2 seeds JSONL files, 2 iterations each
    for name in [
        "typiclust_rp_seed0.jsonl",
        "typiclust_rp_seed1.jsonl",
        "random_seed0.jsonl",
        "random_seed1.jsonl",
    ] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 3, "{name}: header + 2 iterations");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    // header + 2 strategies x 2 iterations
    assert_eq!(summary.lines().count(), 5);
    assert!(summary.contains("typiclust_rp,0,2,"));
    assert!(summary.contains("random,1,2,"));
    assert!(out_dir.join("timings.log").exists());
}

#[test]
fn iterate_reruns_identically() {
    let fx = fixture();
    let out_a = fx.root.join("run_a");
    let out_b = fx.root.join("run_b");
    for out_dir in [&out_a, &out_b] {
        let config = write_iterate_config(&fx, out_dir);
        let output = run(&["iterate", "--config", config.to_str().unwrap()]);
        assert!(output.status.success());
    }
    for name in ["typiclust_rp_seed0.jsonl", "random_seed1.jsonl", "summary.csv"] {
        assert_eq!(
            std::fs::read(out_a.join(name)).unwrap(),
            std::fs::read(out_b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn iterate_rejects_bad_config_field() {
    let fx = fixture();
    let config = fx.root.join("bad.json");
    std::fs::write(
        &config,
        serde_json::to_string(&serde_json::json!({
            "embeddings": fx.embeddings,
            "labels": fx.labels,
            "strategies": [],
            "budgets": [10],
            "seeds": [0],
            "out_dir": fx.root.join("out"),
        }))
        .unwrap(),
    )
    .unwrap();
    let output = run(&["iterate", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let text = String::from_utf8_lossy(&output.stderr);
    assert!(text.contains("strategies"), "names the offending field");
}

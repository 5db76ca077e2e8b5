//! The `tabqa` binary end to end: exit codes, error reports, precedence of
//! configuration sources and repeatability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn tabqa(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tabqa"));
    for (name, _) in std::env::vars() {
        if name.starts_with("TABQA_") {
            cmd.env_remove(name);
        }
    }
    cmd.args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn error_report(output: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("json error report on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn evaluating_the_ground_truth_against_itself_is_perfect() {
    let out = tempfile::tempdir().unwrap();
    let questions = fixtures().join("pipeline/questions.jsonl");
    let run = tabqa(&[
        "evaluate",
        "--generated",
        path(&questions),
        "--groundtruth",
        path(&questions),
        "--out",
        path(out.path()),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&out.path().join("report.json"));
    assert_eq!(report["scores"]["items"], 3);
    assert_eq!(report["scores"]["teds"], 1.0);
    assert_eq!(report["scores"]["content_f1"], 1.0);
    assert!(out.path().join("summary.txt").exists());
}

#[test]
fn a_missing_generated_table_scores_zero() {
    let out = tempfile::tempdir().unwrap();
    let questions = fixtures().join("pipeline/questions.jsonl");
    let generated = out.path().join("generated.jsonl");
    let text = fs::read_to_string(&questions).unwrap();
    let first: Vec<&str> = text.lines().take(2).collect();
    fs::write(&generated, first.join("\n") + "\n").unwrap();
    let run = tabqa(&[
        "evaluate",
        "--generated",
        path(&generated),
        "--groundtruth",
        path(&questions),
        "--out",
        path(out.path()),
    ]);
    assert!(run.status.success());
    let report = json(&out.path().join("report.json"));
    assert_eq!(report["missing"], serde_json::json!(["q3"]));
    let q3 = jsonl(&out.path().join("scores.jsonl"))
        .into_iter()
        .find(|s| s["id"] == "q3")
        .unwrap();
    assert_eq!(q3["status"], "missing");
    assert_eq!(q3["teds"], 0.0);
    assert_eq!(q3["content_f1"], 0.0);
}

#[test]
fn a_malformed_record_is_reported_by_file_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let triples = dir.path().join("triples.jsonl");
    let good = fs::read_to_string(fixtures().join("pipeline/questions.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    fs::write(
        &triples,
        format!("{first}\n{{\"id\": \"bad\", \"doc_id\": \"northwind-2023\", \"question\": 5}}\n"),
    )
    .unwrap();
    let run = tabqa(&[
        "retrieve",
        "--triples",
        path(&triples),
        "--docs",
        path(&fixtures().join("pipeline/docs.jsonl")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let report = error_report(&run);
    assert_eq!(report["error"], "input");
    assert_eq!(report["file"], path(&triples));
    assert_eq!(report["line"], 2);
    assert_eq!(report["field"], "question");
    assert!(!dir.path().join("retrieval.jsonl").exists());
}

#[test]
fn broken_table_html_names_the_table_field() {
    let dir = tempfile::tempdir().unwrap();
    let tables = dir.path().join("tables.jsonl");
    fs::write(
        &tables,
        "{\"id\": \"t\", \"doc_id\": \"filter-text\", \"table_html\": \"<p>no table</p>\"}\n",
    )
    .unwrap();
    let run = tabqa(&[
        "annotate",
        "--docs",
        path(&fixtures().join("filter/docs.jsonl")),
        "--tables",
        path(&tables),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let report = error_report(&run);
    assert_eq!(report["line"], 1);
    assert_eq!(report["field"], "table_html");
}

#[test]
fn generation_without_a_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = fixtures().join("pipeline");
    let run = tabqa(&[
        "generate",
        "--triples",
        path(&pipeline.join("questions.jsonl")),
        "--retrieval",
        path(&pipeline.join("golden/retrieval.jsonl")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(error_report(&run)["error"], "config");
}

#[test]
fn retrieval_runs_offline_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = fixtures().join("pipeline");
    let run = tabqa(&[
        "retrieve",
        "--triples",
        path(&pipeline.join("questions.jsonl")),
        "--docs",
        path(&pipeline.join("docs.jsonl")),
        "--out",
        path(dir.path()),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let lines = jsonl(&dir.path().join("retrieval.jsonl"));
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l["sub_questions"].as_array().unwrap().len() == 1));
}

#[test]
fn flags_override_environment_which_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = fixtures().join("pipeline");
    let config = pipeline.join("config.toml");
    let args = |out: &Path| {
        vec![
            "retrieve".to_string(),
            "--config".into(),
            path(&config).into(),
            "--triples".into(),
            path(&pipeline.join("questions.jsonl")).into(),
            "--docs".into(),
            path(&pipeline.join("docs.jsonl")).into(),
            "--out".into(),
            path(out).into(),
        ]
    };
    let merged_lengths = |out: &Path| -> Vec<usize> {
        jsonl(&out.join("retrieval.jsonl"))
            .iter()
            .map(|l| l["merged"].as_array().unwrap().len())
            .collect()
    };

    let file_only = dir.path().join("file");
    assert!(tabqa(&args(&file_only).iter().map(String::as_str).collect::<Vec<_>>())
        .status
        .success());
    assert_eq!(json(&file_only.join("recall.json"))["k"], 30);

    let env = dir.path().join("env");
    let run = Command::new(env!("CARGO_BIN_EXE_tabqa"))
        .args(args(&env))
        .env("TABQA_K", "4")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(merged_lengths(&env).iter().all(|&n| n == 4));

    let flag = dir.path().join("flag");
    let mut with_flag = args(&flag);
    with_flag.extend(["--k".to_string(), "2".to_string()]);
    let run = Command::new(env!("CARGO_BIN_EXE_tabqa"))
        .args(with_flag)
        .env("TABQA_K", "4")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(merged_lengths(&flag).iter().all(|&n| n == 2));
}

#[test]
fn rerunning_the_pipeline_overwrites_with_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("pipeline/config.toml");
    let out = dir.path().join("out");
    let snapshot = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    assert!(tabqa(&["pipeline", "--config", path(&config), "--out", path(&out)])
        .status
        .success());
    let first = snapshot(&out);
    let run = tabqa(&["pipeline", "--config", path(&config), "--out", path(&out)]);
    assert!(run.status.success());
    assert_eq!(first, snapshot(&out));
    assert_eq!(first, snapshot(&fixtures().join("pipeline/golden")));
    assert!(String::from_utf8_lossy(&run.stdout).contains("TEDS"));
}

#[test]
fn failed_items_are_recorded_and_exit_with_partial_status() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = fixtures().join("pipeline");
    let triples = dir.path().join("triples.jsonl");
    let edited: Vec<String> = fs::read_to_string(pipeline.join("questions.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            if v["id"] == "q2" {
                v["question"] = "A question the transcript never saw?".into();
            }
            v.to_string()
        })
        .collect();
    fs::write(&triples, edited.join("\n") + "\n").unwrap();
    let out = dir.path().join("out");
    let run = tabqa(&[
        "generate",
        "--config",
        path(&pipeline.join("config.toml")),
        "--triples",
        path(&triples),
        "--retrieval",
        path(&pipeline.join("golden/retrieval.jsonl")),
        "--out",
        path(&out),
    ]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(error_report(&run)["error"], "partial");
    let generated: Vec<Value> = jsonl(&out.join("generated.jsonl"));
    assert_eq!(
        generated.iter().map(|g| g["id"].as_str().unwrap()).collect::<Vec<_>>(),
        ["q1", "q3"]
    );
    let failures = jsonl(&out.join("failures.jsonl"));
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["id"], "q2");
    assert_eq!(failures[0]["stage"], "structure");
}

#[test]
fn stats_prints_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let stats = fixtures().join("stats");
    let out = dir.path().join("stats.json");
    let run = tabqa(&[
        "stats",
        "--triples",
        path(&stats.join("triples.jsonl")),
        "--docs",
        path(&stats.join("docs.jsonl")),
        "--out",
        path(&out),
    ]);
    assert!(run.status.success());
    let written = json(&out);
    assert_eq!(written["triples"], 3);
    assert_eq!(written["hierarchical_tables"], 2);
    assert!(!run.stdout.is_empty());
}

//! The committed replay transcripts under `fixtures/pipeline` are recordings
//! of a scripted model that answers from the ground truth. This test records
//! them afresh and compares; with `UPDATE_FIXTURES=1` it rewrites the
//! transcripts and the golden output directories instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tabqa_cli::io::read_jsonl_values;
use tabqa_cli::records::QuestionRecord;
use tabqa_cli::{cmd_pipeline, CliError, Providers, RunConfig};
use tabqa_core::parse_html_table;
use tabqa_core::providers::{HashingEmbedder, Recorder, Transcript, TranscriptMeta};
use tabqa_oracles::llm::{Corruption, OracleChat, OracleRewriter};

const SUB_QUESTIONS: &[(&str, &[&str])] = &[
    (
        "What were the revenue and operating income of the Cloud and Devices segments in 2022 and 2023?",
        &[
            "What was the revenue of the Cloud and Devices segments in 2022 and 2023?",
            "What was the operating income of the Cloud and Devices segments in 2022 and 2023?",
        ],
    ),
    (
        "How many new cases and deaths of lung and stomach cancer were recorded for males and females?",
        &[
            "How many new cases of lung and stomach cancer were recorded for males and females?",
            "How many deaths from lung and stomach cancer were recorded for males and females?",
        ],
    ),
];

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/pipeline")
}

fn updating() -> bool {
    std::env::var("UPDATE_FIXTURES").is_ok_and(|v| v == "1")
}

fn wrong_value() -> Corruption {
    Corruption {
        question: "What were the revenue and operating income of the Cloud and Devices segments in 2022 and 2023?"
            .into(),
        row: "Devices / Operating income".into(),
        column: "2023".into(),
        value: "$16 million".into(),
    }
}

fn oracle_chat(corrupt: bool) -> OracleChat {
    let questions: Vec<QuestionRecord> = read_jsonl_values(&fixture_dir().join("questions.jsonl")).unwrap();
    let tables = questions
        .into_iter()
        .map(|q| (q.question, parse_html_table(q.table_html.as_deref().unwrap()).unwrap()));
    let chat = OracleChat::new(tables);
    if corrupt {
        chat.with_corruption(wrong_value())
    } else {
        chat
    }
}

/// Entries sorted by fingerprint, so the file does not depend on scheduling.
fn canonical(path: &Path) -> String {
    let mut t = Transcript::load(path).unwrap();
    t.entries.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
    let out = path.with_extension("sorted");
    t.save(&out).unwrap();
    fs::read_to_string(out).unwrap()
}

/// Runs the pipeline against the oracle and returns the chat and rewrite
/// transcripts.
fn record(corrupt: bool) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::load(&fixture_dir().join("config.toml")).unwrap();
    let meta = || TranscriptMeta {
        provider: "scripted ground-truth model".into(),
        captured_at: String::new(),
    };
    let chat_path = dir.path().join("chat.jsonl");
    let rewrite_path = dir.path().join("rewrites.jsonl");
    let providers = Providers {
        llm: Some(Arc::new(
            Recorder::create(oracle_chat(corrupt), &chat_path, meta()).unwrap(),
        )),
        rewriter: Arc::new(
            Recorder::create(
                OracleRewriter::new(SUB_QUESTIONS.iter().map(|(q, s)| (*q, s.to_vec()))),
                &rewrite_path,
                meta(),
            )
            .unwrap(),
        ),
        embedder: Arc::new(HashingEmbedder::new(config.providers.embedding_dimension)),
    };
    cmd_pipeline(&config, &providers, &dir.path().join("out")).unwrap();
    drop(providers);
    (canonical(&chat_path), canonical(&rewrite_path))
}

fn check_or_write(path: &Path, fresh: &str) {
    if updating() {
        fs::write(path, fresh).unwrap();
    } else {
        let committed = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(
            committed == fresh,
            "{} is stale; rerun with UPDATE_FIXTURES=1",
            path.display()
        );
    }
}

fn write_golden(config_name: &str, golden: &str) {
    let dir = fixture_dir();
    let config = RunConfig::load(&dir.join(config_name)).unwrap();
    let providers = tabqa_cli::build_providers(&config.providers).unwrap();
    let out = dir.join(golden);
    let _ = fs::remove_dir_all(&out);
    match cmd_pipeline(&config, &providers, &out) {
        Ok(_) | Err(CliError::Partial { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn committed_transcripts_match_a_fresh_recording() {
    let dir = fixture_dir();
    let (perfect, rewrites) = record(false);
    let (wrong, rewrites_again) = record(true);
    assert_eq!(rewrites, rewrites_again);
    assert_ne!(perfect, wrong);
    check_or_write(&dir.join("transcript_perfect.jsonl"), &perfect);
    check_or_write(&dir.join("transcript_wrong.jsonl"), &wrong);
    check_or_write(&dir.join("rewrites.jsonl"), &rewrites);
    if updating() {
        write_golden("config.toml", "golden");
        write_golden("config_wrong.toml", "golden_wrong");
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use tabqa_core::metrics::recall_at_k;
use tabqa_core::retrieval::{embed_store, retrieve_for_question, rewrite_sentences, DocumentStore};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{write_json, write_jsonl};
use crate::providers::Providers;
use crate::records::{read_documents, read_questions, QuestionRecord, RecallItem, RecallReport, RetrievalLine};

use super::worker_pool;

#[derive(Debug, Clone)]
pub struct RetrieveArgs {
    pub triples: PathBuf,
    pub docs: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrieveOutcome {
    pub lines: Vec<RetrievalLine>,
    pub recall: RecallReport,
}

/// Rewrites and embeds every referenced document, retrieves for every
/// question and writes `retrieval.jsonl` and `recall.json` under `out`.
pub fn cmd_retrieve(
    args: &RetrieveArgs,
    config: &RunConfig,
    providers: &Providers,
) -> Result<RetrieveOutcome, CliError> {
    let questions = read_questions(&args.triples)?;
    let docs = read_documents(&args.docs)?;
    let outcome = retrieve(&args.triples, &questions, &docs, config, providers)?;
    write_retrieval(&args.out, &outcome)?;
    Ok(outcome)
}

pub(crate) fn write_retrieval(out: &Path, outcome: &RetrieveOutcome) -> Result<(), CliError> {
    write_jsonl(&out.join("retrieval.jsonl"), &outcome.lines)?;
    write_json(&out.join("recall.json"), &outcome.recall)
}

pub(crate) fn retrieve(
    questions_path: &Path,
    questions: &[(usize, QuestionRecord)],
    docs: &[(usize, tabqa_core::dataset::Document)],
    config: &RunConfig,
    providers: &Providers,
) -> Result<RetrieveOutcome, CliError> {
    let by_id: BTreeMap<&str, &tabqa_core::dataset::Document> =
        docs.iter().map(|(_, d)| (d.doc_id.as_str(), d)).collect();
    let mut needed = BTreeSet::new();
    for (line, q) in questions {
        if !by_id.contains_key(q.doc_id.as_str()) {
            return Err(CliError::input(
                questions_path,
                Some(*line),
                Some("doc_id"),
                format!("unknown doc_id {:?}", q.doc_id),
            ));
        }
        needed.insert(q.doc_id.as_str());
    }

    let retrieval = &config.retrieval;
    let mut stores: BTreeMap<&str, DocumentStore> = BTreeMap::new();
    for doc_id in needed {
        let mut store = by_id[doc_id].store(&retrieval.abbreviations);
        let failed = rewrite_sentences(&mut store, providers.rewriter.as_ref(), retrieval.parallelism);
        if failed > 0 {
            log::warn!(
                "{doc_id}: {failed} of {} sentence rewrites failed; raw text used",
                store.len()
            );
        }
        embed_store(&mut store, providers.embedder.as_ref(), retrieval)?;
        stores.insert(doc_id, store);
    }

    let pool = worker_pool(config.workers);
    let results: Vec<Result<RetrievalLine, CliError>> = pool.install(|| {
        questions
            .par_iter()
            .map(|(_, q)| {
                let store = &stores[q.doc_id.as_str()];
                let record = retrieve_for_question(
                    store,
                    &q.question,
                    providers.rewriter.as_ref(),
                    providers.embedder.as_ref(),
                    retrieval,
                )?;
                Ok(RetrievalLine {
                    id: q.id.clone(),
                    record,
                })
            })
            .collect()
    });
    let lines = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let recall = recall_report(questions, &lines, retrieval.k, &config.recall_ks)?;
    Ok(RetrieveOutcome { lines, recall })
}

pub(crate) fn recall_report(
    questions: &[(usize, QuestionRecord)],
    lines: &[RetrievalLine],
    k: usize,
    ks: &[usize],
) -> Result<RecallReport, CliError> {
    let mut items = Vec::new();
    let mut unscored = Vec::new();
    for ((_, q), line) in questions.iter().zip(lines) {
        let Some(relevant) = q.relevant() else {
            unscored.push(q.id.clone());
            continue;
        };
        let ranked = line.record.merged_ids();
        let mut recall = BTreeMap::new();
        for &at in ks {
            let r = recall_at_k(&ranked, &relevant, at).map_err(|e| CliError::Config(e.to_string()))?;
            recall.insert(at.to_string(), r);
        }
        items.push(RecallItem {
            id: q.id.clone(),
            recall,
        });
    }
    let mut mean = BTreeMap::new();
    if !items.is_empty() {
        for &at in ks {
            let key = at.to_string();
            let total: f64 = items.iter().map(|i| i.recall[&key]).sum();
            mean.insert(key, total / items.len() as f64);
        }
    }
    Ok(RecallReport {
        k,
        ks: ks.to_vec(),
        items,
        unscored,
        mean,
    })
}

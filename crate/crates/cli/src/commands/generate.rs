use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tabqa_core::dataset::Document;
use tabqa_core::generation::{run_oneshot, run_tabtalk, Evidence, Exemplar};
use tabqa_core::providers::ChatProvider;
use tabqa_core::{serialize_html, GenerationError};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{read_jsonl, write_jsonl};
use crate::providers::Providers;
use crate::records::{
    parse_table, read_documents, read_questions, FailureLine, GeneratedLine, GenerationMode, QuestionRecord,
    RetrievalLine, TraceLine,
};

use super::worker_pool;

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub triples: PathBuf,
    /// Required unless the one-shot baseline reads whole documents.
    pub retrieval: Option<PathBuf>,
    /// Whole documents for the one-shot baseline.
    pub docs: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerateOutcome {
    pub generated: Vec<GeneratedLine>,
    pub traces: Vec<TraceLine>,
    pub failures: Vec<FailureLine>,
}

impl GenerateOutcome {
    /// Exit status for a run whose outputs are already written.
    pub fn into_result(self, total: usize) -> Result<Self, CliError> {
        if self.failures.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Partial {
                failed: self.failures.len(),
                total,
                ids: self.failures.iter().map(|f| f.id.clone()).collect(),
            })
        }
    }
}

enum Item {
    Done(GeneratedLine, Option<TraceLine>),
    Failed(FailureLine),
}

/// Generates a table per question and writes `generated.jsonl`,
/// `traces.jsonl` and `failures.jsonl` under `out`. Failed items are
/// recorded and the command exits with a partial-failure status.
pub fn cmd_generate(
    args: &GenerateArgs,
    config: &RunConfig,
    providers: &Providers,
) -> Result<GenerateOutcome, CliError> {
    let llm = providers.llm()?;
    let questions = read_questions(&args.triples)?;
    let whole_docs = config.baseline_oneshot && args.docs.is_some();
    let retrieval = match (&args.retrieval, whole_docs) {
        (Some(path), _) => read_retrieval(path)?,
        (None, true) => BTreeMap::new(),
        (None, false) => {
            return Err(CliError::Config(
                "generate needs --retrieval, or --docs together with --baseline-oneshot".into(),
            ))
        }
    };
    let docs = match (&args.docs, whole_docs) {
        (Some(path), true) => read_documents(path)?
            .into_iter()
            .map(|(_, d)| (d.doc_id.clone(), d))
            .collect(),
        _ => BTreeMap::new(),
    };
    let exemplars = match &config.exemplars {
        Some(path) => read_exemplars(path)?,
        None => Vec::new(),
    };
    let outcome = generate(&questions, &retrieval, &docs, &exemplars, llm, config);
    write_generation(&args.out, &outcome)?;
    outcome.into_result(questions.len())
}

pub(crate) fn write_generation(out: &Path, outcome: &GenerateOutcome) -> Result<(), CliError> {
    write_jsonl(&out.join("generated.jsonl"), &outcome.generated)?;
    write_jsonl(&out.join("traces.jsonl"), &outcome.traces)?;
    write_jsonl(&out.join("failures.jsonl"), &outcome.failures)
}

pub(crate) fn read_retrieval(path: &Path) -> Result<BTreeMap<String, RetrievalLine>, CliError> {
    let mut by_id = BTreeMap::new();
    for (line, record) in read_jsonl::<RetrievalLine>(path)? {
        if by_id.insert(record.id.clone(), record).is_some() {
            return Err(CliError::input(path, Some(line), Some("id"), "duplicate id"));
        }
    }
    Ok(by_id)
}

/// Triples with ground-truth tables, usable as worked examples.
pub(crate) fn read_exemplars(path: &Path) -> Result<Vec<(String, Exemplar)>, CliError> {
    let mut out = Vec::new();
    for (line, record) in read_questions(path)? {
        let Some(html) = &record.table_html else {
            return Err(CliError::input(
                path,
                Some(line),
                Some("table_html"),
                "exemplars need a table",
            ));
        };
        let table = parse_table(path, line, html)?;
        out.push((
            record.id,
            Exemplar {
                question: record.question,
                table,
            },
        ));
    }
    Ok(out)
}

/// The exemplar for item `index`, seeded per item so the choice does not
/// depend on scheduling. An item is never its own example.
fn pick_exemplar<'a>(exemplars: &'a [(String, Exemplar)], id: &str, index: usize, seed: u64) -> Option<&'a Exemplar> {
    let pool: Vec<&Exemplar> = exemplars.iter().filter(|(eid, _)| eid != id).map(|(_, e)| e).collect();
    if pool.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    Some(pool[rng.gen_range(0..pool.len())])
}

fn failure(id: &str, error: GenerationError) -> FailureLine {
    match error {
        GenerationError::StageFailed {
            stage,
            attempts,
            last_error,
            partial,
        } => FailureLine {
            id: id.to_string(),
            stage: stage.to_string(),
            attempts,
            error: last_error,
            partial: Some(*partial),
        },
        other => FailureLine {
            id: id.to_string(),
            stage: "setup".into(),
            attempts: 0,
            error: other.to_string(),
            partial: None,
        },
    }
}

fn evidence_for(
    q: &QuestionRecord,
    retrieval: &BTreeMap<String, RetrievalLine>,
    docs: &BTreeMap<String, Document>,
    config: &RunConfig,
) -> Result<Vec<Evidence>, String> {
    if config.baseline_oneshot {
        if let Some(doc) = docs.get(&q.doc_id) {
            let store = doc.store(&config.retrieval.abbreviations);
            return Ok(store
                .sentences()
                .iter()
                .map(|s| Evidence {
                    sentence_id: s.id,
                    text: s.raw.clone(),
                })
                .collect());
        }
        if !docs.is_empty() {
            return Err(format!("unknown doc_id {:?}", q.doc_id));
        }
    }
    retrieval
        .get(&q.id)
        .map(|line| line.record.merged.iter().map(Evidence::from).collect())
        .ok_or_else(|| "no retrieval record for this id".to_string())
}

pub(crate) fn generate(
    questions: &[(usize, QuestionRecord)],
    retrieval: &BTreeMap<String, RetrievalLine>,
    docs: &BTreeMap<String, Document>,
    exemplars: &[(String, Exemplar)],
    llm: &dyn ChatProvider,
    config: &RunConfig,
) -> GenerateOutcome {
    let pool = worker_pool(config.workers);
    let items: Vec<Item> = pool.install(|| {
        questions
            .par_iter()
            .enumerate()
            .map(|(index, (_, q))| {
                let evidence = match evidence_for(q, retrieval, docs, config) {
                    Ok(e) => e,
                    Err(error) => {
                        return Item::Failed(FailureLine {
                            id: q.id.clone(),
                            stage: "setup".into(),
                            attempts: 0,
                            error,
                            partial: None,
                        })
                    }
                };
                if config.baseline_oneshot {
                    match run_oneshot(&q.question, &evidence, llm, &config.generation) {
                        Ok(run) => Item::Done(
                            GeneratedLine {
                                id: q.id.clone(),
                                mode: GenerationMode::OneShot,
                                table_html: serialize_html(&run.table),
                                structure_retries: run.retries,
                                fill_retries: 0,
                                unfilled: Vec::new(),
                            },
                            None,
                        ),
                        Err(e) => Item::Failed(failure(&q.id, e)),
                    }
                } else {
                    let exemplar = pick_exemplar(exemplars, &q.id, index, config.seed);
                    match run_tabtalk(&q.question, &evidence, llm, exemplar, &config.generation) {
                        Ok(run) => Item::Done(
                            GeneratedLine {
                                id: q.id.clone(),
                                mode: GenerationMode::TwoStage,
                                table_html: serialize_html(&run.table),
                                structure_retries: run.structure_retries,
                                fill_retries: run.fill_retries,
                                unfilled: run.trace.unfilled().iter().map(|c| c.label()).collect(),
                            },
                            Some(TraceLine {
                                id: q.id.clone(),
                                plan: run.plan,
                                trace: run.trace,
                            }),
                        ),
                        Err(e) => Item::Failed(failure(&q.id, e)),
                    }
                }
            })
            .collect()
    });

    let mut outcome = GenerateOutcome::default();
    for item in items {
        match item {
            Item::Done(line, trace) => {
                outcome.generated.push(line);
                outcome.traces.extend(trace);
            }
            Item::Failed(f) => {
                log::warn!(
                    "{}: {} stage failed after {} attempts: {}",
                    f.id,
                    f.stage,
                    f.attempts,
                    f.error
                );
                outcome.failures.push(f);
            }
        }
    }
    outcome
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::providers::Providers;
use crate::records::{parse_table, read_documents, read_questions, TableLine};

use super::evaluate::{evaluate, write_evaluation, EvaluateOutcome};
use super::generate::{generate, read_exemplars, write_generation, GenerateOutcome};
use super::retrieve::{retrieve, write_retrieval, RetrieveOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub retrieval: RetrieveOutcome,
    pub generation: GenerateOutcome,
    pub evaluation: EvaluateOutcome,
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("pipeline.{key} is not set")))
}

/// Retrieval, generation and evaluation in one run. Every output file of
/// the three stages is written under `out` even when some items fail;
/// failures then give a partial-failure status.
pub fn cmd_pipeline(config: &RunConfig, providers: &Providers, out: &Path) -> Result<PipelineOutcome, CliError> {
    let llm = providers.llm()?;
    let questions_path = required(&config.pipeline.questions, "questions")?;
    let docs_path = required(&config.pipeline.docs, "docs")?;
    let questions = read_questions(questions_path)?;
    let docs = read_documents(docs_path)?;

    let mut groundtruth = Vec::new();
    for (line, q) in &questions {
        if let Some(html) = &q.table_html {
            let table = parse_table(questions_path, *line, html)?;
            let record = TableLine {
                id: q.id.clone(),
                table_html: html.clone(),
                relevant_sentence_ids: q.relevant_sentence_ids.clone(),
            };
            groundtruth.push((record, table));
        }
    }
    let exemplars = match &config.exemplars {
        Some(path) => read_exemplars(path)?,
        None => Vec::new(),
    };

    let retrieval = retrieve(questions_path, &questions, &docs, config, providers)?;
    write_retrieval(out, &retrieval)?;

    let by_id: BTreeMap<String, _> = retrieval.lines.iter().map(|l| (l.id.clone(), l.clone())).collect();
    let whole_docs = if config.baseline_oneshot {
        docs.iter().map(|(_, d)| (d.doc_id.clone(), d.clone())).collect()
    } else {
        BTreeMap::new()
    };
    let generation = generate(&questions, &by_id, &whole_docs, &exemplars, llm, config);
    write_generation(out, &generation)?;

    let generated: Vec<(usize, TableLine)> = generation
        .generated
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let line = TableLine {
                id: g.id.clone(),
                table_html: g.table_html.clone(),
                relevant_sentence_ids: None,
            };
            (i + 1, line)
        })
        .collect();
    let evaluation = evaluate(&generated, &groundtruth, Some(&by_id), config)?;
    write_evaluation(out, &evaluation)?;

    let total = questions.len();
    if !generation.failures.is_empty() {
        return Err(CliError::Partial {
            failed: generation.failures.len(),
            total,
            ids: generation.failures.iter().map(|f| f.id.clone()).collect(),
        });
    }
    Ok(PipelineOutcome {
        retrieval,
        generation,
        evaluation,
    })
}

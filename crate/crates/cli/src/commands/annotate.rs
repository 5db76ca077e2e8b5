use std::path::{Path, PathBuf};

use tabqa_core::dataset::{
    apply_review, build_question_prompt, coverage_ratio, filter_tables, match_all, Exclusion, QaTriple, ReviewEntry,
    TableRecord,
};
use tabqa_core::retrieval::RetrievalConfig;

use crate::error::CliError;
use crate::io::{read_jsonl, read_jsonl_values, write_jsonl};
use crate::records::{check_unique_ids, document_stores, parse_table, read_documents, MatchLine, QuestionPromptLine};

#[derive(Debug, Clone)]
pub struct AnnotateArgs {
    pub docs: PathBuf,
    pub tables: PathBuf,
    pub out: PathBuf,
    pub review: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotateOutcome {
    pub triples: Vec<QaTriple>,
    pub excluded: Vec<Exclusion>,
    /// Retained tables that still need a question.
    pub awaiting_question: Vec<String>,
}

/// Matches cells to sentences, applies reviews, filters by coverage and
/// writes `matches.jsonl`, `triples.jsonl`, `exclusions.jsonl` and
/// `question_prompts.jsonl` under `out`.
pub fn cmd_annotate(args: &AnnotateArgs) -> Result<AnnotateOutcome, CliError> {
    let docs = read_documents(&args.docs)?;
    let stores = document_stores(&docs, &RetrievalConfig::default().abbreviations);

    let records: Vec<(usize, TableRecord)> = read_jsonl(&args.tables)?;
    check_unique_ids(&args.tables, records.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    let mut tables = Vec::with_capacity(records.len());
    for (line, record) in records {
        if !stores.contains_key(&record.doc_id) {
            return Err(CliError::input(
                &args.tables,
                Some(line),
                Some("doc_id"),
                format!("unknown doc_id {:?}", record.doc_id),
            ));
        }
        let table = parse_table(&args.tables, line, &record.table_html)?;
        tables.push((record, table));
    }

    let reviews: Vec<ReviewEntry> = match &args.review {
        Some(path) => read_jsonl_values(path)?,
        None => Vec::new(),
    };

    let mut candidates = match_all(&tables, &stores);
    for candidate in &mut candidates {
        for warning in apply_review(&candidate.id, &candidate.table, &mut candidate.matches, &reviews) {
            log::warn!("{warning}");
        }
    }

    let match_lines: Vec<MatchLine> = candidates
        .iter()
        .map(|c| {
            let coverage = coverage_ratio(&c.table, &c.matches);
            MatchLine {
                id: c.id.clone(),
                doc_id: c.doc_id.clone(),
                coverage,
                excluded: coverage.excluded(),
                matches: c.matches.clone(),
            }
        })
        .collect();

    let outcome = filter_tables(candidates);
    let mut triples = Vec::new();
    let mut prompts = Vec::new();
    for candidate in &outcome.retained {
        match candidate.question.as_deref().map(str::trim).filter(|q| !q.is_empty()) {
            Some(q) => triples.push(QaTriple::from_candidate(candidate, q)),
            None => prompts.push(QuestionPromptLine {
                id: candidate.id.clone(),
                doc_id: candidate.doc_id.clone(),
                prompt: build_question_prompt(&candidate.table),
            }),
        }
    }

    write_outputs(&args.out, &match_lines, &triples, &outcome.excluded, &prompts)?;
    Ok(AnnotateOutcome {
        triples,
        excluded: outcome.excluded,
        awaiting_question: prompts.into_iter().map(|p| p.id).collect(),
    })
}

fn write_outputs(
    out: &Path,
    matches: &[MatchLine],
    triples: &[QaTriple],
    excluded: &[Exclusion],
    prompts: &[QuestionPromptLine],
) -> Result<(), CliError> {
    write_jsonl(&out.join("matches.jsonl"), matches)?;
    write_jsonl(&out.join("triples.jsonl"), triples)?;
    write_jsonl(&out.join("exclusions.jsonl"), excluded)?;
    write_jsonl(&out.join("question_prompts.jsonl"), prompts)
}

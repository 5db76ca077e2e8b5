//! Line formats of the files the commands read and write.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use tabqa_core::dataset::{CellMatch, Coverage, Document};
use tabqa_core::generation::{FillTrace, PartialRun, StructurePlan};
use tabqa_core::metrics::ItemScores;
use tabqa_core::retrieval::{DocumentStore, RetrievalRecord};
use tabqa_core::{parse_html_table, HierarchicalTable};

use crate::error::CliError;
use crate::io::read_jsonl;

/// A question over one document. Triples written by `annotate` have this
/// shape; `table_html` and `relevant_sentence_ids` are the ground truth and
/// may be absent when only generation is wanted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub id: String,
    pub doc_id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_html: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_sentence_ids: Option<Vec<usize>>,
}

impl QuestionRecord {
    pub fn relevant(&self) -> Option<BTreeSet<usize>> {
        self.relevant_sentence_ids
            .as_ref()
            .filter(|ids| !ids.is_empty())
            .map(|ids| ids.iter().copied().collect())
    }
}

/// Any record carrying an id and a table; extra fields are ignored so that
/// triples and generated files both qualify.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct TableLine {
    pub id: String,
    pub table_html: String,
    #[serde(default)]
    pub relevant_sentence_ids: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalLine {
    pub id: String,
    #[serde(flatten)]
    pub record: RetrievalRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallItem {
    pub id: String,
    pub recall: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub k: usize,
    pub ks: Vec<usize>,
    pub items: Vec<RecallItem>,
    /// Questions without relevant sentence ids, left out of the means.
    pub unscored: Vec<String>,
    pub mean: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    TwoStage,
    OneShot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedLine {
    pub id: String,
    pub mode: GenerationMode,
    pub table_html: String,
    pub structure_retries: usize,
    pub fill_retries: usize,
    /// Cells the model left without a value, as `R{row}C{col}`.
    pub unfilled: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub id: String,
    pub plan: StructurePlan,
    pub trace: FillTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureLine {
    pub id: String,
    pub stage: String,
    pub attempts: usize,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial: Option<PartialRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchLine {
    pub id: String,
    pub doc_id: String,
    pub coverage: Coverage,
    pub excluded: bool,
    pub matches: Vec<CellMatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPromptLine {
    pub id: String,
    pub doc_id: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreLine<'a> {
    #[serde(flatten)]
    pub scores: &'a ItemScores,
    pub status: ItemStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Scored,
    /// No generated table for this id; every score is zero.
    Missing,
    /// The generated HTML did not parse; every score is zero.
    Unparseable,
}

pub fn read_documents(path: &Path) -> Result<Vec<(usize, Document)>, CliError> {
    let docs: Vec<(usize, Document)> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for (line, doc) in &docs {
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CliError::input(
                path,
                Some(*line),
                Some("doc_id"),
                format!("duplicate doc_id {:?}", doc.doc_id),
            ));
        }
    }
    Ok(docs)
}

pub fn document_stores(docs: &[(usize, Document)], abbreviations: &[String]) -> BTreeMap<String, DocumentStore> {
    docs.iter()
        .map(|(_, d)| (d.doc_id.clone(), d.store(abbreviations)))
        .collect()
}

/// Rejects repeated ids, which would make outputs ambiguous.
pub fn check_unique_ids<'a>(path: &Path, ids: impl IntoIterator<Item = (usize, &'a str)>) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for (line, id) in ids {
        if !seen.insert(id) {
            return Err(CliError::input(
                path,
                Some(line),
                Some("id"),
                format!("duplicate id {id:?}"),
            ));
        }
    }
    Ok(())
}

pub fn read_questions(path: &Path) -> Result<Vec<(usize, QuestionRecord)>, CliError> {
    let records: Vec<(usize, QuestionRecord)> = read_jsonl(path)?;
    check_unique_ids(path, records.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    Ok(records)
}

pub fn parse_table(path: &Path, line: usize, html: &str) -> Result<HierarchicalTable, CliError> {
    parse_html_table(html).map_err(|e| CliError::html(path, line, e))
}

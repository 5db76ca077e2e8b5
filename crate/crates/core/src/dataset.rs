//! Dataset construction: matching table cells to document sentences,
//! coverage filtering, question prompts, triples and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::GenerationError;
use crate::generation::{extract_fenced_block, CellRef};
use crate::metrics::KEY_PATH_SEPARATOR;
use crate::retrieval::{split_sentences, DocumentStore};
use crate::table::{normalize_text, HierarchicalTable, TreeCoord};
use crate::table_io::serialize_html;

/// Uncovered share of body cells at or above which a table is excluded,
/// as a fraction `EXCLUDE_NUMERATOR / EXCLUDE_DENOMINATOR`.
pub const EXCLUDE_NUMERATOR: usize = 3;
pub const EXCLUDE_DENOMINATOR: usize = 10;

pub const QUESTIONS_BLOCK: &str = "questions";

/// `{doc_id, sentences}`; `text` is split when `sentences` is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl Document {
    pub fn store(&self, abbreviations: &[String]) -> DocumentStore {
        match (&self.text, self.sentences.is_empty()) {
            (Some(text), true) => DocumentStore::from_sentences(&self.doc_id, split_sentences(text, abbreviations)),
            _ => DocumentStore::from_sentences(&self.doc_id, self.sentences.iter().cloned()),
        }
    }

    /// Whitespace tokens over all sentences (or the raw text).
    pub fn token_count(&self) -> usize {
        let from_sentences: usize = self.sentences.iter().map(|s| s.split_whitespace().count()).sum();
        if from_sentences == 0 {
            self.text.as_deref().map_or(0, |t| t.split_whitespace().count())
        } else {
            from_sentences
        }
    }
}

/// A number with currency symbols and thousands separators removed.
/// Negative when written with a leading minus or in parentheses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NumericToken {
    /// Canonical magnitude: no leading zeros, no trailing fractional zeros.
    pub magnitude: String,
    pub negative: bool,
}

impl NumericToken {
    pub fn signed(&self) -> String {
        if self.negative {
            format!("-{}", self.magnitude)
        } else {
            self.magnitude.clone()
        }
    }
}

const NUMBER_CORE: &str = r"(?:[$€£¥][ \t]?)?(?:\d{1,3}(?:(?:,[ \t]?|[ \t])\d{3})+|\d+)(?:\.\d+)?%?";

fn full_number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^(?:\((?P<paren>{NUMBER_CORE})\)|(?P<minus>[-−–])?[ \t]?(?P<plain>{NUMBER_CORE}))$"
        ))
        .expect("regex")
    })
}

fn scan_number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"\(?[-−–]?{NUMBER_CORE}\)?")).expect("regex"))
}

fn canonical_magnitude(core: &str) -> String {
    let digits: String = core.chars().filter(|c| c.is_ascii_digit() || *c == '.').collect();
    let (int, frac) = digits.split_once('.').unwrap_or((&digits, ""));
    let int = int.trim_start_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}

/// Parses a cell whose entire text is one number.
pub fn parse_numeric_cell(text: &str) -> Option<NumericToken> {
    let text = normalize_text(text);
    let caps = full_number_regex().captures(&text)?;
    if let Some(core) = caps.name("paren") {
        return Some(NumericToken {
            magnitude: canonical_magnitude(core.as_str()),
            negative: true,
        });
    }
    let core = caps.name("plain")?;
    Some(NumericToken {
        magnitude: canonical_magnitude(core.as_str()),
        negative: caps.name("minus").is_some(),
    })
}

/// All numbers mentioned in `text`, in order. A number glued to letters,
/// digits or a decimal point on either side is skipped.
pub fn numeric_tokens(text: &str) -> Vec<NumericToken> {
    let mut out = Vec::new();
    for m in scan_number_regex().find_iter(text) {
        let mut before = text[..m.start()].chars().rev();
        let mut after = text[m.end()..].chars();
        let glued_before = match before.next() {
            Some(c) if c.is_alphanumeric() => true,
            Some('.') => before.next().is_some_and(|c| c.is_ascii_digit()),
            _ => false,
        };
        let glued_after = match after.next() {
            Some(c) if c.is_alphanumeric() => true,
            Some('.') => after.next().is_some_and(|c| c.is_ascii_digit()),
            _ => false,
        };
        if glued_before || glued_after {
            continue;
        }
        let raw = m.as_str().trim();
        let parsed = parse_numeric_cell(raw).or_else(|| parse_numeric_cell(raw.trim_matches(|c| c == '(' || c == ')')));
        if let Some(token) = parsed {
            out.push(token);
        }
    }
    out
}

fn phrase_occurs(re: &Regex, sentence: &str, phrase: &str) -> bool {
    let first = phrase.chars().next().is_some_and(char::is_alphanumeric);
    let last = phrase.chars().next_back().is_some_and(char::is_alphanumeric);
    let word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    let found = re.find_iter(sentence).any(|m| {
        let before = sentence[..m.start()].chars().next_back();
        let after = sentence[m.end()..].chars().next();
        !(first && word(before)) && !(last && word(after))
    });
    found
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MatchKind {
    Numeric {
        token: String,
        /// The cell's number is negative; sentences match on magnitude.
        cell_negative: bool,
    },
    Textual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    #[default]
    Auto,
    Confirmed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMatch {
    /// `{table_id}/R{row}C{col}`, 1-based.
    pub match_id: String,
    pub cell: CellRef,
    pub left: TreeCoord,
    pub top: TreeCoord,
    pub sentence_ids: Vec<usize>,
    #[serde(flatten)]
    pub kind: MatchKind,
    pub status: ReviewStatus,
}

impl CellMatch {
    pub fn counts(&self) -> bool {
        self.status != ReviewStatus::Rejected && !self.sentence_ids.is_empty()
    }
}

pub fn match_id(table_id: &str, cell: CellRef) -> String {
    format!("{table_id}/{}", cell.label())
}

/// Every body cell with at least one candidate sentence. All candidates are
/// kept for review.
pub fn match_cells_to_sentences(table_id: &str, table: &HierarchicalTable, store: &DocumentStore) -> Vec<CellMatch> {
    let sentence_numbers: Vec<BTreeSet<String>> = store
        .sentences()
        .iter()
        .map(|s| numeric_tokens(&s.raw).into_iter().map(|t| t.magnitude).collect())
        .collect();
    let normalized: Vec<String> = store.sentences().iter().map(|s| normalize_text(&s.raw)).collect();
    let left_coords = table.left().leaf_coords();
    let top_coords = table.top().leaf_coords();
    let mut out = Vec::new();
    for (row, cells) in table.body().iter().enumerate() {
        for (col, value) in cells.iter().enumerate() {
            if value.is_empty() {
                continue;
            }
            let (kind, sentence_ids): (MatchKind, Vec<usize>) = match parse_numeric_cell(value) {
                Some(token) => (
                    MatchKind::Numeric {
                        token: token.signed(),
                        cell_negative: token.negative,
                    },
                    sentence_numbers
                        .iter()
                        .enumerate()
                        .filter(|(_, nums)| nums.contains(&token.magnitude))
                        .map(|(id, _)| id)
                        .collect(),
                ),
                None => {
                    let re = Regex::new(&format!("(?i){}", regex::escape(value))).expect("escaped pattern");
                    let ids = normalized
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| phrase_occurs(&re, s, value))
                        .map(|(id, _)| id)
                        .collect();
                    (MatchKind::Textual, ids)
                }
            };
            if sentence_ids.is_empty() {
                continue;
            }
            let cell = CellRef::new(row, col);
            out.push(CellMatch {
                match_id: match_id(table_id, cell),
                cell,
                left: left_coords[row].clone(),
                top: top_coords[col].clone(),
                sentence_ids,
                kind,
                status: ReviewStatus::Auto,
            });
        }
    }
    out
}

/// One line of a review file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewEntry {
    pub match_id: String,
    pub status: ReviewStatus,
    /// Replaces the candidate sentences when given.
    #[serde(default)]
    pub sentence_ids: Option<Vec<usize>>,
}

/// Applies reviews to one table's matches. A review for a cell with no
/// automatic match adds a manual match if it supplies sentence ids. Returns
/// warnings for reviews that could not be applied.
pub fn apply_review(
    table_id: &str,
    table: &HierarchicalTable,
    matches: &mut Vec<CellMatch>,
    reviews: &[ReviewEntry],
) -> Vec<String> {
    let prefix = format!("{table_id}/");
    let mut warnings = Vec::new();
    for review in reviews.iter().filter(|r| r.match_id.starts_with(&prefix)) {
        if let Some(m) = matches.iter_mut().find(|m| m.match_id == review.match_id) {
            m.status = review.status;
            if let Some(ids) = &review.sentence_ids {
                m.sentence_ids = ids.clone();
            }
            continue;
        }
        let cell = crate::generation::parse_cell_ref(&review.match_id[prefix.len()..]);
        match (cell, &review.sentence_ids) {
            (Some(cell), Some(ids)) if cell.row < table.rows() && cell.col < table.cols() => {
                let value = &table.body()[cell.row][cell.col];
                let kind = match parse_numeric_cell(value) {
                    Some(t) => MatchKind::Numeric {
                        token: t.signed(),
                        cell_negative: t.negative,
                    },
                    None => MatchKind::Textual,
                };
                matches.push(CellMatch {
                    match_id: review.match_id.clone(),
                    cell,
                    left: table.left().leaf_coords()[cell.row].clone(),
                    top: table.top().leaf_coords()[cell.col].clone(),
                    sentence_ids: ids.clone(),
                    kind,
                    status: review.status,
                });
            }
            _ => warnings.push(format!("review for {} matches no cell", review.match_id)),
        }
    }
    matches.sort_by_key(|m| m.cell);
    warnings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
}

impl Coverage {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }

    /// Uncovered share is 30% or more, decided in exact integer arithmetic.
    pub fn excluded(&self) -> bool {
        let uncovered = self.total - self.covered;
        EXCLUDE_DENOMINATOR * uncovered >= EXCLUDE_NUMERATOR * self.total
    }
}

/// Body cells with at least one auto or confirmed match, over all body cells.
pub fn coverage_ratio(table: &HierarchicalTable, matches: &[CellMatch]) -> Coverage {
    let covered: BTreeSet<CellRef> = matches.iter().filter(|m| m.counts()).map(|m| m.cell).collect();
    Coverage {
        covered: covered.len(),
        total: table.rows() * table.cols(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub doc_id: String,
    pub question: Option<String>,
    pub table: HierarchicalTable,
    pub matches: Vec<CellMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub covered: usize,
    pub total: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub retained: Vec<Candidate>,
    pub excluded: Vec<Exclusion>,
}

pub fn filter_tables(candidates: Vec<Candidate>) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for candidate in candidates {
        let coverage = coverage_ratio(&candidate.table, &candidate.matches);
        if coverage.excluded() {
            outcome.excluded.push(Exclusion {
                id: candidate.id,
                covered: coverage.covered,
                total: coverage.total,
                coverage: coverage.ratio(),
            });
        } else {
            outcome.retained.push(candidate);
        }
    }
    outcome
}

/// `{id, doc_id, table_html, question?}`: a table awaiting annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRecord {
    pub id: String,
    pub doc_id: String,
    pub table_html: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

/// Matches every table against its document, in parallel. Output order
/// follows input order.
pub fn match_all(
    tables: &[(TableRecord, HierarchicalTable)],
    stores: &BTreeMap<String, DocumentStore>,
) -> Vec<Candidate> {
    tables
        .par_iter()
        .map(|(record, table)| {
            let matches = stores
                .get(&record.doc_id)
                .map(|store| match_cells_to_sentences(&record.id, table, store))
                .unwrap_or_default();
            Candidate {
                id: record.id.clone(),
                doc_id: record.doc_id.clone(),
                question: record.question.clone(),
                table: table.clone(),
                matches,
            }
        })
        .collect()
}

/// `{id, doc_id, question, table_html, relevant_sentence_ids}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaTriple {
    pub id: String,
    pub doc_id: String,
    pub question: String,
    pub table_html: String,
    pub relevant_sentence_ids: Vec<usize>,
}

impl QaTriple {
    /// Sentence ids are the union over matches that count toward coverage.
    pub fn from_candidate(candidate: &Candidate, question: &str) -> Self {
        let relevant: BTreeSet<usize> = candidate
            .matches
            .iter()
            .filter(|m| m.counts())
            .flat_map(|m| m.sentence_ids.iter().copied())
            .collect();
        Self {
            id: candidate.id.clone(),
            doc_id: candidate.doc_id.clone(),
            question: question.to_string(),
            table_html: serialize_html(&candidate.table),
            relevant_sentence_ids: relevant.into_iter().collect(),
        }
    }
}

/// Prompt asking for questions whose complete answer is exactly this table.
pub fn build_question_prompt(table: &HierarchicalTable) -> String {
    let mut p = String::new();
    p.push_str(
        "Write questions about a document whose complete answer is exactly the table below: \
         every row and column of the table is needed, and nothing outside it.\n\n",
    );
    if !table.stub_header().is_empty() {
        let _ = writeln!(p, "Row header title: {}", table.stub_header());
    }
    let left: Vec<String> = table
        .left()
        .leaf_paths()
        .iter()
        .map(|p| p.join(KEY_PATH_SEPARATOR))
        .collect();
    let top: Vec<String> = table
        .top()
        .leaf_paths()
        .iter()
        .map(|p| p.join(KEY_PATH_SEPARATOR))
        .collect();
    p.push_str("Rows:\n");
    for l in &left {
        let _ = writeln!(p, "- {l}");
    }
    p.push_str("Columns:\n");
    for t in &top {
        let _ = writeln!(p, "- {t}");
    }
    p.push_str("Cells:\n");
    for (row, l) in left.iter().enumerate() {
        for (col, t) in top.iter().enumerate() {
            let _ = writeln!(p, "- {l} | {t} = {}", table.body()[row][col]);
        }
    }
    p.push_str(
        "\nWrite three questions in natural language. Do not mention the table or its layout.\n\
         \nOutput format:\n\
         Give exactly one fenced block labeled questions holding a JSON array of strings:\n\
         ```questions\n[\"...\", \"...\", \"...\"]\n```\n",
    );
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionStatus {
    #[default]
    Generated,
    Refined,
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateQuestion {
    pub text: String,
    pub status: QuestionStatus,
}

pub fn parse_question_response(response: &str) -> Result<Vec<CandidateQuestion>, GenerationError> {
    let block =
        extract_fenced_block(response, QUESTIONS_BLOCK).ok_or(GenerationError::NoFencedBlock(QUESTIONS_BLOCK))?;
    let list: Vec<String> = serde_json::from_str(block.trim()).map_err(|e| GenerationError::MalformedBlock {
        block: QUESTIONS_BLOCK,
        reason: e.to_string(),
    })?;
    Ok(list
        .into_iter()
        .map(|q| normalize_text(&q))
        .filter(|q| !q.is_empty())
        .map(|text| CandidateQuestion {
            text,
            status: QuestionStatus::Generated,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub triples: usize,
    /// Mean whitespace tokens per input document, when documents are known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_input_tokens: Option<f64>,
    pub mean_rows: f64,
    pub mean_cols: f64,
    pub flat_tables: usize,
    pub hierarchical_tables: usize,
}

/// Statistics over parsed triples; `documents` maps doc id to token count.
pub fn corpus_stats(
    tables: &[HierarchicalTable],
    doc_ids: &[&str],
    documents: Option<&BTreeMap<String, usize>>,
) -> CorpusStats {
    let n = tables.len();
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    let flat = tables.iter().filter(|t| t.is_flat()).count();
    let mean_input_tokens = documents.map(|docs| {
        let total: usize = doc_ids.iter().map(|id| docs.get(*id).copied().unwrap_or(0)).sum();
        mean(total)
    });
    CorpusStats {
        triples: n,
        mean_input_tokens,
        mean_rows: mean(tables.iter().map(HierarchicalTable::rows).sum()),
        mean_cols: mean(tables.iter().map(HierarchicalTable::cols).sum()),
        flat_tables: flat,
        hierarchical_tables: n - flat,
    }
}

//! Two-stage table generation: a structure prompt proposes the header trees,
//! then fill prompts extract each body cell with sentence citations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use crate::error::GenerationError;
use crate::metrics::KEY_PATH_SEPARATOR;
use crate::providers::{ChatMessage, ChatProvider, ChatRequest, DEFAULT_MAX_TOKENS};
use crate::retrieval::RetrievedSentence;
use crate::table::{CoordTree, HierarchicalTable, TreeCoord};
use crate::table_io::{parse_html_table, parse_html_table_with_warnings, serialize_html};

pub const SYSTEM_PROMPT: &str = "You build tables from document sentences. \
Use only facts stated in the sentences and follow the requested output format exactly.";

pub const STRUCTURE_BLOCK: &str = "structure";
pub const CELLS_BLOCK: &str = "cells";
pub const HTML_BLOCK: &str = "html";

/// A retrieved sentence shown to the model. Prompts number these from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub sentence_id: usize,
    pub text: String,
}

impl From<&RetrievedSentence> for Evidence {
    fn from(s: &RetrievedSentence) -> Self {
        Self {
            sentence_id: s.sentence_id,
            text: s.text.clone(),
        }
    }
}

/// A worked example for the structure prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub question: String,
    pub table: HierarchicalTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructurePlan {
    pub stub_header: String,
    pub left: CoordTree,
    pub top: CoordTree,
    pub rows: usize,
    pub cols: usize,
}

/// A body cell by leaf index. Prompts label it `R{row+1}C{col+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

impl CellRef {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn label(&self) -> String {
        format!("R{}C{}", self.row + 1, self.col + 1)
    }
}

impl StructurePlan {
    pub fn from_table(table: &HierarchicalTable) -> Self {
        Self {
            stub_header: table.stub_header().to_string(),
            left: table.left().clone(),
            top: table.top().clone(),
            rows: table.left().leaf_count(),
            cols: table.top().leaf_count(),
        }
    }

    /// The header trees over an empty body.
    pub fn skeleton(&self) -> HierarchicalTable {
        let body = vec![vec![""; self.cols]; self.rows];
        HierarchicalTable::new(&self.stub_header, self.left.clone(), self.top.clone(), body)
            .expect("plan dimensions match its trees")
    }

    pub fn cells(&self) -> Vec<CellRef> {
        (0..self.rows)
            .flat_map(|row| (0..self.cols).map(move |col| CellRef { row, col }))
            .collect()
    }

    /// Row-major batches of `batch_size` cells; `None` batches whole rows.
    pub fn batches(&self, batch_size: Option<usize>) -> Vec<Vec<CellRef>> {
        let size = batch_size.unwrap_or(self.cols).max(1);
        self.cells().chunks(size).map(<[CellRef]>::to_vec).collect()
    }

    fn check(&self, cell: CellRef) -> Result<(), GenerationError> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return Err(GenerationError::CellOutOfRange {
                row: cell.row,
                col: cell.col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: CellRef,
    pub left: TreeCoord,
    pub top: TreeCoord,
    pub query: Option<String>,
    /// Document sentence ids, in citation order.
    pub sources: Vec<usize>,
    pub value: String,
    pub conversion: Option<String>,
    /// False when the response had no answer for this cell.
    pub filled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FillTrace {
    pub cells: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FillTrace {
    /// Combines fragments, keeping records in row-major order.
    pub fn merge(fragments: impl IntoIterator<Item = FillTrace>) -> Self {
        let mut cells = BTreeMap::new();
        let mut warnings = Vec::new();
        for fragment in fragments {
            for record in fragment.cells {
                if cells.contains_key(&record.cell) {
                    warnings.push(format!("duplicate record for {}", record.cell.label()));
                    continue;
                }
                cells.insert(record.cell, record);
            }
            warnings.extend(fragment.warnings);
        }
        Self {
            cells: cells.into_values().collect(),
            warnings,
        }
    }

    pub fn unfilled(&self) -> Vec<CellRef> {
        self.cells.iter().filter(|c| !c.filled).map(|c| c.cell).collect()
    }
}

/// Work that finished before a stage failed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialRun {
    pub plan: Option<StructurePlan>,
    pub trace: Option<FillTrace>,
    pub responses: Vec<String>,
}

fn write_sentences(out: &mut String, evidence: &[Evidence]) {
    out.push_str("Sentences:\n");
    for (i, e) in evidence.iter().enumerate() {
        let _ = writeln!(out, "[{}] {}", i + 1, e.text);
    }
}

fn write_structure_block(out: &mut String, skeleton: &HierarchicalTable) {
    let _ = writeln!(out, "```{STRUCTURE_BLOCK}");
    out.push_str(&serialize_html(skeleton));
    let _ = writeln!(out, "\ndimensions: {} x {}", skeleton.rows(), skeleton.cols());
    out.push_str("```\n");
}

fn format_example_skeleton() -> HierarchicalTable {
    let left = CoordTree::flat(["Row A", "Row B"]).expect("labels");
    let top = CoordTree::new(vec![crate::table::HeaderNode::new(
        "Group",
        vec![
            crate::table::HeaderNode::leaf("Part 1").expect("label"),
            crate::table::HeaderNode::leaf("Part 2").expect("label"),
        ],
    )
    .expect("label")]);
    HierarchicalTable::new("Item", left, top, vec![vec![""; 2]; 2]).expect("valid")
}

/// Prompt for the structure stage.
pub fn build_structure_prompt(
    question: &str,
    evidence: &[Evidence],
    exemplar: Option<&Exemplar>,
) -> Result<String, GenerationError> {
    if evidence.is_empty() {
        return Err(GenerationError::NoSentences);
    }
    let mut p = String::new();
    p.push_str("Design the header structure of a table that answers the question from the numbered sentences.\n\n");
    let _ = writeln!(p, "Question: {question}\n");
    write_sentences(&mut p, evidence);
    if let Some(example) = exemplar {
        p.push_str("\nExample\n");
        let _ = writeln!(p, "Question: {}", example.question);
        write_structure_block(&mut p, &StructurePlan::from_table(&example.table).skeleton());
    }
    p.push_str(
        "\nInstructions:\n\
         1. Reason step by step. Split the question into narrower sub-questions, work out which \
         sentences answer each one, then combine them into the full question.\n\
         2. Choose the row headers. A row header with sub-rows spans them with rowspan.\n\
         3. Choose the column headers. A column header with sub-columns spans them with colspan.\n\
         4. State the dimensions as leaf row headers x leaf column headers.\n\
         \nOutput format:\n\
         After your reasoning, give exactly one fenced block labeled structure. It holds an HTML \
         table skeleton followed by a dimensions line. Header cells are <th>, the top-left cell names \
         the row headers, and every body cell is an empty <td></td>. For example:\n",
    );
    write_structure_block(&mut p, &format_example_skeleton());
    Ok(p)
}

fn fenced_block_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?ms)^[ \t]*```[ \t]*([A-Za-z0-9_-]*)[ \t]*\r?\n(.*?)^[ \t]*```").expect("regex"))
}

/// Body of the last fenced block labeled `label`, or failing that the last
/// fenced block of any label.
pub fn extract_fenced_block<'a>(response: &'a str, label: &str) -> Option<&'a str> {
    let blocks: Vec<(&str, &str)> = fenced_block_regex()
        .captures_iter(response)
        .map(|c| (c.get(1).map_or("", |m| m.as_str()), c.get(2).map_or("", |m| m.as_str())))
        .collect();
    blocks
        .iter()
        .rev()
        .find(|(l, _)| l.eq_ignore_ascii_case(label))
        .or_else(|| blocks.last())
        .map(|(_, body)| *body)
}

fn dimensions_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?im)^[ \t]*dimensions[ \t]*:[ \t]*(\d+)[ \t]*[x×*][ \t]*(\d+)[ \t]*$").expect("regex")
    })
}

pub fn parse_structure_response(response: &str) -> Result<StructurePlan, GenerationError> {
    let block =
        extract_fenced_block(response, STRUCTURE_BLOCK).ok_or(GenerationError::NoFencedBlock(STRUCTURE_BLOCK))?;
    let malformed = |reason: String| GenerationError::MalformedBlock {
        block: STRUCTURE_BLOCK,
        reason,
    };
    let caps = dimensions_regex()
        .captures(block)
        .ok_or_else(|| malformed("missing a 'dimensions: R x C' line".into()))?;
    let parse_dim = |i: usize| {
        caps[i]
            .parse::<usize>()
            .map_err(|e| malformed(format!("bad dimension: {e}")))
    };
    let (declared_rows, declared_cols) = (parse_dim(1)?, parse_dim(2)?);
    let html = dimensions_regex().replace_all(block, "");
    let parsed = parse_html_table_with_warnings(&html).map_err(|e| malformed(e.to_string()))?;
    let table = parsed.table;
    let (left_leaves, top_leaves) = (table.left().leaf_count(), table.top().leaf_count());
    if (declared_rows, declared_cols) != (left_leaves, top_leaves) {
        return Err(GenerationError::DimensionMismatch {
            declared_rows,
            declared_cols,
            left_leaves,
            top_leaves,
        });
    }
    Ok(StructurePlan::from_table(&table))
}

fn key_path(tree: &CoordTree, coord: &TreeCoord) -> String {
    tree.resolve(coord)
        .expect("leaf coordinate from the same tree")
        .join(KEY_PATH_SEPARATOR)
}

/// Prompt for filling one batch of cells.
pub fn build_fill_prompt(
    plan: &StructurePlan,
    question: &str,
    evidence: &[Evidence],
    batch: &[CellRef],
) -> Result<String, GenerationError> {
    if evidence.is_empty() {
        return Err(GenerationError::NoSentences);
    }
    for &cell in batch {
        plan.check(cell)?;
    }
    let left_coords = plan.left.leaf_coords();
    let top_coords = plan.top.leaf_coords();
    let mut p = String::new();
    p.push_str("Fill body cells of the table below using only the numbered sentences.\n\n");
    let _ = writeln!(p, "Question: {question}\n");
    p.push_str("Table structure:\n");
    p.push_str(&serialize_html(&plan.skeleton()));
    p.push_str("\n\n");
    write_sentences(&mut p, evidence);
    p.push_str("\nCells to fill:\n");
    for cell in batch {
        let _ = writeln!(
            p,
            "{}: row \"{}\", column \"{}\"",
            cell.label(),
            key_path(&plan.left, &left_coords[cell.row]),
            key_path(&plan.top, &top_coords[cell.col]),
        );
    }
    p.push_str(
        "\nFor each cell:\n\
         1. Write a precise query for the value the cell needs.\n\
         2. Find the sentences that state the value and cite them by number.\n\
         3. Check that the figure in the sentence refers to exactly this row and column.\n\
         4. If the sentence gives the value in a different unit or scale than the headers need, \
         convert it and describe the conversion.\n\
         If no sentence supports a value, give an empty value and no sources.\n\
         \nOutput format:\n\
         Give exactly one fenced block labeled cells with one JSON object per line, one line per \
         cell, in the order listed. For example:\n\
         ```cells\n\
         {\"cell\": \"R1C1\", \"query\": \"...\", \"value\": \"...\", \"sources\": [1], \"conversion\": null}\n\
         ```\n",
    );
    Ok(p)
}

#[derive(Deserialize)]
struct CellAnswer {
    cell: String,
    #[serde(default)]
    value: Value,
    #[serde(default)]
    sources: Vec<Value>,
    #[serde(default)]
    query: Option<String>,
    #[serde(default)]
    conversion: Option<String>,
}

fn cell_label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*R(\d+)\s*C(\d+)\s*$").expect("regex"))
}

/// Parses a `R{row}C{col}` label (1-based, case-insensitive).
pub fn parse_cell_ref(label: &str) -> Option<CellRef> {
    let caps = cell_label_regex().captures(label)?;
    let row: usize = caps[1].parse().ok()?;
    let col: usize = caps[2].parse().ok()?;
    (row > 0 && col > 0).then(|| CellRef::new(row - 1, col - 1))
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Reads a fill response into one record per batch cell.
pub fn parse_fill_response(
    response: &str,
    plan: &StructurePlan,
    evidence: &[Evidence],
    batch: &[CellRef],
) -> Result<FillTrace, GenerationError> {
    for &cell in batch {
        plan.check(cell)?;
    }
    let block = extract_fenced_block(response, CELLS_BLOCK).ok_or(GenerationError::NoFencedBlock(CELLS_BLOCK))?;
    let malformed = |reason: String| GenerationError::MalformedBlock {
        block: CELLS_BLOCK,
        reason,
    };
    let trimmed = block.trim();
    let answers: Vec<CellAnswer> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| malformed(e.to_string()))?
    } else {
        trimmed
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| malformed(format!("line {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?
    };

    let wanted: BTreeSet<CellRef> = batch.iter().copied().collect();
    let mut warnings = Vec::new();
    let mut found: BTreeMap<CellRef, CellAnswer> = BTreeMap::new();
    for answer in answers {
        match parse_cell_ref(&answer.cell) {
            Some(cell) if wanted.contains(&cell) => {
                if let std::collections::btree_map::Entry::Vacant(slot) = found.entry(cell) {
                    slot.insert(answer);
                } else {
                    warnings.push(format!("{} answered twice; kept the first", cell.label()));
                }
            }
            _ => warnings.push(format!("ignored answer for unrequested cell {:?}", answer.cell)),
        }
    }

    let left_coords = plan.left.leaf_coords();
    let top_coords = plan.top.leaf_coords();
    let mut cells = Vec::with_capacity(batch.len());
    for &cell in batch {
        let mut record = CellRecord {
            cell,
            left: left_coords[cell.row].clone(),
            top: top_coords[cell.col].clone(),
            query: None,
            sources: Vec::new(),
            value: String::new(),
            conversion: None,
            filled: false,
        };
        match found.remove(&cell) {
            Some(answer) => {
                for source in &answer.sources {
                    let id = source
                        .as_u64()
                        .or_else(|| source.as_str().and_then(|s| s.trim().parse().ok()))
                        .and_then(|n| usize::try_from(n).ok());
                    match id {
                        Some(n) if (1..=evidence.len()).contains(&n) => {
                            let sentence_id = evidence[n - 1].sentence_id;
                            if !record.sources.contains(&sentence_id) {
                                record.sources.push(sentence_id);
                            }
                        }
                        _ => warnings.push(format!(
                            "{} cites sentence {source} but only {} were given; citation dropped",
                            cell.label(),
                            evidence.len()
                        )),
                    }
                }
                record.value = value_text(&answer.value);
                record.query = non_empty(answer.query);
                record.conversion = non_empty(answer.conversion);
                record.filled = true;
            }
            None => warnings.push(format!("{} missing from response; left unfilled", cell.label())),
        }
        cells.push(record);
    }
    Ok(FillTrace { cells, warnings })
}

/// Builds the final table; every plan cell needs a record.
pub fn assemble_table(plan: &StructurePlan, trace: &FillTrace) -> Result<HierarchicalTable, GenerationError> {
    let by_cell: BTreeMap<CellRef, &CellRecord> = trace.cells.iter().map(|r| (r.cell, r)).collect();
    let missing: Vec<(usize, usize)> = plan
        .cells()
        .into_iter()
        .filter(|c| !by_cell.contains_key(c))
        .map(|c| (c.row, c.col))
        .collect();
    if !missing.is_empty() {
        return Err(GenerationError::CoverageGap(missing));
    }
    let body: Vec<Vec<&str>> = (0..plan.rows)
        .map(|row| {
            (0..plan.cols)
                .map(|col| by_cell[&CellRef::new(row, col)].value.as_str())
                .collect()
        })
        .collect();
    let table = HierarchicalTable::new(&plan.stub_header, plan.left.clone(), plan.top.clone(), body)?;
    let report = table.validate();
    if !report.is_valid() {
        return Err(GenerationError::Invalid(crate::error::TableError::Invalid(report)));
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Cells per fill prompt; unset means one prompt per table row.
    pub batch_size: Option<usize>,
    /// Extra attempts per prompt after a parse or verification failure.
    pub max_retries: usize,
    /// Upper bound on concurrent fill prompts.
    pub parallelism: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            batch_size: None,
            max_retries: 1,
            parallelism: 4,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

pub fn retry_message(error: &GenerationError) -> String {
    format!("Your previous reply could not be used: {error}\nReply again and follow the output format exactly.")
}

struct Converse<T> {
    value: T,
    retries: usize,
    responses: Vec<String>,
}

struct Failure {
    attempts: usize,
    last_error: String,
    responses: Vec<String>,
}

fn converse<T>(
    llm: &dyn ChatProvider,
    prompt: String,
    config: &GenerationConfig,
    parse: impl Fn(&str) -> Result<T, GenerationError>,
) -> Result<Converse<T>, Failure> {
    let mut messages = vec![ChatMessage::system(SYSTEM_PROMPT), ChatMessage::user(prompt)];
    let mut responses = Vec::new();
    let attempts = config.max_retries + 1;
    for attempt in 0..attempts {
        let request = ChatRequest {
            messages: messages.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        };
        let content = match llm.complete(&request) {
            Ok(r) => r.content,
            Err(e) => {
                return Err(Failure {
                    attempts: attempt + 1,
                    last_error: e.to_string(),
                    responses,
                })
            }
        };
        responses.push(content.clone());
        match parse(&content) {
            Ok(value) => {
                return Ok(Converse {
                    value,
                    retries: attempt,
                    responses,
                })
            }
            Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                log::info!("retrying after unusable reply: {e}");
                messages.push(ChatMessage::assistant(content));
                messages.push(ChatMessage::user(retry_message(&e)));
            }
            Err(e) => {
                return Err(Failure {
                    attempts: attempt + 1,
                    last_error: e.to_string(),
                    responses,
                })
            }
        }
    }
    unreachable!("the last attempt always returns")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabTalkRun {
    pub table: HierarchicalTable,
    pub plan: StructurePlan,
    pub trace: FillTrace,
    pub structure_retries: usize,
    pub fill_retries: usize,
}

/// Structure prompt, fill prompts per batch, then assembly.
pub fn run_tabtalk(
    question: &str,
    evidence: &[Evidence],
    llm: &dyn ChatProvider,
    exemplar: Option<&Exemplar>,
    config: &GenerationConfig,
) -> Result<TabTalkRun, GenerationError> {
    let prompt = build_structure_prompt(question, evidence, exemplar)?;
    let structure =
        converse(llm, prompt, config, parse_structure_response).map_err(|f| GenerationError::StageFailed {
            stage: "structure",
            attempts: f.attempts,
            last_error: f.last_error,
            partial: Box::new(PartialRun {
                responses: f.responses,
                ..PartialRun::default()
            }),
        })?;
    let plan = structure.value;

    let batches = plan.batches(config.batch_size);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<Converse<FillTrace>, Failure>> = pool.install(|| {
        batches
            .par_iter()
            .map(|batch| {
                let prompt = build_fill_prompt(&plan, question, evidence, batch).map_err(|e| Failure {
                    attempts: 0,
                    last_error: e.to_string(),
                    responses: Vec::new(),
                })?;
                converse(llm, prompt, config, |r| parse_fill_response(r, &plan, evidence, batch))
            })
            .collect()
    });

    let mut fragments = Vec::new();
    let mut fill_retries = 0;
    let mut responses = structure.responses;
    let mut failure = None;
    for result in results {
        match result {
            Ok(done) => {
                fill_retries += done.retries;
                responses.extend(done.responses);
                fragments.push(done.value);
            }
            Err(f) => {
                responses.extend(f.responses.iter().cloned());
                failure.get_or_insert(f);
            }
        }
    }
    let trace = FillTrace::merge(fragments);
    if let Some(f) = failure {
        return Err(GenerationError::StageFailed {
            stage: "fill",
            attempts: f.attempts,
            last_error: f.last_error,
            partial: Box::new(PartialRun {
                plan: Some(plan),
                trace: Some(trace),
                responses,
            }),
        });
    }
    let table = assemble_table(&plan, &trace)?;
    Ok(TabTalkRun {
        table,
        plan,
        trace,
        structure_retries: structure.retries,
        fill_retries,
    })
}

/// Single-prompt baseline: the whole document in, a complete HTML table out.
pub fn build_oneshot_prompt(question: &str, evidence: &[Evidence]) -> Result<String, GenerationError> {
    if evidence.is_empty() {
        return Err(GenerationError::NoSentences);
    }
    let mut p = String::new();
    p.push_str("Build a table that answers the question from the numbered sentences.\n\n");
    let _ = writeln!(p, "Question: {question}\n");
    write_sentences(&mut p, evidence);
    p.push_str(
        "\nOutput format:\n\
         Give exactly one fenced block labeled html holding the complete table. Header cells are \
         <th>, nested headers use rowspan and colspan, and body cells are <td>.\n",
    );
    Ok(p)
}

pub fn parse_oneshot_response(response: &str) -> Result<HierarchicalTable, GenerationError> {
    let block = extract_fenced_block(response, HTML_BLOCK).ok_or(GenerationError::NoFencedBlock(HTML_BLOCK))?;
    parse_html_table(block).map_err(|e| GenerationError::MalformedBlock {
        block: HTML_BLOCK,
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotRun {
    pub table: HierarchicalTable,
    pub retries: usize,
}

pub fn run_oneshot(
    question: &str,
    evidence: &[Evidence],
    llm: &dyn ChatProvider,
    config: &GenerationConfig,
) -> Result<OneShotRun, GenerationError> {
    let prompt = build_oneshot_prompt(question, evidence)?;
    let done = converse(llm, prompt, config, parse_oneshot_response).map_err(|f| GenerationError::StageFailed {
        stage: "one-shot",
        attempts: f.attempts,
        last_error: f.last_error,
        partial: Box::new(PartialRun {
            responses: f.responses,
            ..PartialRun::default()
        }),
    })?;
    Ok(OneShotRun {
        table: done.value,
        retries: done.retries,
    })
}

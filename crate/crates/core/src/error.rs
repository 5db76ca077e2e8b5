use thiserror::Error;

use crate::table::{TreeCoord, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("header label is empty after normalization")]
    EmptyLabel,
    #[error("tree coordinate must contain at least one index")]
    EmptyCoord,
    #[error("coordinate {coord} is out of range at depth {depth}: index {index} but only {len} nodes")]
    CoordOutOfRange {
        coord: TreeCoord,
        depth: usize,
        index: usize,
        len: usize,
    },
    #[error("coordinate {0} does not address a leaf")]
    NotALeaf(TreeCoord),
    #[error("invalid table: {0}")]
    Invalid(ValidationReport),
    #[error("expected {expected} key-value triples, found {found}")]
    TripleCount { expected: usize, found: usize },
    #[error("key-value triple at row {row}, column {col} does not match the header trees")]
    TripleKeyMismatch { row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HtmlError {
    #[error("expected exactly one <table>, found {0}")]
    TableCount(usize),
    #[error("table has no rows")]
    NoRows,
    #[error("grid is not rectangular: {0}")]
    NotRectangular(String),
    #[error("header region is empty: {0}")]
    EmptyHeaderRegion(String),
    #[error("header cells do not nest at row {row}, column {col}: {reason}")]
    Nesting { row: usize, col: usize, reason: String },
    #[error("body cell at row {row}, column {col} spans several grid slots")]
    MergedBodyCell { row: usize, col: usize },
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("recall is undefined for an empty relevant set")]
    EmptyRelevant,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("nothing to average")]
    EmptyCorpus,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no recorded response for request fingerprint {fingerprint}")]
    ReplayMiss { fingerprint: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("embedding dimension drift: expected {expected}, got {found}")]
    DimensionDrift { expected: usize, found: usize },
    #[error("scripted provider has no response left")]
    Exhausted,
    #[error("provider failed: {0}")]
    Failed(String),
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {source}")]
    TranscriptFormat {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no sub-questions to retrieve for")]
    NoSubQuestions,
    #[error("embedding dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("at least one sentence is required")]
    NoSentences,
    #[error("response has no fenced ```{0} block")]
    NoFencedBlock(&'static str),
    #[error("malformed {block} block: {reason}")]
    MalformedBlock { block: &'static str, reason: String },
    #[error(
        "declared dimensions {declared_rows} x {declared_cols} do not match the headers: \
         {left_leaves} row leaves x {top_leaves} column leaves"
    )]
    DimensionMismatch {
        declared_rows: usize,
        declared_cols: usize,
        left_leaves: usize,
        top_leaves: usize,
    },
    #[error("cell R{}C{} is outside the {rows} x {cols} plan", .row + 1, .col + 1)]
    CellOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("fill trace has no record for {}", format_cells(.0))]
    CoverageGap(Vec<(usize, usize)>),
    #[error("assembled table is invalid: {0}")]
    Invalid(#[from] TableError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{stage} stage failed after {attempts} attempts: {last_error}")]
    StageFailed {
        stage: &'static str,
        attempts: usize,
        last_error: String,
        partial: Box<crate::generation::PartialRun>,
    },
}

impl GenerationError {
    /// Errors worth one more attempt with the error text shown to the model.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Self::NoFencedBlock(_) | Self::MalformedBlock { .. } | Self::DimensionMismatch { .. }
        )
    }
}

fn format_cells(cells: &[(usize, usize)]) -> String {
    cells
        .iter()
        .map(|(r, c)| format!("R{}C{}", r + 1, c + 1))
        .collect::<Vec<_>>()
        .join(", ")
}

//! Answering questions over long documents with hierarchical tables.
//!
//! The crate covers the whole offline-testable pipeline:
//!
//! - [`table`]: hierarchical tables with left/top coordinate trees and
//!   key-value flattening.
//! - [`table_io`]: HTML (with `rowspan`/`colspan`) parsing and canonical
//!   serialization, plus lossy Markdown export.
//! - [`metrics`]: tree edit distance, TEDS, chrF, key-value content
//!   similarity and recall@K.
//! - [`retrieval`]: sentence splitting, question/sentence rewriting and
//!   cosine top-K retrieval.
//! - [`generation`]: the two-stage structure-then-fill prompt chain.
//! - [`dataset`]: cell-to-sentence annotation, coverage filtering and corpus
//!   statistics.
//! - [`providers`]: chat, rewrite and embedding backends with record/replay.

pub mod dataset;
pub mod error;
pub mod generation;
pub mod metrics;
pub mod providers;
pub mod retrieval;
pub mod table;
pub mod table_io;

pub use error::{GenerationError, HtmlError, MetricError, ProviderError, RetrievalError, TableError};
pub use table::{
    normalize_text, Axis, CoordTree, HeaderNode, HierarchicalTable, KeyValueTriple, TreeCoord, ValidationReport,
    Violation, Warning,
};
pub use table_io::{parse_html_table, serialize_html, serialize_markdown};

//! Deterministic evaluation metrics: structure (TEDS), content (key-value
//! chrF), header similarity and retrieval recall@K.

mod chrf;
mod content;
mod ted;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use self::chrf::{chrf, chrf_with, CHRF_BETA, CHRF_ORDER};
pub use self::content::{
    content_similarity, content_similarity_kv, harmonic_mean, header_similarity, ChrfScorer, ContentReport,
    ExactScorer, HeaderReport, KeyPath, PairScore, Prf, ValueScorer, KEY_MATCH_THRESHOLD, KEY_PATH_SEPARATOR,
};
pub use self::ted::{teds, tree_edit_distance, tree_similarity, LabeledTree, StructureLabel, StructureTree};

use crate::error::MetricError;
use crate::table::HierarchicalTable;
use crate::table_io::serialize_kv_lines;

/// Fraction of `relevant` found among the first `k` entries of `ranked`.
pub fn recall_at_k(ranked: &[usize], relevant: &BTreeSet<usize>, k: usize) -> Result<f64, MetricError> {
    if relevant.is_empty() {
        return Err(MetricError::EmptyRelevant);
    }
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    let hits: BTreeSet<usize> = ranked
        .iter()
        .take(k)
        .filter(|id| relevant.contains(id))
        .copied()
        .collect();
    Ok(hits.len() as f64 / relevant.len() as f64)
}

/// Macro-average of recall@k over `(ranked, relevant)` items.
pub fn mean_recall_at_k<'a, I>(items: I, k: usize) -> Result<f64, MetricError>
where
    I: IntoIterator<Item = (&'a [usize], &'a BTreeSet<usize>)>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (ranked, relevant) in items {
        sum += recall_at_k(ranked, relevant, k)?;
        n += 1;
    }
    if n == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeaderF1 {
    pub left: f64,
    pub top: f64,
}

/// Scores for one generated table against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScores {
    pub id: String,
    pub teds: f64,
    pub content_precision: f64,
    pub content_recall: f64,
    pub content_f1: f64,
    pub header_f1: HeaderF1,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateScores {
    pub items: usize,
    pub teds: f64,
    pub content_precision: f64,
    pub content_recall: f64,
    pub content_f1: f64,
    pub header_f1: HeaderF1,
    /// Keyed by K, as a decimal string.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub recall_at_k: BTreeMap<String, f64>,
}

pub fn score_item(
    id: impl Into<String>,
    generated: &HierarchicalTable,
    groundtruth: &HierarchicalTable,
    scorer: &dyn ValueScorer,
) -> ItemScores {
    let content = content_similarity(generated, groundtruth, scorer);
    let headers = header_similarity(generated, groundtruth);
    ItemScores {
        id: id.into(),
        teds: teds(generated, groundtruth),
        content_precision: content.precision,
        content_recall: content.recall,
        content_f1: content.f1,
        header_f1: HeaderF1 {
            left: headers.left.f1,
            top: headers.top.f1,
        },
    }
}

/// Macro-averages of every per-item field. Empty input gives all zeros.
pub fn aggregate(items: &[ItemScores]) -> AggregateScores {
    let n = items.len();
    if n == 0 {
        return AggregateScores::default();
    }
    let mean = |f: fn(&ItemScores) -> f64| items.iter().map(f).sum::<f64>() / n as f64;
    AggregateScores {
        items: n,
        teds: mean(|i| i.teds),
        content_precision: mean(|i| i.content_precision),
        content_recall: mean(|i| i.content_recall),
        content_f1: mean(|i| i.content_f1),
        header_f1: HeaderF1 {
            left: mean(|i| i.header_f1.left),
            top: mean(|i| i.header_f1.top),
        },
        recall_at_k: BTreeMap::new(),
    }
}

/// Prompt asking an LLM judge to rate content and structure similarity on a
/// 0-10 scale. The judge itself is an external provider.
pub fn build_judge_prompt(generated: &HierarchicalTable, groundtruth: &HierarchicalTable) -> String {
    format!(
        "Compare a generated table with a reference table.\n\
         Rate from 0 to 10 how closely the generated table matches the reference in \
         (a) cell content and (b) header structure.\n\
         Reply with exactly one line: content=<score> structure=<score>\n\n\
         Reference table cells:\n{}\nGenerated table cells:\n{}",
        serialize_kv_lines(groundtruth),
        serialize_kv_lines(generated),
    )
}

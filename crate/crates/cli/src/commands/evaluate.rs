use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tabqa_core::metrics::{aggregate, recall_at_k, score_item, AggregateScores, ChrfScorer, HeaderF1, ItemScores};
use tabqa_core::{parse_html_table, HierarchicalTable};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{read_jsonl, write_atomic, write_json, write_jsonl};
use crate::records::{check_unique_ids, parse_table, ItemStatus, RetrievalLine, ScoreLine, TableLine};
use crate::report::summary_table;

use super::generate::read_retrieval;
use super::worker_pool;

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub generated: PathBuf,
    pub groundtruth: PathBuf,
    pub retrieval: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scores: AggregateScores,
    /// Ground-truth ids with no generated table, scored as zero.
    pub missing: Vec<String>,
    /// Generated tables whose HTML did not parse, scored as zero.
    pub unparseable: Vec<String>,
    /// Generated ids absent from the ground truth; not scored.
    pub unmatched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub items: Vec<(ItemScores, ItemStatus)>,
    pub report: EvaluationReport,
    pub summary: String,
}

fn zero(id: &str) -> ItemScores {
    ItemScores {
        id: id.to_string(),
        teds: 0.0,
        content_precision: 0.0,
        content_recall: 0.0,
        content_f1: 0.0,
        header_f1: HeaderF1::default(),
    }
}

/// Scores generated tables against the ground truth and writes
/// `scores.jsonl`, `report.json` and `summary.txt` under `out`.
pub fn cmd_evaluate(args: &EvaluateArgs, config: &RunConfig) -> Result<EvaluateOutcome, CliError> {
    let generated: Vec<(usize, TableLine)> = read_jsonl(&args.generated)?;
    check_unique_ids(&args.generated, generated.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    let gt_lines: Vec<(usize, TableLine)> = read_jsonl(&args.groundtruth)?;
    check_unique_ids(&args.groundtruth, gt_lines.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    let mut groundtruth = Vec::with_capacity(gt_lines.len());
    for (line, record) in gt_lines {
        let table = parse_table(&args.groundtruth, line, &record.table_html)?;
        groundtruth.push((record, table));
    }
    let retrieval = match &args.retrieval {
        Some(path) => Some(read_retrieval(path)?),
        None => None,
    };
    let outcome = evaluate(&generated, &groundtruth, retrieval.as_ref(), config)?;
    write_evaluation(&args.out, &outcome)?;
    Ok(outcome)
}

pub(crate) fn write_evaluation(out: &Path, outcome: &EvaluateOutcome) -> Result<(), CliError> {
    let lines: Vec<ScoreLine> = outcome
        .items
        .iter()
        .map(|(scores, status)| ScoreLine {
            scores,
            status: *status,
        })
        .collect();
    write_jsonl(&out.join("scores.jsonl"), &lines)?;
    write_json(&out.join("report.json"), &outcome.report)?;
    write_atomic(&out.join("summary.txt"), outcome.summary.as_bytes())
}

pub(crate) fn evaluate(
    generated: &[(usize, TableLine)],
    groundtruth: &[(TableLine, HierarchicalTable)],
    retrieval: Option<&BTreeMap<String, RetrievalLine>>,
    config: &RunConfig,
) -> Result<EvaluateOutcome, CliError> {
    let by_id: BTreeMap<&str, &TableLine> = generated.iter().map(|(_, g)| (g.id.as_str(), g)).collect();
    let gt_ids: BTreeSet<&str> = groundtruth.iter().map(|(g, _)| g.id.as_str()).collect();

    let pool = worker_pool(config.workers);
    let items: Vec<(ItemScores, ItemStatus)> = pool.install(|| {
        groundtruth
            .par_iter()
            .map(|(gt, gt_table)| match by_id.get(gt.id.as_str()) {
                None => (zero(&gt.id), ItemStatus::Missing),
                Some(g) => match parse_html_table(&g.table_html) {
                    Ok(table) => (score_item(&gt.id, &table, gt_table, &ChrfScorer), ItemStatus::Scored),
                    Err(e) => {
                        log::warn!("{}: generated table does not parse: {e}", gt.id);
                        (zero(&gt.id), ItemStatus::Unparseable)
                    }
                },
            })
            .collect()
    });

    let ids_with = |status: ItemStatus| -> Vec<String> {
        items
            .iter()
            .filter(|(_, s)| *s == status)
            .map(|(i, _)| i.id.clone())
            .collect()
    };
    let missing = ids_with(ItemStatus::Missing);
    let unparseable = ids_with(ItemStatus::Unparseable);
    let unmatched: Vec<String> = generated
        .iter()
        .map(|(_, g)| g.id.clone())
        .filter(|id| !gt_ids.contains(id.as_str()))
        .collect();
    for id in &unmatched {
        log::warn!("{id}: generated table has no ground truth");
    }

    let scores: Vec<ItemScores> = items.iter().map(|(s, _)| s.clone()).collect();
    let mut aggregate_scores = aggregate(&scores);
    if let Some(retrieval) = retrieval {
        aggregate_scores.recall_at_k = mean_recall(groundtruth, retrieval, &config.recall_ks)?;
    }
    let report = EvaluationReport {
        scores: aggregate_scores,
        missing,
        unparseable,
        unmatched,
    };
    let summary = summary_table(&report.scores, &config.recall_ks);
    Ok(EvaluateOutcome { items, report, summary })
}

/// Mean recall over ground-truth items with relevant sentences; an item
/// without a retrieval record contributes zero.
fn mean_recall(
    groundtruth: &[(TableLine, HierarchicalTable)],
    retrieval: &BTreeMap<String, RetrievalLine>,
    ks: &[usize],
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
    let mut n = 0usize;
    for (gt, _) in groundtruth {
        let Some(relevant) = gt.relevant_sentence_ids.as_ref().filter(|ids| !ids.is_empty()) else {
            continue;
        };
        let relevant: BTreeSet<usize> = relevant.iter().copied().collect();
        let ranked = retrieval.get(&gt.id).map(|l| l.record.merged_ids()).unwrap_or_default();
        for &k in ks {
            let r = recall_at_k(&ranked, &relevant, k).map_err(|e| CliError::Config(e.to_string()))?;
            *totals.entry(k.to_string()).or_default() += r;
        }
        n += 1;
    }
    if n > 0 {
        for v in totals.values_mut() {
            *v /= n as f64;
        }
    }
    Ok(totals)
}

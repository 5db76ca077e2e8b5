//! Table content similarity over key-value triples, and header similarity
//! over leaf key paths.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chrf::chrf;
use crate::table::{HierarchicalTable, KeyValueTriple};

/// Minimum key similarity (chrF / 100) for a non-exact key match.
pub const KEY_MATCH_THRESHOLD: f64 = 0.5;

/// Separator used when a key path is joined into one string for scoring.
pub const KEY_PATH_SEPARATOR: &str = " / ";

/// Scores a generated cell value against a ground-truth value, in `[0, 1]`.
///
/// Learned scorers (BERTScore and the like) plug in here.
pub trait ValueScorer: Send + Sync {
    fn score(&self, candidate: &str, reference: &str) -> f64;
}

impl<F> ValueScorer for F
where
    F: Fn(&str, &str) -> f64 + Send + Sync,
{
    fn score(&self, candidate: &str, reference: &str) -> f64 {
        self(candidate, reference)
    }
}

/// chrF rescaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChrfScorer;

impl ValueScorer for ChrfScorer {
    fn score(&self, candidate: &str, reference: &str) -> f64 {
        chrf(candidate, reference) / 100.0
    }
}

/// 1 for identical normalized strings, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactScorer;

impl ValueScorer for ExactScorer {
    fn score(&self, candidate: &str, reference: &str) -> f64 {
        f64::from(u8::from(candidate == reference))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Precision and recall from a summed match score.
    pub fn from_scores(total: f64, generated: usize, groundtruth: usize) -> Self {
        let precision = if generated == 0 { 0.0 } else { total / generated as f64 };
        let recall = if groundtruth == 0 {
            0.0
        } else {
            total / groundtruth as f64
        };
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyPath {
    pub left: Vec<String>,
    pub top: Vec<String>,
}

impl KeyPath {
    fn of(triple: &KeyValueTriple) -> Self {
        Self {
            left: triple.left_key.clone(),
            top: triple.top_key.clone(),
        }
    }

    fn joined(&self) -> String {
        format!(
            "{} | {}",
            self.left.join(KEY_PATH_SEPARATOR),
            self.top.join(KEY_PATH_SEPARATOR)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub groundtruth_key: KeyPath,
    pub generated_key: Option<KeyPath>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentReport {
    /// One entry per ground-truth triple, in row-major order.
    pub pairs: Vec<PairScore>,
    pub generated_count: usize,
    pub groundtruth_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy one-to-one matching of generated items to ground-truth items.
///
/// Exact matches are taken first; the rest are ranked by similarity (chrF of
/// the joined strings, ties broken by ground-truth then generated position)
/// and accepted when at or above [`KEY_MATCH_THRESHOLD`]. Returns, for each
/// ground-truth item, the matched generated index.
fn greedy_match<K: Eq + std::hash::Hash>(
    generated: &[K],
    groundtruth: &[K],
    joined: impl Fn(&K) -> String,
) -> Vec<Option<usize>> {
    let mut gt_match = vec![None; groundtruth.len()];
    let mut gen_used = vec![false; generated.len()];

    let mut by_key: HashMap<&K, Vec<usize>> = HashMap::new();
    for (j, key) in generated.iter().enumerate() {
        by_key.entry(key).or_default().push(j);
    }
    for (i, key) in groundtruth.iter().enumerate() {
        if let Some(candidates) = by_key.get_mut(key) {
            if !candidates.is_empty() {
                let j = candidates.remove(0);
                gen_used[j] = true;
                gt_match[i] = Some(j);
            }
        }
    }

    let gen_joined: Vec<Option<String>> = generated
        .iter()
        .enumerate()
        .map(|(j, k)| (!gen_used[j]).then(|| joined(k)))
        .collect();
    let mut candidates = Vec::new();
    for (i, key) in groundtruth.iter().enumerate() {
        if gt_match[i].is_some() {
            continue;
        }
        let gt_joined = joined(key);
        for (j, g) in gen_joined.iter().enumerate() {
            if let Some(g) = g {
                let sim = chrf(g, &gt_joined) / 100.0;
                if sim >= KEY_MATCH_THRESHOLD {
                    candidates.push((sim, i, j));
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    for (_, i, j) in candidates {
        if gt_match[i].is_none() && !gen_used[j] {
            gt_match[i] = Some(j);
            gen_used[j] = true;
        }
    }
    gt_match
}

/// Compares the key-value triples of a generated table against the ground truth.
pub fn content_similarity(
    generated: &HierarchicalTable,
    groundtruth: &HierarchicalTable,
    scorer: &dyn ValueScorer,
) -> ContentReport {
    content_similarity_kv(&generated.flatten_to_kv(), &groundtruth.flatten_to_kv(), scorer)
}

pub fn content_similarity_kv(
    generated: &[KeyValueTriple],
    groundtruth: &[KeyValueTriple],
    scorer: &dyn ValueScorer,
) -> ContentReport {
    let gen_keys: Vec<KeyPath> = generated.iter().map(KeyPath::of).collect();
    let gt_keys: Vec<KeyPath> = groundtruth.iter().map(KeyPath::of).collect();
    let matching = greedy_match(&gen_keys, &gt_keys, KeyPath::joined);

    let mut total = 0.0;
    let pairs = groundtruth
        .iter()
        .zip(gt_keys)
        .zip(matching)
        .map(|((gt, gt_key), matched)| {
            let score = matched.map_or(0.0, |j| scorer.score(&generated[j].value, &gt.value));
            total += score;
            PairScore {
                groundtruth_key: gt_key,
                generated_key: matched.map(|j| gen_keys[j].clone()),
                score,
            }
        })
        .collect();
    let prf = Prf::from_scores(total, generated.len(), groundtruth.len());
    ContentReport {
        pairs,
        generated_count: generated.len(),
        groundtruth_count: groundtruth.len(),
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
    }
}

/// Row-header and column-header similarity, scored separately.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeaderReport {
    pub left: Prf,
    pub top: Prf,
}

/// Matches leaf key paths of each header tree and scores matched pairs by
/// chrF of the joined paths.
pub fn header_similarity(generated: &HierarchicalTable, groundtruth: &HierarchicalTable) -> HeaderReport {
    let axis = |gen: Vec<Vec<String>>, gt: Vec<Vec<String>>| {
        let join = |p: &Vec<String>| p.join(KEY_PATH_SEPARATOR);
        let matching = greedy_match(&gen, &gt, join);
        let total: f64 = matching
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| chrf(&join(&gen[j]), &join(&gt[i])) / 100.0))
            .sum();
        Prf::from_scores(total, gen.len(), gt.len())
    };
    HeaderReport {
        left: axis(generated.left().leaf_paths(), groundtruth.left().leaf_paths()),
        top: axis(generated.top().leaf_paths(), groundtruth.top().leaf_paths()),
    }
}

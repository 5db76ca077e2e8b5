//! Character n-gram F-score.

use std::collections::HashMap;

/// Highest character n-gram order.
pub const CHRF_ORDER: usize = 6;
/// Recall is weighted `beta` times as much as precision.
pub const CHRF_BETA: f64 = 2.0;

/// chrF in `[0, 100]` with the default order and beta.
///
/// Whitespace is removed before n-gram extraction. Per-order F-scores are
/// averaged over the orders for which both strings have at least one n-gram.
/// Two empty strings score 100; exactly one empty string scores 0.
pub fn chrf(candidate: &str, reference: &str) -> f64 {
    chrf_with(candidate, reference, CHRF_ORDER, CHRF_BETA)
}

pub fn chrf_with(candidate: &str, reference: &str, max_order: usize, beta: f64) -> f64 {
    let hyp: Vec<char> = candidate.chars().filter(|c| !c.is_whitespace()).collect();
    let refs: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    match (hyp.is_empty(), refs.is_empty()) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }

    let beta2 = beta * beta;
    let mut total = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_order {
        if hyp.len() < n || refs.len() < n {
            break;
        }
        let hyp_counts = ngram_counts(&hyp, n);
        let ref_counts = ngram_counts(&refs, n);
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, &count)| ref_counts.get(gram).map_or(0, |&r| r.min(count)))
            .sum();
        let precision = matched as f64 / (hyp.len() - n + 1) as f64;
        let recall = matched as f64 / (refs.len() - n + 1) as f64;
        let denom = beta2 * precision + recall;
        if denom > 0.0 {
            total += (1.0 + beta2) * precision * recall / denom;
        }
        orders += 1;
    }
    100.0 * total / orders as f64
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    for gram in chars.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_100() {
        assert_eq!(chrf("61,276", "61,276"), 100.0);
        assert_eq!(chrf("a", "a"), 100.0);
    }

    #[test]
    fn disjoint_is_0() {
        assert_eq!(chrf("abc", "xyz"), 0.0);
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(chrf("", ""), 100.0);
        assert_eq!(chrf("   ", "\t"), 100.0);
        assert_eq!(chrf("", "a"), 0.0);
        assert_eq!(chrf("a", ""), 0.0);
    }

    #[test]
    fn whitespace_is_ignored() {
        assert_eq!(chrf("61, 276", "61,276"), 100.0);
        assert_eq!(chrf("Kidney and renal", "Kidneyandrenal"), 100.0);
    }

    #[test]
    fn hand_computed_partial_match() {
        // "ab" vs "ac": order 1 matches {a}: P = R = 1/2, F = 1/2.
        // order 2: no shared bigram, F = 0. Mean over 2 orders = 0.25.
        assert!((chrf("ab", "ac") - 25.0).abs() < 1e-12);
    }

    #[test]
    fn recall_weighted_more_than_precision() {
        // Candidate "a" vs reference "ab": order 1 P = 1, R = 1/2.
        // F = 5 * 1 * 0.5 / (4 * 1 + 0.5) = 2.5 / 4.5. Order 2 has no candidate bigram.
        let expected = 100.0 * 2.5 / 4.5;
        assert!((chrf("a", "ab") - expected).abs() < 1e-12);
        // Reversed roles: P = 1/2, R = 1: F = 5 * 0.5 / (2 + 1).
        let reversed = 100.0 * 2.5 / 3.0;
        assert!((chrf("ab", "a") - reversed).abs() < 1e-12);
    }
}

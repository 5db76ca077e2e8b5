//! Reference chrF written straight from the definition, using owned string
//! n-grams and ordered maps.

use std::collections::BTreeMap;

fn grams(text: &str, n: usize) -> BTreeMap<String, usize> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = BTreeMap::new();
    if chars.len() < n {
        return out;
    }
    for start in 0..=chars.len() - n {
        let gram: String = chars[start..start + n].iter().collect();
        *out.entry(gram).or_insert(0) += 1;
    }
    out
}

/// chrF in `[0, 100]`: per-order F-beta averaged over the orders where both
/// strings have n-grams; 100 for two blank strings, 0 when only one is blank.
pub fn reference_chrf(hypothesis: &str, reference: &str, max_order: usize, beta: f64) -> f64 {
    let blank = |s: &str| s.chars().all(char::is_whitespace);
    if blank(hypothesis) && blank(reference) {
        return 100.0;
    }
    if blank(hypothesis) || blank(reference) {
        return 0.0;
    }
    let mut scores = Vec::new();
    for n in 1..=max_order {
        let h = grams(hypothesis, n);
        let r = grams(reference, n);
        let h_total: usize = h.values().sum();
        let r_total: usize = r.values().sum();
        if h_total == 0 || r_total == 0 {
            continue;
        }
        let mut overlap = 0usize;
        for (gram, hc) in &h {
            if let Some(rc) = r.get(gram) {
                overlap += (*hc).min(*rc);
            }
        }
        let p = overlap as f64 / h_total as f64;
        let rec = overlap as f64 / r_total as f64;
        let b2 = beta * beta;
        scores.push(if p == 0.0 && rec == 0.0 {
            0.0
        } else {
            (1.0 + b2) * p * rec / (b2 * p + rec)
        });
    }
    100.0 * scores.iter().sum::<f64>() / scores.len() as f64
}

//! Human-readable summary of an evaluation.

use tabqa_core::metrics::AggregateScores;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// One header row and one value row, right-aligned. Scores are percentages;
/// recall columns appear only for the K values that were computed.
pub fn summary_table(scores: &AggregateScores, ks: &[usize]) -> String {
    let mut columns: Vec<(String, String)> = vec![("Items".into(), scores.items.to_string())];
    for k in ks {
        if let Some(r) = scores.recall_at_k.get(&k.to_string()) {
            columns.push((format!("R@{k}"), pct(*r)));
        }
    }
    columns.push(("Table Body Chrf".into(), pct(scores.content_f1)));
    columns.push(("R Header Chrf".into(), pct(scores.header_f1.left)));
    columns.push(("C Header Chrf".into(), pct(scores.header_f1.top)));
    columns.push(("TEDS".into(), pct(scores.teds)));

    let widths: Vec<usize> = columns.iter().map(|(h, v)| h.len().max(v.len())).collect();
    let row = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ")
    };
    let mut out = row(columns.iter().map(|(h, _)| h.as_str()).collect());
    out.push('\n');
    out.push_str(&row(columns.iter().map(|(_, v)| v.as_str()).collect()));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use tabqa_core::metrics::HeaderF1;

    #[test]
    fn aligned_columns() {
        let scores = AggregateScores {
            items: 3,
            teds: 1.0,
            content_precision: 0.5,
            content_recall: 0.5,
            content_f1: 0.5,
            header_f1: HeaderF1 { left: 0.25, top: 1.0 },
            recall_at_k: BTreeMap::from([("10".to_string(), 0.7933333333333333)]),
        };
        let text = summary_table(&scores, &[10, 20]);
        assert_eq!(
            text,
            "Items   R@10  Table Body Chrf  R Header Chrf  C Header Chrf    TEDS\n    \
             3  79.33            50.00          25.00         100.00  100.00\n"
        );
    }
}

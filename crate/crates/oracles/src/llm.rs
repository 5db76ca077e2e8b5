//! A scripted chat model that answers generation prompts from known
//! ground-truth tables, and a rewriter with hand-written sub-questions.
//!
//! The model reads only the prompt text: the question line, the numbered
//! sentences and the requested cell labels. It builds its HTML replies with
//! its own writer.

use std::collections::BTreeMap;

use tabqa_core::providers::{
    ChatProvider, ChatRequest, ChatResponse, RewriteMode, RewriteProvider, RewriteRequest, RewriteResponse,
};
use tabqa_core::{CoordTree, HeaderNode, HierarchicalTable, ProviderError};

const PATH_SEPARATOR: &str = " / ";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cell(tag: &str, text: &str, rows: usize, cols: usize) -> String {
    let mut attrs = String::new();
    if rows > 1 {
        attrs.push_str(&format!(" rowspan=\"{rows}\""));
    }
    if cols > 1 {
        attrs.push_str(&format!(" colspan=\"{cols}\""));
    }
    format!("<{tag}{attrs}>{}</{tag}>", escape(text))
}

fn leaves(node: &HeaderNode) -> usize {
    if node.children().is_empty() {
        1
    } else {
        node.children().iter().map(leaves).sum()
    }
}

fn depth(nodes: &[HeaderNode]) -> usize {
    nodes.iter().map(|n| 1 + depth(n.children())).max().unwrap_or(0)
}

/// Top header rows: level `d` of the tree becomes row `d`.
fn top_rows(nodes: &[HeaderNode], level: usize, total: usize, rows: &mut Vec<Vec<String>>) {
    for node in nodes {
        let html = if node.children().is_empty() {
            cell("th", node.label(), total - level, 1)
        } else {
            cell("th", node.label(), 1, leaves(node))
        };
        rows[level].push(html);
        top_rows(node.children(), level + 1, total, rows);
    }
}

/// Left header cells keyed by the body row where each node starts.
fn left_cells(nodes: &[HeaderNode], level: usize, total: usize, row: &mut usize, out: &mut Vec<Vec<String>>) {
    for node in nodes {
        if node.children().is_empty() {
            out[*row].push(cell("th", node.label(), 1, total - level));
            *row += 1;
        } else {
            out[*row].push(cell("th", node.label(), leaves(node), 1));
            left_cells(node.children(), level + 1, total, row, out);
        }
    }
}

/// HTML of `table`; `blank_body` leaves every body cell empty.
pub fn table_html(table: &HierarchicalTable, blank_body: bool) -> String {
    let (top_depth, left_depth) = (depth(table.top().roots()), depth(table.left().roots()));
    let mut head = vec![Vec::new(); top_depth];
    top_rows(table.top().roots(), 0, top_depth, &mut head);
    head[0].insert(0, cell("th", table.stub_header(), top_depth, left_depth));
    let mut left = vec![Vec::new(); table.rows()];
    left_cells(table.left().roots(), 0, left_depth, &mut 0, &mut left);

    let mut html = String::from("<table><thead>");
    for row in head {
        html.push_str(&format!("<tr>{}</tr>", row.concat()));
    }
    html.push_str("</thead><tbody>");
    for (r, heads) in left.into_iter().enumerate() {
        let body: String = table.body()[r]
            .iter()
            .map(|v| cell("td", if blank_body { "" } else { v }, 1, 1))
            .collect();
        html.push_str(&format!("<tr>{}{body}</tr>", heads.concat()));
    }
    html.push_str("</tbody></table>");
    html
}

fn paths(tree: &CoordTree) -> Vec<String> {
    fn walk(nodes: &[HeaderNode], prefix: &mut Vec<String>, out: &mut Vec<String>) {
        for node in nodes {
            prefix.push(node.label().to_string());
            if node.children().is_empty() {
                out.push(prefix.join(PATH_SEPARATOR));
            } else {
                walk(node.children(), prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(tree.roots(), &mut Vec::new(), &mut out);
    out
}

fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The prompt's first `Question:` line.
fn question_of(prompt: &str) -> Option<String> {
    prompt.lines().find_map(|l| l.strip_prefix("Question: ")).map(squash)
}

/// `[n] text` lines.
fn sentences_of(prompt: &str) -> Vec<(usize, String)> {
    prompt
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix('[')?;
            let (n, text) = rest.split_once("] ")?;
            Some((n.parse().ok()?, text.to_string()))
        })
        .collect()
}

/// `R2C3: row "a / b", column "c"` lines.
fn requested_cells(prompt: &str) -> Vec<(String, String, String)> {
    prompt
        .lines()
        .filter_map(|l| {
            let (label, rest) = l.split_once(": row \"")?;
            if !label.starts_with('R') || label.contains(' ') {
                return None;
            }
            let (row, rest) = rest.split_once("\", column \"")?;
            let col = rest.strip_suffix('"')?;
            Some((label.to_string(), row.to_string(), col.to_string()))
        })
        .collect()
}

/// One wrong value: in the table for `question`, the cell at these key
/// paths is answered with `value` instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corruption {
    pub question: String,
    pub row: String,
    pub column: String,
    pub value: String,
}

/// Answers structure, fill and one-shot prompts for questions it knows.
#[derive(Debug, Clone, Default)]
pub struct OracleChat {
    tables: BTreeMap<String, HierarchicalTable>,
    corruption: Option<Corruption>,
}

impl OracleChat {
    pub fn new<I, S>(tables: I) -> Self
    where
        I: IntoIterator<Item = (S, HierarchicalTable)>,
        S: AsRef<str>,
    {
        Self {
            tables: tables.into_iter().map(|(q, t)| (squash(q.as_ref()), t)).collect(),
            corruption: None,
        }
    }

    pub fn with_corruption(mut self, corruption: Corruption) -> Self {
        self.corruption = Some(Corruption {
            question: squash(&corruption.question),
            ..corruption
        });
        self
    }

    fn table_for(&self, prompt: &str) -> Result<(String, &HierarchicalTable), ProviderError> {
        let q = question_of(prompt).ok_or_else(|| ProviderError::Malformed("prompt has no question line".into()))?;
        let t = self
            .tables
            .get(&q)
            .ok_or_else(|| ProviderError::Malformed(format!("unknown question {q:?}")))?;
        Ok((q, t))
    }

    fn structure(&self, prompt: &str) -> Result<String, ProviderError> {
        let (_, table) = self.table_for(prompt)?;
        Ok(format!(
            "The rows are {}; the columns are {}.\n\n```structure\n{}\ndimensions: {} x {}\n```\n",
            paths(table.left()).join(", "),
            paths(table.top()).join(", "),
            table_html(table, true),
            table.rows(),
            table.cols()
        ))
    }

    fn fill(&self, prompt: &str) -> Result<String, ProviderError> {
        let (question, table) = self.table_for(prompt)?;
        let rows = paths(table.left());
        let cols = paths(table.top());
        let sentences = sentences_of(prompt);
        let mut lines = Vec::new();
        for (label, row, col) in requested_cells(prompt) {
            let (r, c) = match (rows.iter().position(|p| *p == row), cols.iter().position(|p| *p == col)) {
                (Some(r), Some(c)) => (r, c),
                _ => {
                    return Err(ProviderError::Malformed(format!(
                        "{label}: no cell at {row:?} x {col:?}"
                    )))
                }
            };
            let mut value = table.body()[r][c].clone();
            let sources: Vec<usize> = if value.is_empty() {
                Vec::new()
            } else {
                sentences
                    .iter()
                    .filter(|(_, s)| s.contains(&value))
                    .map(|(n, _)| *n)
                    .collect()
            };
            if let Some(bad) = &self.corruption {
                if bad.question == question && bad.row == row && bad.column == col {
                    value = bad.value.clone();
                }
            }
            let line = serde_json::json!({
                "cell": label,
                "query": format!("{col} of {row}"),
                "value": value,
                "sources": sources,
                "conversion": null,
            });
            lines.push(line.to_string());
        }
        Ok(format!("```cells\n{}\n```\n", lines.join("\n")))
    }

    fn oneshot(&self, prompt: &str) -> Result<String, ProviderError> {
        let (_, table) = self.table_for(prompt)?;
        Ok(format!("```html\n{}\n```\n", table_html(table, false)))
    }
}

impl ChatProvider for OracleChat {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let prompt = request
            .messages
            .iter()
            .find(|m| m.role == tabqa_core::providers::Role::User)
            .map(|m| m.content.as_str())
            .ok_or_else(|| ProviderError::Malformed("no user message".into()))?;
        let content = if prompt.starts_with("Design the header structure") {
            self.structure(prompt)?
        } else if prompt.starts_with("Fill body cells") {
            self.fill(prompt)?
        } else if prompt.starts_with("Build a table") {
            self.oneshot(prompt)?
        } else {
            return Err(ProviderError::Malformed("unrecognized prompt".into()));
        };
        Ok(ChatResponse { content })
    }
}

/// Question rewrites from a fixed table; sentences come back with
/// whitespace squashed. Unknown questions pass through unchanged.
#[derive(Debug, Clone, Default)]
pub struct OracleRewriter {
    sub_questions: BTreeMap<String, Vec<String>>,
}

impl OracleRewriter {
    pub fn new<I, Q, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Q, Vec<S>)>,
        Q: AsRef<str>,
        S: Into<String>,
    {
        Self {
            sub_questions: entries
                .into_iter()
                .map(|(q, subs)| (squash(q.as_ref()), subs.into_iter().map(Into::into).collect()))
                .collect(),
        }
    }
}

impl RewriteProvider for OracleRewriter {
    fn rewrite(&self, request: &RewriteRequest) -> Result<RewriteResponse, ProviderError> {
        let text = squash(&request.text);
        let outputs = match request.mode {
            RewriteMode::Question => self.sub_questions.get(&text).cloned().unwrap_or_else(|| vec![text]),
            RewriteMode::Sentence => vec![text],
        };
        Ok(RewriteResponse { outputs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tabqa_core::parse_html_table;

    #[test]
    fn own_writer_parses_back() {
        let html = "<table><thead><tr><th rowspan=\"2\" colspan=\"2\">Site</th><th colspan=\"2\">Cases</th><th rowspan=\"2\">Total</th></tr>\
                    <tr><th>M</th><th>F</th></tr></thead><tbody>\
                    <tr><th rowspan=\"2\">A</th><th>x</th><td>1</td><td>2</td><td>3</td></tr>\
                    <tr><th>y</th><td>4</td><td>5</td><td>9</td></tr>\
                    <tr><th colspan=\"2\">B</th><td>6</td><td>7</td><td>13</td></tr></tbody></table>";
        let table = parse_html_table(html).unwrap();
        assert_eq!(parse_html_table(&table_html(&table, false)).unwrap(), table);
        let blank = parse_html_table(&table_html(&table, true)).unwrap();
        assert_eq!(blank.left(), table.left());
        assert!(blank.body().iter().flatten().all(|v| v.is_empty()));
    }

    #[test]
    fn reads_prompt_parts() {
        let prompt = "Fill body cells.\n\nQuestion:  What  is it?\n\nSentences:\n[1] One is 5.\n[2] Two.\n\nCells to fill:\nR1C2: row \"A / x\", column \"Cases / F\"\n";
        assert_eq!(question_of(prompt).as_deref(), Some("What is it?"));
        assert_eq!(
            sentences_of(prompt),
            vec![(1, "One is 5.".to_string()), (2, "Two.".to_string())]
        );
        assert_eq!(
            requested_cells(prompt),
            vec![("R1C2".to_string(), "A / x".to_string(), "Cases / F".to_string())]
        );
    }
}

//! HTML and Markdown encodings of [`HierarchicalTable`].
//!
//! The accepted HTML subset is `table`, `thead`, `tbody`, `tr`, `th`, `td`
//! with `rowspan`/`colspan`; any other markup is reduced to its text.
//! Entities are decoded before whitespace normalization.
//!
//! Header regions: rows inside `thead`, or leading rows made only of `th`
//! cells, form the top header; leading columns made only of `th` cells (below
//! the top header) form the left header. Without any header markup the first
//! row and first column are used. A header cell spanning `k` columns (top) or
//! `k` rows (left) is the parent of the header cells directly beneath (or to
//! the right of) it within that span. Indentation is never read as hierarchy.

use std::fmt::Write as _;

use scraper::{ElementRef, Html, Node, Selector};

use crate::error::HtmlError;
use crate::table::{normalize_text, CoordTree, HeaderNode, HierarchicalTable, Warning};

/// Upper bound for `rowspan`/`colspan` attribute values.
const MAX_SPAN: usize = 1000;

/// One source cell placed in the expanded grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    /// Normalized text.
    pub text: String,
    /// Decoded text before normalization.
    pub raw_text: String,
    pub row_span: usize,
    pub col_span: usize,
    pub is_header: bool,
    /// `(row, col)` of the top-left slot.
    pub origin: (usize, usize),
}

impl GridCell {
    fn row_end(&self) -> usize {
        self.origin.0 + self.row_span
    }

    fn col_end(&self) -> usize {
        self.origin.1 + self.col_span
    }
}

/// A rectangular grid where every slot is covered by exactly one cell.
#[derive(Debug, Clone)]
pub struct ExpandedGrid {
    pub cells: Vec<GridCell>,
    pub rows: usize,
    pub cols: usize,
    /// Number of leading rows that came from `thead`, if a `thead` exists.
    pub thead_rows: Option<usize>,
    slots: Vec<Vec<usize>>,
}

impl ExpandedGrid {
    /// Index into `cells` of the cell covering `(row, col)`.
    pub fn cell_at(&self, row: usize, col: usize) -> &GridCell {
        &self.cells[self.slots[row][col]]
    }
}

#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub table: HierarchicalTable,
    pub warnings: Vec<Warning>,
}

pub fn parse_html_table(html: &str) -> Result<HierarchicalTable, HtmlError> {
    parse_html_table_with_warnings(html).map(|p| p.table)
}

pub fn parse_html_table_with_warnings(html: &str) -> Result<ParsedTable, HtmlError> {
    let grid = expand_grid(html)?;
    build_table(&grid)
}

struct RawCell {
    raw_text: String,
    row_span: usize,
    col_span: usize,
    is_header: bool,
}

/// Parses the single table in `html` and expands spans into a grid.
pub fn expand_grid(html: &str) -> Result<ExpandedGrid, HtmlError> {
    let doc = Html::parse_fragment(html);
    let table_sel = Selector::parse("table").expect("static selector");
    let tables: Vec<ElementRef> = doc.select(&table_sel).collect();
    if tables.len() != 1 {
        return Err(HtmlError::TableCount(tables.len()));
    }
    let table = tables[0];

    let mut rows: Vec<(bool, Vec<RawCell>)> = Vec::new();
    collect_rows(table, false, &mut rows);
    if rows.is_empty() {
        return Err(HtmlError::NoRows);
    }
    let thead_rows = if rows.iter().any(|(in_head, _)| *in_head) {
        Some(rows.iter().take_while(|(in_head, _)| *in_head).count())
    } else {
        None
    };

    let row_count = rows.len();
    let mut slots: Vec<Vec<Option<usize>>> = vec![Vec::new(); row_count];
    let mut cells = Vec::new();
    for (r, (in_head, raw_cells)) in rows.into_iter().enumerate() {
        let mut c = 0;
        for raw in raw_cells {
            while slots[r].get(c).copied().flatten().is_some() {
                c += 1;
            }
            let index = cells.len();
            if r + raw.row_span > row_count {
                return Err(HtmlError::NotRectangular(format!(
                    "cell at ({r}, {c}) spans {} rows past the last row",
                    r + raw.row_span - row_count
                )));
            }
            for (rr, row) in slots.iter_mut().enumerate().skip(r).take(raw.row_span) {
                for cc in c..c + raw.col_span {
                    if row.len() <= cc {
                        row.resize(cc + 1, None);
                    }
                    if let Some(other) = row[cc] {
                        let other: &GridCell = &cells[other];
                        return Err(HtmlError::NotRectangular(format!(
                            "slot ({rr}, {cc}) is covered by the cells at ({r}, {c}) and {:?}",
                            other.origin
                        )));
                    }
                    row[cc] = Some(index);
                }
            }
            cells.push(GridCell {
                text: normalize_text(&raw.raw_text),
                raw_text: raw.raw_text,
                row_span: raw.row_span,
                col_span: raw.col_span,
                is_header: raw.is_header || in_head,
                origin: (r, c),
            });
            c += raw.col_span;
        }
    }

    let cols = slots.iter().map(Vec::len).max().unwrap_or(0);
    let mut holes = Vec::new();
    for (r, row) in slots.iter().enumerate() {
        for c in 0..cols {
            if row.get(c).copied().flatten().is_none() {
                holes.push(format!("({r}, {c})"));
            }
        }
    }
    if !holes.is_empty() {
        return Err(HtmlError::NotRectangular(format!(
            "uncovered slots {}",
            holes.join(", ")
        )));
    }
    let slots = slots
        .into_iter()
        .map(|row| row.into_iter().map(|s| s.expect("checked above")).collect())
        .collect();
    Ok(ExpandedGrid {
        cells,
        rows: row_count,
        cols,
        thead_rows,
        slots,
    })
}

fn collect_rows(el: ElementRef, in_head: bool, rows: &mut Vec<(bool, Vec<RawCell>)>) {
    for child in el.children() {
        let Some(child) = ElementRef::wrap(child) else {
            continue;
        };
        match child.value().name() {
            "thead" => collect_rows(child, true, rows),
            "tbody" | "tfoot" => collect_rows(child, in_head, rows),
            "tr" => {
                let cells = child
                    .children()
                    .filter_map(ElementRef::wrap)
                    .filter_map(|cell| {
                        let name = cell.value().name();
                        (name == "td" || name == "th").then(|| RawCell {
                            raw_text: cell_text(cell),
                            row_span: span_attr(cell, "rowspan"),
                            col_span: span_attr(cell, "colspan"),
                            is_header: name == "th",
                        })
                    })
                    .collect();
                rows.push((in_head, cells));
            }
            _ => {}
        }
    }
}

fn span_attr(cell: ElementRef, name: &str) -> usize {
    cell.value()
        .attr(name)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .map_or(1, |v| v.min(MAX_SPAN))
}

fn cell_text(cell: ElementRef) -> String {
    let mut out = String::new();
    push_text(cell, &mut out);
    out
}

fn push_text(el: ElementRef, out: &mut String) {
    for child in el.children() {
        match child.value() {
            Node::Text(text) => out.push_str(text),
            Node::Element(_) => {
                let Some(child) = ElementRef::wrap(child) else {
                    continue;
                };
                let breaks = matches!(child.value().name(), "br" | "p" | "div" | "li");
                if breaks {
                    out.push(' ');
                }
                push_text(child, out);
                if breaks {
                    out.push(' ');
                }
            }
            _ => {}
        }
    }
}

fn is_headerish(cell: &GridCell, allow_blank_stub: bool) -> bool {
    cell.is_header || (allow_blank_stub && cell.origin.1 == 0 && cell.text.is_empty())
}

/// Number of top-header rows and left-header columns.
fn header_region(grid: &ExpandedGrid) -> Result<(usize, usize), HtmlError> {
    if grid.rows < 2 || grid.cols < 2 {
        return Err(HtmlError::EmptyHeaderRegion(format!(
            "a {}x{} grid leaves no room for both headers and a body",
            grid.rows, grid.cols
        )));
    }
    let any_markup = grid.thead_rows.is_some() || grid.cells.iter().any(|c| c.is_header);
    if !any_markup {
        return Ok((1, 1));
    }

    let mut header_rows = match grid.thead_rows {
        Some(n) => n,
        None => (0..grid.rows)
            .take_while(|&r| (0..grid.cols).all(|c| is_headerish(grid.cell_at(r, c), true)))
            .count(),
    };
    if header_rows == 0 || (header_rows == grid.rows && grid.thead_rows.is_none()) {
        header_rows = 1;
    }
    if header_rows >= grid.rows {
        return Err(HtmlError::EmptyHeaderRegion(
            "no body rows below the column header".into(),
        ));
    }

    let mut header_cols = (0..grid.cols)
        .take_while(|&c| (header_rows..grid.rows).all(|r| grid.cell_at(r, c).is_header))
        .count();
    if header_cols == 0 || header_cols == grid.cols {
        header_cols = 1;
    }
    Ok((header_rows, header_cols))
}

fn build_table(grid: &ExpandedGrid) -> Result<ParsedTable, HtmlError> {
    let (header_rows, header_cols) = header_region(grid)?;

    let mut stub_parts = Vec::new();
    let mut body = vec![vec![String::new(); grid.cols - header_cols]; grid.rows - header_rows];
    for cell in &grid.cells {
        let (r, c) = cell.origin;
        match (r < header_rows, c < header_cols) {
            (true, true) => {
                if cell.row_end() > header_rows || cell.col_end() > header_cols {
                    return Err(HtmlError::Nesting {
                        row: r,
                        col: c,
                        reason: "stub cell extends beyond the stub region".into(),
                    });
                }
                if !cell.text.is_empty() {
                    stub_parts.push(cell.text.clone());
                }
            }
            (true, false) => {
                if cell.row_end() > header_rows {
                    return Err(HtmlError::Nesting {
                        row: r,
                        col: c,
                        reason: "column header cell extends into the body".into(),
                    });
                }
            }
            (false, true) => {
                if cell.col_end() > header_cols {
                    return Err(HtmlError::Nesting {
                        row: r,
                        col: c,
                        reason: "row header cell extends into the body".into(),
                    });
                }
            }
            (false, false) => {
                if cell.row_span > 1 || cell.col_span > 1 {
                    return Err(HtmlError::MergedBodyCell { row: r, col: c });
                }
                body[r - header_rows][c - header_cols] = cell.text.clone();
            }
        }
    }

    let top = CoordTree::new(build_top(grid, header_rows, 0, header_cols, grid.cols)?);
    let left = CoordTree::new(build_left(grid, header_cols, 0, header_rows, grid.rows)?);

    let mut warnings = Vec::new();
    if header_cols == 1 {
        for r in header_rows..grid.rows {
            let cell = grid.cell_at(r, 0);
            if cell.origin == (r, 0) && looks_indented(&cell.raw_text) {
                warnings.push(Warning::SuspiciousIndentation {
                    row: r - header_rows,
                    label: cell.text.clone(),
                });
            }
        }
    }

    let table = HierarchicalTable::new(stub_parts.join(" "), left, top, body)?;
    warnings.extend(table.validate().warnings);
    Ok(ParsedTable { table, warnings })
}

fn looks_indented(raw: &str) -> bool {
    let lead: String = raw.chars().take_while(|c| c.is_whitespace()).collect();
    !raw.trim().is_empty() && !lead.contains('\n') && (lead.contains('\u{a0}') || lead.chars().count() >= 2)
}

/// Column-header nodes whose top-left slot is on `row`, within `[start, end)`.
fn build_top(
    grid: &ExpandedGrid,
    header_rows: usize,
    row: usize,
    start: usize,
    end: usize,
) -> Result<Vec<HeaderNode>, HtmlError> {
    let mut nodes = Vec::new();
    let mut c = start;
    while c < end {
        let cell = grid.cell_at(row, c);
        if cell.origin != (row, c) {
            return Err(HtmlError::Nesting {
                row,
                col: c,
                reason: format!("slot is covered by the cell at {:?}", cell.origin),
            });
        }
        if cell.col_end() > end {
            return Err(HtmlError::Nesting {
                row,
                col: c,
                reason: "column header cell straddles its parent's span".into(),
            });
        }
        if cell.row_end() == header_rows {
            if cell.col_span != 1 {
                return Err(HtmlError::Nesting {
                    row,
                    col: c,
                    reason: "bottom column header cell spans several body columns".into(),
                });
            }
            nodes.push(HeaderNode::leaf(&cell.text)?);
        } else {
            let children = build_top(grid, header_rows, cell.row_end(), c, cell.col_end())?;
            push_node(&mut nodes, &cell.text, children)?;
        }
        c = cell.col_end();
    }
    Ok(nodes)
}

/// Row-header nodes whose top-left slot is in `col`, within rows `[start, end)`.
fn build_left(
    grid: &ExpandedGrid,
    header_cols: usize,
    col: usize,
    start: usize,
    end: usize,
) -> Result<Vec<HeaderNode>, HtmlError> {
    let mut nodes = Vec::new();
    let mut r = start;
    while r < end {
        let cell = grid.cell_at(r, col);
        if cell.origin != (r, col) {
            return Err(HtmlError::Nesting {
                row: r,
                col,
                reason: format!("slot is covered by the cell at {:?}", cell.origin),
            });
        }
        if cell.row_end() > end {
            return Err(HtmlError::Nesting {
                row: r,
                col,
                reason: "row header cell straddles its parent's span".into(),
            });
        }
        if cell.col_end() == header_cols {
            if cell.row_span != 1 {
                return Err(HtmlError::Nesting {
                    row: r,
                    col,
                    reason: "innermost row header cell spans several body rows".into(),
                });
            }
            nodes.push(HeaderNode::leaf(&cell.text)?);
        } else {
            let children = build_left(grid, header_cols, cell.col_end(), r, cell.row_end())?;
            push_node(&mut nodes, &cell.text, children)?;
        }
        r = cell.row_end();
    }
    Ok(nodes)
}

/// A blank parent cell contributes its children directly to its own level.
fn push_node(nodes: &mut Vec<HeaderNode>, label: &str, children: Vec<HeaderNode>) -> Result<(), HtmlError> {
    if label.is_empty() {
        nodes.extend(children);
    } else {
        nodes.push(HeaderNode::new(label, children)?);
    }
    Ok(())
}

/// Canonical HTML: top header in `thead`, row headers as `th` in `tbody`,
/// body as `td`, spans derived from tree shape.
pub fn serialize_html(table: &HierarchicalTable) -> String {
    let header_rows = table.top().depth();
    let header_cols = table.left().depth();

    let mut top_rows: Vec<Vec<(&HeaderNode, usize)>> = vec![Vec::new(); header_rows];
    collect_levels(table.top().roots(), 0, &mut top_rows);

    let mut out = String::from("<table>\n<thead>\n");
    for (depth, row) in top_rows.iter().enumerate() {
        out.push_str("<tr>");
        if depth == 0 {
            push_cell(&mut out, "th", table.stub_header(), header_rows, header_cols);
        }
        for &(node, d) in row {
            let (rs, cs) = if node.is_leaf() {
                (header_rows - d, 1)
            } else {
                (1, node.leaf_count())
            };
            push_cell(&mut out, "th", node.label(), rs, cs);
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</thead>\n<tbody>\n");

    // Left header cells grouped by the body row of their first leaf.
    let mut starts: Vec<Vec<(&HeaderNode, usize)>> = vec![Vec::new(); table.rows()];
    let mut next_row = 0;
    collect_row_starts(table.left().roots(), 0, &mut next_row, &mut starts);
    for (row, heads) in starts.iter().enumerate() {
        out.push_str("<tr>");
        for &(node, d) in heads {
            let (rs, cs) = if node.is_leaf() {
                (1, header_cols - d)
            } else {
                (node.leaf_count(), 1)
            };
            push_cell(&mut out, "th", node.label(), rs, cs);
        }
        for value in &table.body()[row] {
            push_cell(&mut out, "td", value, 1, 1);
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</tbody>\n</table>");
    out
}

fn collect_levels<'a>(level: &'a [HeaderNode], depth: usize, rows: &mut [Vec<(&'a HeaderNode, usize)>]) {
    for node in level {
        rows[depth].push((node, depth));
        collect_levels(node.children(), depth + 1, rows);
    }
}

fn collect_row_starts<'a>(
    level: &'a [HeaderNode],
    depth: usize,
    next_row: &mut usize,
    starts: &mut [Vec<(&'a HeaderNode, usize)>],
) {
    for node in level {
        starts[*next_row].push((node, depth));
        if node.is_leaf() {
            *next_row += 1;
        } else {
            collect_row_starts(node.children(), depth + 1, next_row, starts);
        }
    }
}

fn push_cell(out: &mut String, tag: &str, text: &str, row_span: usize, col_span: usize) {
    out.push('<');
    out.push_str(tag);
    if row_span > 1 {
        let _ = write!(out, " rowspan=\"{row_span}\"");
    }
    if col_span > 1 {
        let _ = write!(out, " colspan=\"{col_span}\"");
    }
    out.push('>');
    escape_into(out, text);
    out.push_str("</");
    out.push_str(tag);
    out.push('>');
}

fn escape_into(out: &mut String, text: &str) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
}

/// Separator between levels of a key path in Markdown headers.
pub const MARKDOWN_PATH_SEPARATOR: &str = " / ";

/// Flat Markdown pipe table. Lossy: hierarchical header paths are joined
/// with [`MARKDOWN_PATH_SEPARATOR`] into single header strings.
pub fn serialize_markdown(table: &HierarchicalTable) -> String {
    let mut out = String::new();
    let top_paths = table.top().leaf_paths();
    let mut header = vec![md_escape(table.stub_header())];
    header.extend(top_paths.iter().map(|p| md_escape(&p.join(MARKDOWN_PATH_SEPARATOR))));
    push_md_row(&mut out, &header);
    push_md_row(&mut out, &vec!["---".to_string(); header.len()]);
    for (path, row) in table.left().leaf_paths().iter().zip(table.body()) {
        let mut cells = vec![md_escape(&path.join(MARKDOWN_PATH_SEPARATOR))];
        cells.extend(row.iter().map(|v| md_escape(v)));
        push_md_row(&mut out, &cells);
    }
    out
}

/// One line per body cell: `left / path | top / path = value`.
pub fn serialize_kv_lines(table: &HierarchicalTable) -> String {
    let mut out = String::new();
    for kv in table.flatten_to_kv() {
        let _ = writeln!(
            out,
            "{} | {} = {}",
            kv.left_key.join(MARKDOWN_PATH_SEPARATOR),
            kv.top_key.join(MARKDOWN_PATH_SEPARATOR),
            kv.value
        );
    }
    out
}

fn push_md_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for cell in cells {
        out.push(' ');
        out.push_str(cell);
        out.push_str(" |");
    }
    out.push('\n');
}

fn md_escape(text: &str) -> String {
    text.replace('|', "\\|")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::KeyValueTriple;

    #[test]
    fn minimal_table() {
        let html = "<table><tr><th></th><th>c</th></tr><tr><th>r</th><td>v</td></tr></table>";
        let t = parse_html_table(html).unwrap();
        assert_eq!(t.stub_header(), "");
        assert_eq!(t.left().leaf_paths(), vec![vec!["r".to_string()]]);
        assert_eq!(t.top().leaf_paths(), vec![vec!["c".to_string()]]);
        assert_eq!(t.body(), &[vec!["v".to_string()]]);
        assert_eq!(parse_html_table(&serialize_html(&t)).unwrap(), t);
    }

    #[test]
    fn colspan_builds_parent_over_sub_headers() {
        // Expanded by hand:
        //   row 0: [stub rs2] [Revenue cs2 ] [Margin rs2]
        //   row 1: [stub    ] [2022] [2023 ] [Margin    ]
        //   row 2: [Cloud   ] [1   ] [2    ] [30%       ]
        // top tree: Revenue{2022, 2023}, Margin
        let html = r#"<table>
            <tr><th rowspan="2">Segment</th><th colspan="2">Revenue</th><th rowspan="2">Margin</th></tr>
            <tr><th>2022</th><th>2023</th></tr>
            <tr><th>Cloud</th><td>1</td><td>2</td><td>30%</td></tr>
        </table>"#;
        let t = parse_html_table(html).unwrap();
        let expected_top = CoordTree::new(vec![
            HeaderNode::new(
                "Revenue",
                vec![HeaderNode::leaf("2022").unwrap(), HeaderNode::leaf("2023").unwrap()],
            )
            .unwrap(),
            HeaderNode::leaf("Margin").unwrap(),
        ]);
        assert_eq!(t.top(), &expected_top);
        assert_eq!(t.stub_header(), "Segment");
        assert_eq!(t.body(), &[vec!["1".to_string(), "2".into(), "30%".into()]]);
    }

    #[test]
    fn rowspan_builds_left_hierarchy() {
        let html = r#"<table>
            <tr><th colspan="2"></th><th>Value</th></tr>
            <tr><th rowspan="2">Assets</th><th>Cash</th><td>10</td></tr>
            <tr><th>Debt</th><td>20</td></tr>
            <tr><th colspan="2">Total</th><td>30</td></tr>
        </table>"#;
        let t = parse_html_table(html).unwrap();
        assert_eq!(
            t.left().leaf_paths(),
            vec![
                vec!["Assets".to_string(), "Cash".into()],
                vec!["Assets".to_string(), "Debt".into()],
                vec!["Total".to_string()],
            ]
        );
        assert!(!t.is_flat());
    }

    #[test]
    fn fallback_without_header_markup() {
        let html = "<table><tr><td>Year</td><td>Sales</td></tr><tr><td>2023</td><td>5</td></tr></table>";
        let t = parse_html_table(html).unwrap();
        assert_eq!(t.stub_header(), "Year");
        assert_eq!(t.flatten_to_kv(), vec![KeyValueTriple::new(["2023"], ["Sales"], "5")]);
    }

    #[test]
    fn blank_stub_td_is_tolerated() {
        let html = "<table><tr><td></td><th>A</th><th>B</th></tr><tr><th>x</th><td>1</td><td>2</td></tr></table>";
        let t = parse_html_table(html).unwrap();
        assert_eq!(t.rows(), 1);
        assert_eq!(t.cols(), 2);
    }

    #[test]
    fn entities_and_markup_are_reduced_to_text() {
        let html =
            "<table><tr><th>&nbsp;</th><th>R&amp;D <b>cost</b></th></tr><tr><th>a<br>b</th><td>&lt;1</td></tr></table>";
        let t = parse_html_table(html).unwrap();
        assert_eq!(t.top().leaf_paths(), vec![vec!["R&D cost".to_string()]]);
        assert_eq!(t.left().leaf_paths(), vec![vec!["a b".to_string()]]);
        assert_eq!(t.body()[0][0], "<1");
        assert_eq!(parse_html_table(&serialize_html(&t)).unwrap(), t);
    }

    #[test]
    fn table_count_errors() {
        assert_eq!(parse_html_table("<p>none</p>").unwrap_err(), HtmlError::TableCount(0));
        let two = "<table><tr><td>a</td></tr></table><table><tr><td>b</td></tr></table>";
        assert_eq!(parse_html_table(two).unwrap_err(), HtmlError::TableCount(2));
    }

    #[test]
    fn ragged_grid_is_rejected() {
        let html = "<table><tr><th></th><th>a</th><th>b</th></tr><tr><th>r</th><td>1</td></tr></table>";
        match parse_html_table(html) {
            Err(HtmlError::NotRectangular(msg)) => assert!(msg.contains("(1, 2)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let overflow = "<table><tr><th></th><th>a</th></tr><tr><th rowspan=\"3\">r</th><td>1</td></tr></table>";
        assert!(matches!(parse_html_table(overflow), Err(HtmlError::NotRectangular(_))));
    }

    #[test]
    fn single_row_has_no_header_region() {
        let html = "<table><tr><th>a</th><th>b</th></tr></table>";
        assert!(matches!(parse_html_table(html), Err(HtmlError::EmptyHeaderRegion(_))));
    }

    #[test]
    fn merged_body_cells_are_rejected() {
        let html = "<table><tr><th></th><th>a</th><th>b</th></tr><tr><th>r</th><td colspan=\"2\">1</td></tr></table>";
        assert_eq!(
            parse_html_table(html).unwrap_err(),
            HtmlError::MergedBodyCell { row: 1, col: 1 }
        );
    }

    #[test]
    fn straddling_header_is_rejected() {
        // "2023" starts under "A" but extends under "B".
        let html = r#"<table>
            <tr><th rowspan="2"></th><th colspan="2">A</th><th colspan="2">B</th></tr>
            <tr><th>x</th><th colspan="2">2023</th><th>y</th></tr>
            <tr><th>r</th><td>1</td><td>2</td><td>3</td><td>4</td></tr>
        </table>"#;
        assert!(matches!(parse_html_table(html), Err(HtmlError::Nesting { .. })));
    }

    #[test]
    fn blank_parent_header_promotes_children() {
        let html = r#"<table>
            <tr><th rowspan="2"></th><th></th><th colspan="2">Deaths</th></tr>
            <tr><th>Total</th><th>Males</th><th>Females</th></tr>
            <tr><th>Lung</th><td>1</td><td>2</td><td>3</td></tr>
        </table>"#;
        let t = parse_html_table(html).unwrap();
        assert_eq!(
            t.top().leaf_paths(),
            vec![
                vec!["Total".to_string()],
                vec!["Deaths".to_string(), "Males".into()],
                vec!["Deaths".to_string(), "Females".into()],
            ]
        );
    }

    #[test]
    fn indentation_is_flagged_not_inferred() {
        let html = "<table><tr><th></th><th>v</th></tr>\
            <tr><th>Assets</th><td></td></tr>\
            <tr><th>&nbsp;&nbsp;Cash</th><td>1</td></tr></table>";
        let parsed = parse_html_table_with_warnings(html).unwrap();
        assert!(parsed.table.is_flat());
        assert_eq!(
            parsed.warnings,
            vec![Warning::SuspiciousIndentation {
                row: 1,
                label: "Cash".into()
            }]
        );
    }

    #[test]
    fn serialized_form_is_canonical() {
        let html = r#"<table>
            <tr><th rowspan="2">Segment</th><th colspan="2">Revenue</th><th rowspan="2">Margin</th></tr>
            <tr><th>2022</th><th>2023</th></tr>
            <tr><th>Cloud</th><td>1</td><td>2</td><td>30%</td></tr>
        </table>"#;
        let t = parse_html_table(html).unwrap();
        let expected = "<table>\n<thead>\n\
            <tr><th rowspan=\"2\">Segment</th><th colspan=\"2\">Revenue</th><th rowspan=\"2\">Margin</th></tr>\n\
            <tr><th>2022</th><th>2023</th></tr>\n\
            </thead>\n<tbody>\n\
            <tr><th>Cloud</th><td>1</td><td>2</td><td>30%</td></tr>\n\
            </tbody>\n</table>";
        assert_eq!(serialize_html(&t), expected);
    }

    #[test]
    fn span_conservation() {
        let html = r#"<table>
            <tr><th rowspan="2" colspan="2">s</th><th colspan="2">A</th></tr>
            <tr><th>a1</th><th>a2</th></tr>
            <tr><th rowspan="2">G</th><th>g1</th><td>1</td><td>2</td></tr>
            <tr><th>g2</th><td>3</td><td>4</td></tr>
        </table>"#;
        let grid = expand_grid(html).unwrap();
        let covered: usize = grid.cells.iter().map(|c| c.row_span * c.col_span).sum();
        assert_eq!(covered, grid.rows * grid.cols);
    }

    #[test]
    fn markdown_flat() {
        let t = HierarchicalTable::new(
            "Company",
            CoordTree::flat(["MSFT", "GOOG"]).unwrap(),
            CoordTree::flat(["Q1", "Q2"]).unwrap(),
            vec![vec!["1", "2"], vec!["3", ""]],
        )
        .unwrap();
        assert_eq!(
            serialize_markdown(&t),
            "| Company | Q1 | Q2 |\n| --- | --- | --- |\n| MSFT | 1 | 2 |\n| GOOG | 3 |  |\n"
        );
    }

    #[test]
    fn markdown_joins_paths() {
        let left = CoordTree::new(vec![HeaderNode::new(
            "Urinary tract",
            vec![HeaderNode::leaf("Kidney and renal pelvis").unwrap()],
        )
        .unwrap()]);
        let top = CoordTree::flat(["a|b"]).unwrap();
        let t = HierarchicalTable::new("", left, top, vec![vec!["x"]]).unwrap();
        let md = serialize_markdown(&t);
        assert!(md.contains("| Urinary tract / Kidney and renal pelvis | x |"), "{md}");
        assert!(md.contains("a\\|b"));
    }
}

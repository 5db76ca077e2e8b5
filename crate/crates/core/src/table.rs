//! Hierarchical tables addressed by bi-dimensional tree coordinates.
//!
//! A [`HierarchicalTable`] is a stub header, a left (row header) tree, a top
//! (column header) tree and a dense body grid. Body row `i` belongs to the
//! `i`-th leaf of the left tree in document order, body column `j` to the
//! `j`-th leaf of the top tree. Every body cell therefore has exactly one
//! `(left coord, top coord)` address.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TableError;

/// Collapses internal whitespace runs to one space and trims both ends.
/// Case is preserved.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// A header cell and the header cells nested beneath it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHeaderNode")]
pub struct HeaderNode {
    label: String,
    children: Vec<HeaderNode>,
}

#[derive(Deserialize)]
struct RawHeaderNode {
    label: String,
    #[serde(default)]
    children: Vec<HeaderNode>,
}

impl TryFrom<RawHeaderNode> for HeaderNode {
    type Error = TableError;

    fn try_from(raw: RawHeaderNode) -> Result<Self, Self::Error> {
        HeaderNode::new(raw.label, raw.children)
    }
}

impl HeaderNode {
    /// Builds a node; the label is normalized and must not end up empty.
    pub fn new(label: impl AsRef<str>, children: Vec<HeaderNode>) -> Result<Self, TableError> {
        let label = normalize_text(label.as_ref());
        if label.is_empty() {
            return Err(TableError::EmptyLabel);
        }
        Ok(Self { label, children })
    }

    pub fn leaf(label: impl AsRef<str>) -> Result<Self, TableError> {
        Self::new(label, Vec::new())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[HeaderNode] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(HeaderNode::leaf_count).sum()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(HeaderNode::depth).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(HeaderNode::node_count).sum::<usize>()
    }
}

/// An ordered forest of header cells: the left or top coordinate tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordTree {
    roots: Vec<HeaderNode>,
}

impl CoordTree {
    pub fn new(roots: Vec<HeaderNode>) -> Self {
        Self { roots }
    }

    /// A depth-1 tree with one root per label.
    pub fn flat<I, S>(labels: I) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let roots = labels
            .into_iter()
            .map(HeaderNode::leaf)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { roots })
    }

    pub fn roots(&self) -> &[HeaderNode] {
        &self.roots
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.roots.iter().map(HeaderNode::leaf_count).sum()
    }

    /// Zero for an empty tree.
    pub fn depth(&self) -> usize {
        self.roots.iter().map(HeaderNode::depth).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(HeaderNode::node_count).sum()
    }

    /// Walks `coord` from the root level and returns the addressed node.
    pub fn node(&self, coord: &TreeCoord) -> Result<&HeaderNode, TableError> {
        let mut level = self.roots.as_slice();
        let mut found = None;
        for (depth, &index) in coord.path().iter().enumerate() {
            let node = level.get(index).ok_or_else(|| TableError::CoordOutOfRange {
                coord: coord.clone(),
                depth,
                index,
                len: level.len(),
            })?;
            level = node.children();
            found = Some(node);
        }
        // TreeCoord is never empty, so the loop ran at least once.
        found.ok_or(TableError::EmptyCoord)
    }

    /// The label path from the root-level node down to the addressed node.
    pub fn resolve(&self, coord: &TreeCoord) -> Result<Vec<String>, TableError> {
        let mut level = self.roots.as_slice();
        let mut labels = Vec::with_capacity(coord.len());
        for (depth, &index) in coord.path().iter().enumerate() {
            let node = level.get(index).ok_or_else(|| TableError::CoordOutOfRange {
                coord: coord.clone(),
                depth,
                index,
                len: level.len(),
            })?;
            labels.push(node.label.clone());
            level = node.children();
        }
        Ok(labels)
    }

    /// All leaf coordinates in document (left-to-right, preorder) order.
    pub fn leaf_coords(&self) -> Vec<TreeCoord> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut path = Vec::new();
        collect_leaves(&self.roots, &mut path, &mut out);
        out
    }

    /// Label paths of every leaf, in the same order as [`CoordTree::leaf_coords`].
    pub fn leaf_paths(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut labels = Vec::new();
        collect_leaf_paths(&self.roots, &mut labels, &mut out);
        out
    }

    /// Position of a leaf coordinate in document order, if `coord` addresses a leaf.
    pub fn leaf_index(&self, coord: &TreeCoord) -> Result<usize, TableError> {
        let node = self.node(coord)?;
        if !node.is_leaf() {
            return Err(TableError::NotALeaf(coord.clone()));
        }
        let mut index = 0;
        let mut level = self.roots.as_slice();
        for &i in coord.path() {
            index += level[..i].iter().map(HeaderNode::leaf_count).sum::<usize>();
            level = level[i].children();
        }
        Ok(index)
    }
}

fn collect_leaves(level: &[HeaderNode], path: &mut Vec<usize>, out: &mut Vec<TreeCoord>) {
    for (i, node) in level.iter().enumerate() {
        path.push(i);
        if node.is_leaf() {
            out.push(TreeCoord(path.clone()));
        } else {
            collect_leaves(node.children(), path, out);
        }
        path.pop();
    }
}

fn collect_leaf_paths(level: &[HeaderNode], labels: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    for node in level {
        labels.push(node.label.clone());
        if node.is_leaf() {
            out.push(labels.clone());
        } else {
            collect_leaf_paths(node.children(), labels, out);
        }
        labels.pop();
    }
}

/// Child-index path from the root level of a [`CoordTree`], zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TreeCoord(Vec<usize>);

impl TreeCoord {
    pub fn new(path: Vec<usize>) -> Result<Self, TableError> {
        if path.is_empty() {
            return Err(TableError::EmptyCoord);
        }
        Ok(Self(path))
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for TreeCoord {
    type Error = TableError;

    fn try_from(path: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(path)
    }
}

impl From<TreeCoord> for Vec<usize> {
    fn from(coord: TreeCoord) -> Self {
        coord.0
    }
}

impl fmt::Display for TreeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, index) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{index}")?;
        }
        f.write_str(">")
    }
}

/// A body cell flattened to its row-header path, column-header path and text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyValueTriple {
    pub left_key: Vec<String>,
    pub top_key: Vec<String>,
    pub value: String,
}

impl KeyValueTriple {
    pub fn new<L, T>(left_key: L, top_key: T, value: impl Into<String>) -> Self
    where
        L: IntoIterator,
        L::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        Self {
            left_key: left_key.into_iter().map(Into::into).collect(),
            top_key: top_key.into_iter().map(Into::into).collect(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Violation {
    DimensionMismatch { axis: Axis, leaves: usize, body: usize },
    RaggedRow { row: usize, expected: usize, found: usize },
    EmptyLabel { axis: Axis },
    EmptyTree { axis: Axis },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { axis, leaves, body } => write!(
                f,
                "{axis} tree has {leaves} leaves but the body has {body} {}",
                match axis {
                    Axis::Left => "rows",
                    Axis::Top => "columns",
                }
            ),
            Violation::RaggedRow { row, expected, found } => {
                write!(f, "body row {row} has {found} cells, expected {expected}")
            }
            Violation::EmptyLabel { axis } => write!(f, "{axis} tree contains an empty label"),
            Violation::EmptyTree { axis } => write!(f, "{axis} tree is empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Warning {
    /// Two leaves of the same tree share a full label path.
    DuplicateKeyPath { axis: Axis, path: Vec<String> },
    /// A flat row-header region whose raw labels start with indentation,
    /// which may encode a hierarchy the parser does not infer.
    SuspiciousIndentation { row: usize, label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Left,
    Top,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Left => "left",
            Axis::Top => "top",
        })
    }
}

/// Outcome of checking a table's invariants. Warnings never make a table invalid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the table invariants over loose parts, before a table exists.
pub fn validate_parts(left: &CoordTree, top: &CoordTree, body: &[Vec<String>]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (axis, tree) in [(Axis::Left, left), (Axis::Top, top)] {
        if tree.is_empty() {
            report.violations.push(Violation::EmptyTree { axis });
        }
        if has_empty_label(tree.roots()) {
            report.violations.push(Violation::EmptyLabel { axis });
        }
    }

    let rows = left.leaf_count();
    let cols = top.leaf_count();
    if body.len() != rows {
        report.violations.push(Violation::DimensionMismatch {
            axis: Axis::Left,
            leaves: rows,
            body: body.len(),
        });
    }
    let body_cols = body.first().map_or(0, Vec::len);
    if body_cols != cols {
        report.violations.push(Violation::DimensionMismatch {
            axis: Axis::Top,
            leaves: cols,
            body: body_cols,
        });
    }
    for (row, cells) in body.iter().enumerate().skip(1) {
        if cells.len() != body_cols {
            report.violations.push(Violation::RaggedRow {
                row,
                expected: body_cols,
                found: cells.len(),
            });
        }
    }

    for (axis, tree) in [(Axis::Left, left), (Axis::Top, top)] {
        let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
        for path in tree.leaf_paths() {
            let count = seen.entry(path.clone()).or_default();
            *count += 1;
            if *count == 2 {
                report.warnings.push(Warning::DuplicateKeyPath { axis, path });
            }
        }
    }
    report
}

fn has_empty_label(level: &[HeaderNode]) -> bool {
    level
        .iter()
        .any(|n| n.label.is_empty() || has_empty_label(n.children()))
}

/// A validated hierarchical table. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct HierarchicalTable {
    stub_header: String,
    left: CoordTree,
    top: CoordTree,
    body: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    stub_header: String,
    left: CoordTree,
    top: CoordTree,
    body: Vec<Vec<String>>,
}

impl TryFrom<RawTable> for HierarchicalTable {
    type Error = TableError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        HierarchicalTable::new(raw.stub_header, raw.left, raw.top, raw.body)
    }
}

impl HierarchicalTable {
    /// Normalizes the stub and every body cell, then rejects the table if
    /// any invariant is violated.
    pub fn new<S: AsRef<str>>(
        stub_header: impl AsRef<str>,
        left: CoordTree,
        top: CoordTree,
        body: Vec<Vec<S>>,
    ) -> Result<Self, TableError> {
        let body: Vec<Vec<String>> = body
            .into_iter()
            .map(|row| row.iter().map(|c| normalize_text(c.as_ref())).collect())
            .collect();
        let report = validate_parts(&left, &top, &body);
        if !report.is_valid() {
            return Err(TableError::Invalid(report));
        }
        Ok(Self {
            stub_header: normalize_text(stub_header.as_ref()),
            left,
            top,
            body,
        })
    }

    pub fn stub_header(&self) -> &str {
        &self.stub_header
    }

    pub fn left(&self) -> &CoordTree {
        &self.left
    }

    pub fn top(&self) -> &CoordTree {
        &self.top
    }

    pub fn body(&self) -> &[Vec<String>] {
        &self.body
    }

    pub fn rows(&self) -> usize {
        self.body.len()
    }

    pub fn cols(&self) -> usize {
        self.top.leaf_count()
    }

    /// Both header trees have depth one.
    pub fn is_flat(&self) -> bool {
        self.left.depth() == 1 && self.top.depth() == 1
    }

    /// The body cell addressed by a pair of leaf coordinates.
    pub fn cell(&self, left: &TreeCoord, top: &TreeCoord) -> Result<&str, TableError> {
        let row = self.left.leaf_index(left)?;
        let col = self.top.leaf_index(top)?;
        Ok(&self.body[row][col])
    }

    /// Re-runs validation; a constructed table only ever carries warnings.
    pub fn validate(&self) -> ValidationReport {
        validate_parts(&self.left, &self.top, &self.body)
    }

    /// One triple per body cell in row-major order. The stub header is not
    /// part of any key.
    pub fn flatten_to_kv(&self) -> Vec<KeyValueTriple> {
        let left_paths = self.left.leaf_paths();
        let top_paths = self.top.leaf_paths();
        let mut out = Vec::with_capacity(left_paths.len() * top_paths.len());
        for (row, left_key) in left_paths.iter().enumerate() {
            for (col, top_key) in top_paths.iter().enumerate() {
                out.push(KeyValueTriple {
                    left_key: left_key.clone(),
                    top_key: top_key.clone(),
                    value: self.body[row][col].clone(),
                });
            }
        }
        out
    }

    /// Rebuilds a table from row-major triples laid over the given trees.
    ///
    /// Fails if the number of triples does not match the grid or a triple's
    /// key paths disagree with the leaf it lands on.
    pub fn from_kv(
        stub_header: impl AsRef<str>,
        left: CoordTree,
        top: CoordTree,
        triples: &[KeyValueTriple],
    ) -> Result<Self, TableError> {
        let left_paths = left.leaf_paths();
        let top_paths = top.leaf_paths();
        let expected = left_paths.len() * top_paths.len();
        if triples.len() != expected {
            return Err(TableError::TripleCount {
                expected,
                found: triples.len(),
            });
        }
        let mut body = Vec::with_capacity(left_paths.len());
        for (row, left_key) in left_paths.iter().enumerate() {
            let mut cells = Vec::with_capacity(top_paths.len());
            for (col, top_key) in top_paths.iter().enumerate() {
                let triple = &triples[row * top_paths.len() + col];
                if &triple.left_key != left_key || &triple.top_key != top_key {
                    return Err(TableError::TripleKeyMismatch { row, col });
                }
                cells.push(triple.value.clone());
            }
            body.push(cells);
        }
        Self::new(stub_header, left, top, body)
    }
}

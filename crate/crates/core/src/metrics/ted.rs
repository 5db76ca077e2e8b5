//! Ordered tree edit distance (Zhang–Shasha) and the TEDS structure score.

use serde::{Deserialize, Serialize};

use crate::table::{CoordTree, HeaderNode, HierarchicalTable};

/// An ordered, labeled tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledTree<L> {
    pub label: L,
    pub children: Vec<LabeledTree<L>>,
}

impl<L> LabeledTree<L> {
    pub fn new(label: L, children: Vec<LabeledTree<L>>) -> Self {
        Self { label, children }
    }

    pub fn leaf(label: L) -> Self {
        Self::new(label, Vec::new())
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(LabeledTree::node_count).sum::<usize>()
    }
}

/// Node labels of a [`StructureTree`]. The sentinels can never equal a header label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureLabel {
    Root,
    LeftRegion,
    TopRegion,
    Header(String),
}

/// A table's header structure as one tree: a root whose two children hold
/// the left and top coordinate trees. Body cells are not included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureTree(LabeledTree<StructureLabel>);

impl StructureTree {
    pub fn from_table(table: &HierarchicalTable) -> Self {
        Self::from_trees(table.left(), table.top())
    }

    pub fn from_trees(left: &CoordTree, top: &CoordTree) -> Self {
        let region =
            |label, tree: &CoordTree| LabeledTree::new(label, tree.roots().iter().map(header_subtree).collect());
        Self(LabeledTree::new(
            StructureLabel::Root,
            vec![
                region(StructureLabel::LeftRegion, left),
                region(StructureLabel::TopRegion, top),
            ],
        ))
    }

    pub fn tree(&self) -> &LabeledTree<StructureLabel> {
        &self.0
    }

    pub fn node_count(&self) -> usize {
        self.0.node_count()
    }
}

fn header_subtree(node: &HeaderNode) -> LabeledTree<StructureLabel> {
    LabeledTree::new(
        StructureLabel::Header(node.label().to_string()),
        node.children().iter().map(header_subtree).collect(),
    )
}

/// Postorder view of a tree: labels and leftmost-leaf descendants.
struct Postorder<'a, L> {
    labels: Vec<&'a L>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a, L> Postorder<'a, L> {
    fn new(tree: &'a LabeledTree<L>) -> Self {
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        visit(tree, &mut labels, &mut leftmost);

        // A keyroot is the highest-numbered node for its leftmost leaf.
        let n = labels.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Self {
            labels,
            leftmost,
            keyroots,
        }
    }
}

fn visit<'a, L>(node: &'a LabeledTree<L>, labels: &mut Vec<&'a L>, leftmost: &mut Vec<usize>) -> usize {
    let mut first_leaf = None;
    for child in &node.children {
        let child_leftmost = visit(child, labels, leftmost);
        first_leaf.get_or_insert(child_leftmost);
    }
    let index = labels.len();
    labels.push(&node.label);
    let lml = first_leaf.unwrap_or(index);
    leftmost.push(lml);
    lml
}

/// Minimum number of unit-cost node insertions, deletions and relabelings
/// (relabeling equal labels is free) turning `a` into `b`.
pub fn tree_edit_distance<L: PartialEq>(a: &LabeledTree<L>, b: &LabeledTree<L>) -> usize {
    let a = Postorder::new(a);
    let b = Postorder::new(b);
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut tree_dist = vec![vec![0usize; m]; n];
    let mut forest = vec![vec![0usize; m + 1]; n + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.leftmost[i], b.leftmost[j]);
            let rows = i - li + 2;
            let cols = j - lj + 2;
            forest[0][0] = 0;
            for x in 1..rows {
                forest[x][0] = forest[x - 1][0] + 1;
            }
            for y in 1..cols {
                forest[0][y] = forest[0][y - 1] + 1;
            }
            for x in 1..rows {
                let node_a = li + x - 1;
                for y in 1..cols {
                    let node_b = lj + y - 1;
                    let delete = forest[x - 1][y] + 1;
                    let insert = forest[x][y - 1] + 1;
                    if a.leftmost[node_a] == li && b.leftmost[node_b] == lj {
                        let relabel = usize::from(a.labels[node_a] != b.labels[node_b]);
                        let best = delete.min(insert).min(forest[x - 1][y - 1] + relabel);
                        forest[x][y] = best;
                        tree_dist[node_a][node_b] = best;
                    } else {
                        let px = a.leftmost[node_a] - li;
                        let py = b.leftmost[node_b] - lj;
                        let subst = forest[px][py] + tree_dist[node_a][node_b];
                        forest[x][y] = delete.min(insert).min(subst);
                    }
                }
            }
        }
    }
    tree_dist[n - 1][m - 1]
}

/// `1 - TED / max(|a|, |b|)`, floored at 0.
pub fn tree_similarity<L: PartialEq>(a: &LabeledTree<L>, b: &LabeledTree<L>) -> f64 {
    let size = a.node_count().max(b.node_count());
    (1.0 - tree_edit_distance(a, b) as f64 / size as f64).max(0.0)
}

/// Structure similarity of two tables over their combined header trees.
pub fn teds(a: &HierarchicalTable, b: &HierarchicalTable) -> f64 {
    tree_similarity(StructureTree::from_table(a).tree(), StructureTree::from_table(b).tree())
}

//! Tree edit distance by exhaustive search over edit mappings.
//!
//! A set of edits that keeps node set `A` of the first tree and `B` of the
//! second is valid exactly when deleting every other node (splicing its
//! children into its parent) leaves two forests of identical shape. The cost
//! is the deletions, the insertions and the label mismatches between aligned
//! nodes. Enumerating every subset of both trees and taking the minimum gives
//! the distance directly from the definition.

use std::collections::HashMap;

use tabqa_core::metrics::LabeledTree;

/// Every induced forest of a tree, grouped by shape. Values are the preorder
/// label sequences that realize each shape.
pub struct SubforestIndex<L> {
    size: usize,
    by_shape: HashMap<String, Vec<Vec<L>>>,
}

struct Flat<L> {
    labels: Vec<L>,
    children: Vec<Vec<usize>>,
}

fn flatten<L: Clone>(tree: &LabeledTree<L>) -> Flat<L> {
    fn walk<L: Clone>(node: &LabeledTree<L>, flat: &mut Flat<L>) -> usize {
        let id = flat.labels.len();
        flat.labels.push(node.label.clone());
        flat.children.push(Vec::new());
        for child in &node.children {
            let c = walk(child, flat);
            flat.children[id].push(c);
        }
        id
    }
    let mut flat = Flat {
        labels: Vec::new(),
        children: Vec::new(),
    };
    walk(tree, &mut flat);
    flat
}

fn induced<L: Clone>(flat: &Flat<L>, node: usize, keep: u64, shape: &mut String, labels: &mut Vec<L>) {
    let kept = keep & (1 << node) != 0;
    if kept {
        shape.push('(');
        labels.push(flat.labels[node].clone());
    }
    for &c in &flat.children[node] {
        induced(flat, c, keep, shape, labels);
    }
    if kept {
        shape.push(')');
    }
}

impl<L: Clone + PartialEq> SubforestIndex<L> {
    pub fn new(tree: &LabeledTree<L>) -> Self {
        let flat = flatten(tree);
        let n = flat.labels.len();
        assert!(n <= 16, "exhaustive oracle is limited to small trees");
        let mut by_shape: HashMap<String, Vec<Vec<L>>> = HashMap::new();
        for keep in 0u64..(1 << n) {
            let mut shape = String::new();
            let mut labels = Vec::new();
            induced(&flat, 0, keep, &mut shape, &mut labels);
            let entry = by_shape.entry(shape).or_default();
            if !entry.contains(&labels) {
                entry.push(labels);
            }
        }
        Self { size: n, by_shape }
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Exhaustive TED between two indexed trees.
pub fn brute_force_ted_indexed<L: PartialEq>(a: &SubforestIndex<L>, b: &SubforestIndex<L>) -> usize {
    let mut best = a.size + b.size;
    for (shape, a_labels) in &a.by_shape {
        let Some(b_labels) = b.by_shape.get(shape) else {
            continue;
        };
        let kept = shape.len() / 2;
        let base = (a.size - kept) + (b.size - kept);
        if base >= best {
            continue;
        }
        for la in a_labels {
            for lb in b_labels {
                let mismatches = la.iter().zip(lb).filter(|(x, y)| x != y).count();
                best = best.min(base + mismatches);
            }
        }
    }
    best
}

pub fn brute_force_ted<L: Clone + PartialEq>(a: &LabeledTree<L>, b: &LabeledTree<L>) -> usize {
    brute_force_ted_indexed(&SubforestIndex::new(a), &SubforestIndex::new(b))
}

/// All ordered trees with exactly `n` nodes over `alphabet`, in a fixed order.
pub fn all_trees<L: Clone>(n: usize, alphabet: &[L]) -> Vec<LabeledTree<L>> {
    let mut out = Vec::new();
    for shape in all_shapes(n) {
        label_all(&shape, alphabet, &mut out);
    }
    out
}

#[derive(Clone)]
struct Shape(Vec<Shape>);

impl Shape {
    fn size(&self) -> usize {
        1 + self.0.iter().map(Shape::size).sum::<usize>()
    }
}

fn all_shapes(n: usize) -> Vec<Shape> {
    if n == 0 {
        return Vec::new();
    }
    all_forests(n - 1).into_iter().map(Shape).collect()
}

fn all_forests(n: usize) -> Vec<Vec<Shape>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for head in all_shapes(first) {
            for mut tail in all_forests(n - first) {
                tail.insert(0, head.clone());
                out.push(tail);
            }
        }
    }
    out
}

fn label_all<L: Clone>(shape: &Shape, alphabet: &[L], out: &mut Vec<LabeledTree<L>>) {
    let n = shape.size();
    let total = alphabet.len().pow(n as u32);
    for code in 0..total {
        let mut digits = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            digits.push(c % alphabet.len());
            c /= alphabet.len();
        }
        let mut next = 0;
        out.push(build(shape, alphabet, &digits, &mut next));
    }
}

fn build<L: Clone>(shape: &Shape, alphabet: &[L], digits: &[usize], next: &mut usize) -> LabeledTree<L> {
    let label = alphabet[digits[*next]].clone();
    *next += 1;
    let children = shape.0.iter().map(|s| build(s, alphabet, digits, next)).collect();
    LabeledTree::new(label, children)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(label: char, children: Vec<LabeledTree<char>>) -> LabeledTree<char> {
        LabeledTree::new(label, children)
    }

    #[test]
    fn tree_counts_follow_catalan_times_labelings() {
        // Ordered shapes with n nodes: Catalan(n - 1) = 1, 1, 2, 5, 14, 42.
        let catalan = [1usize, 1, 2, 5, 14, 42];
        for (i, c) in catalan.iter().enumerate() {
            let n = i + 1;
            assert_eq!(all_trees(n, &['a', 'b', 'c']).len(), c * 3usize.pow(n as u32));
        }
    }

    #[test]
    fn known_distances() {
        let a = t(
            'f',
            vec![
                t('d', vec![t('a', vec![]), t('c', vec![t('b', vec![])])]),
                t('e', vec![]),
            ],
        );
        let b = t(
            'f',
            vec![
                t('c', vec![t('d', vec![t('a', vec![]), t('b', vec![])])]),
                t('e', vec![]),
            ],
        );
        assert_eq!(brute_force_ted(&a, &b), 2);
        assert_eq!(brute_force_ted(&a, &a), 0);
        assert_eq!(brute_force_ted(&t('a', vec![]), &t('b', vec![t('a', vec![])])), 1);
    }
}

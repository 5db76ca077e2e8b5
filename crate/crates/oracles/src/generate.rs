//! Seeded random inputs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tabqa_core::metrics::LabeledTree;
use tabqa_core::{CoordTree, HeaderNode, HierarchicalTable};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "Revenue",
    "Net income",
    "Males",
    "Females",
    "2022",
    "2023",
    "Q1",
    "Total",
    "R&D",
    "a < b",
    "\"quoted\"",
    "Ünïcödé",
    "東京",
    "Cost/unit",
    "Lung and bronchus",
    "x > y",
    "It's",
    "—",
];

const VALUES: &[&str] = &[
    "",
    "0",
    "61, 276",
    "1,234",
    "(12)",
    "$5.2",
    "12.5%",
    "n/a",
    "<5",
    "A & B",
    "tab\tseparated",
    "é",
    "-3",
    "1 000",
];

pub fn word(rng: &mut TestRng) -> String {
    let w = WORDS.choose(rng).expect("non-empty");
    if rng.gen_bool(0.3) {
        format!("{w} {}", rng.gen_range(0..100))
    } else {
        w.to_string()
    }
}

/// A forest with `leaves` leaves, depth at most `max_depth`.
pub fn header_tree(rng: &mut TestRng, leaves: usize, max_depth: usize) -> CoordTree {
    CoordTree::new(forest(rng, leaves, max_depth))
}

fn forest(rng: &mut TestRng, mut leaves: usize, max_depth: usize) -> Vec<HeaderNode> {
    let mut out = Vec::new();
    while leaves > 0 {
        let take = rng.gen_range(1..=leaves);
        leaves -= take;
        let label = word(rng);
        let node = if max_depth > 1 && (take > 1 || rng.gen_bool(0.3)) {
            HeaderNode::new(label, forest(rng, take, max_depth - 1)).expect("non-empty label")
        } else if take == 1 {
            HeaderNode::leaf(label).expect("non-empty label")
        } else {
            // Depth exhausted: spend the rest as flat siblings.
            leaves += take - 1;
            HeaderNode::leaf(label).expect("non-empty label")
        };
        out.push(node);
    }
    out
}

/// A valid table with at most `max_rows` x `max_cols` body cells and header
/// trees of depth at most `max_depth`.
pub fn random_table(rng: &mut TestRng, max_rows: usize, max_cols: usize, max_depth: usize) -> HierarchicalTable {
    let rows = rng.gen_range(1..=max_rows);
    let cols = rng.gen_range(1..=max_cols);
    let left = header_tree(rng, rows, max_depth);
    let top = header_tree(rng, cols, max_depth);
    let body: Vec<Vec<String>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| VALUES.choose(rng).expect("non-empty").to_string())
                .collect()
        })
        .collect();
    let stub = if rng.gen_bool(0.5) { word(rng) } else { String::new() };
    HierarchicalTable::new(stub, left, top, body).expect("generated table is valid")
}

/// A random ordered tree with 1..=max_nodes nodes over `alphabet`.
pub fn random_tree<L: Clone>(rng: &mut TestRng, max_nodes: usize, alphabet: &[L]) -> LabeledTree<L> {
    let n = rng.gen_range(1..=max_nodes);
    // Random parent choices in preorder produce every shape.
    let mut parents = vec![usize::MAX];
    let mut path = vec![0usize];
    for i in 1..n {
        let depth = rng.gen_range(1..=path.len());
        path.truncate(depth);
        parents.push(*path.last().expect("root stays on the path"));
        path.push(i);
    }
    let labels: Vec<L> = (0..n)
        .map(|_| alphabet.choose(rng).expect("non-empty").clone())
        .collect();
    fn build<L: Clone>(node: usize, parents: &[usize], labels: &[L]) -> LabeledTree<L> {
        let children = (0..parents.len())
            .filter(|&c| parents[c] == node)
            .map(|c| build(c, parents, labels))
            .collect();
        LabeledTree::new(labels[node].clone(), children)
    }
    build(0, &parents, &labels)
}

/// A short string mixing ASCII, whitespace and multi-byte characters.
pub fn random_text(rng: &mut TestRng, max_len: usize) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', ' ', '1', '2', ',', 'é', 'ß', '東', '😀', '\t', 'A'];
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *ALPHABET.choose(rng).expect("non-empty")).collect()
}

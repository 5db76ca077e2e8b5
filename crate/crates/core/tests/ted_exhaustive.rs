//! Every ordered pair of trees with at most six nodes over three labels.
//! About 1.2e9 comparisons; run with `cargo test --release -- --ignored`.

use tabqa_core::metrics::{tree_edit_distance, LabeledTree};
use tabqa_oracles::ted::{all_trees, brute_force_ted_indexed, SubforestIndex};

#[test]
#[ignore = "hours on a single core"]
fn ted_matches_oracle_on_every_pair_up_to_six_nodes() {
    let trees: Vec<LabeledTree<char>> = (1..=6).flat_map(|n| all_trees(n, &['a', 'b', 'c'])).collect();
    let index: Vec<SubforestIndex<char>> = trees.iter().map(SubforestIndex::new).collect();
    for (a, ia) in trees.iter().zip(&index) {
        for (b, ib) in trees.iter().zip(&index) {
            assert_eq!(
                tree_edit_distance(a, b),
                brute_force_ted_indexed(ia, ib),
                "{a:?} vs {b:?}"
            );
        }
    }
}

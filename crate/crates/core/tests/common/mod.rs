#![allow(dead_code)]

use rand::Rng;
use sgtree_core::partition::{BuildOptions, ZTable};
use sgtree_core::sampler::sample_tree;
use sgtree_core::{PlaneTree, WeightSequence};

pub const RANDOM_TREE_MAX_EDGES: usize = 40;

pub fn uniform_table() -> ZTable {
    ZTable::build(&WeightSequence::uniform(), &BuildOptions::new(RANDOM_TREE_MAX_EDGES)).unwrap()
}

/// A uniform plane tree with a random number of edges, occasionally degenerate.
pub fn random_tree<R: Rng>(table: &ZTable, rng: &mut R) -> PlaneTree {
    if rng.random_ratio(1, 50) {
        return PlaneTree::degenerate();
    }
    let n = rng.random_range(1..=table.n_max());
    sample_tree(table, n, rng).unwrap()
}

/// Replaces the subtree at a random vertex by a fresh random subtree, so the
/// result tends to share a large left ball with `t`.
pub fn mutate<R: Rng>(table: &ZTable, t: &PlaneTree, rng: &mut R) -> PlaneTree {
    if t.is_degenerate() {
        return random_tree(table, rng);
    }
    let sizes = t.subtree_sizes();
    let v = rng.random_range(0..t.edges());
    let room = table.n_max() - (t.edges() - sizes[v]);
    let fresh = sample_tree(table, rng.random_range(1..=room.max(1)), rng).unwrap();
    let mut word = t.outdeg()[..v].to_vec();
    word.extend_from_slice(fresh.outdeg());
    word.extend_from_slice(&t.outdeg()[v + sizes[v]..]);
    PlaneTree::from_outdeg(word).unwrap()
}

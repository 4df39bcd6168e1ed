//! Negative triples drawn from unlabeled cell-drug pairs.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng as _;

use crate::graph::{Relation, RelationalGraph, Triple};
use crate::rng::Rng;

/// Every `(cell, drug node)` pair without a Sensitive or Resistant edge.
pub fn candidate_pool(graph: &RelationalGraph) -> Vec<(usize, usize)> {
    (0..graph.n_cells)
        .flat_map(|c| (graph.n_cells..graph.node_count()).map(move |d| (c, d)))
        .filter(|&(c, d)| !graph.has_response(c, d))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSample {
    pub triples: Vec<Triple>,
    /// How many requested negatives the pool could not supply.
    pub shortfall: usize,
}

/// Draws `ratio` negatives per response positive, uniformly without
/// replacement from `pool` minus any pair used by a positive. Negative `i`
/// takes the relation of positive `i % P`.
pub fn sample_negatives(pool: &[(usize, usize)], positives: &[Triple], ratio: usize, rng: &mut Rng) -> NegativeSample {
    let responses: Vec<&Triple> = positives.iter().filter(|t| t.r.is_response()).collect();
    let taken: HashSet<(usize, usize)> = responses.iter().map(|t| (t.s, t.o)).collect();
    let eligible: Vec<(usize, usize)> = pool.iter().copied().filter(|p| !taken.contains(p)).collect();
    let wanted = responses.len() * ratio;
    let count = wanted.min(eligible.len());
    let triples = index::sample(rng, eligible.len(), count)
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let (c, d) = eligible[k];
            Triple::negative(c, responses[i % responses.len()].r, d)
        })
        .collect();
    NegativeSample {
        triples,
        shortfall: wanted - count,
    }
}

/// Corrupts the object of each similarity positive to a same-type node with
/// no similarity edge to the subject.
pub(crate) fn sample_similarity_negatives(
    graph: &RelationalGraph,
    positives: &[Triple],
    ratio: usize,
    rng: &mut Rng,
) -> Vec<Triple> {
    let mut out = Vec::new();
    for t in positives.iter().filter(|t| t.r.is_similarity()) {
        let range = if t.r == Relation::CellSim { 0..graph.n_cells } else { graph.n_cells..graph.node_count() };
        for _ in 0..ratio {
            for _ in 0..32 {
                let o = rng.random_range(range.clone());
                if o != t.s && !graph.has_edge(t.r, t.s, o) {
                    out.push(Triple::negative(t.s, t.r, o));
                    break;
                }
            }
        }
    }
    out
}

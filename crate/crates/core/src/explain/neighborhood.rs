use std::collections::BTreeSet;

use crate::graph::{Relation, RelationalGraph, Triple};

/// Canonical edges (any relation, either direction) incident to a node
/// within `hops - 1` steps of the target's endpoints, ordered by relation id
/// then endpoints. `hops = 2` covers the two-layer receptive field.
pub fn computational_neighborhood(graph: &RelationalGraph, target: Triple, hops: usize) -> Vec<Triple> {
    let n = graph.node_count();
    let mut reached = vec![false; n];
    for v in [target.s, target.o] {
        if v < n {
            reached[v] = true;
        }
    }
    for _ in 1..hops {
        let mut next = reached.clone();
        for r in Relation::ALL {
            for &(s, o) in graph.edges(r) {
                if reached[s] || reached[o] {
                    next[s] = true;
                    next[o] = true;
                }
            }
        }
        reached = next;
    }
    if hops == 0 {
        return Vec::new();
    }
    let mut found = BTreeSet::new();
    for r in Relation::ALL {
        for &(s, o) in graph.edges(r) {
            if reached[s] || reached[o] {
                let c = Triple::positive(s, r, o).canonical();
                found.insert((c.r.id(), c.s, c.o));
            }
        }
    }
    found
        .into_iter()
        .map(|(r, s, o)| Triple::positive(s, Relation::from_id(r).expect("stored relation"), o))
        .collect()
}

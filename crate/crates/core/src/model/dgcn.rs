//! Directed relational graph convolution.
//!
//! One layer computes, for every node `i`,
//! `sigmoid( sum_r sum_{j in N_i^r} W_r x_j / c_{i,r} + W_0 x_i )`
//! where `N_i^r` are the sources of `r`-edges ending at `i` and `c_{i,r}`
//! is their count. Messages follow edge direction; inverse relations carry
//! the reverse flow with their own weights.

use std::sync::Arc;

use crate::autograd::{Matrix, Tape, Var};
use crate::graph::{Relation, RelationalGraph};
use crate::params::{glorot, Bound, ParamId, ParamStore};
use crate::rng::Rng;
use crate::{Error, Result};

/// Edge lists of one relation in message-passing form.
#[derive(Debug, Clone)]
pub struct RelationEdges {
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    /// `1 / c_{dst,r}` per edge.
    pub norm: Matrix,
}

impl RelationEdges {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Precomputed per-relation edge arrays for a [`RelationalGraph`].
///
/// Edge `k` of relation `r` is `graph.edges(r)[k]`, so positions can be
/// looked up by binary search on the graph's sorted lists.
#[derive(Debug, Clone)]
pub struct MessageGraph {
    pub nodes: usize,
    pub relations: Vec<RelationEdges>,
}

impl MessageGraph {
    pub fn new(graph: &RelationalGraph) -> Self {
        let nodes = graph.node_count();
        let relations = Relation::ALL
            .iter()
            .map(|&r| {
                let edges = graph.edges(r);
                let mut indegree = vec![0usize; nodes];
                for &(_, o) in edges {
                    indegree[o] += 1;
                }
                let src: Vec<usize> = edges.iter().map(|e| e.0).collect();
                let dst: Vec<usize> = edges.iter().map(|e| e.1).collect();
                let norm = Matrix::from_shape_fn((edges.len(), 1), |(k, _)| 1.0 / indegree[dst[k]] as f64);
                RelationEdges {
                    src: src.into(),
                    dst: dst.into(),
                    norm,
                }
            })
            .collect();
        Self { nodes, relations }
    }

    pub fn edges(&self, r: Relation) -> &RelationEdges {
        &self.relations[r.id()]
    }
}

/// How per-edge weights enter the degree normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Keep `c_{i,r}` at the unweighted neighbour count; weights scale messages linearly.
    Fixed,
    /// Replace `c_{i,r}` with `max(1, sum_j w_ij)`, so a weight of 0 behaves like deleting the edge.
    Weighted,
}

/// Real-valued per-edge weights (`E_r × 1` per relation) replacing the binary adjacency.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    pub per_relation: Vec<Option<Var>>,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Sigmoid,
    #[cfg(test)]
    Identity,
}

/// Weights of one relational layer: `W_r` for all eight relations plus the self-loop `W_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgcnLayer {
    pub relation_weights: [ParamId; Relation::COUNT],
    pub self_weight: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl DgcnLayer {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let relation_weights =
            Relation::ALL.map(|r| store.add(format!("{name}.{}", r.name()), glorot(in_dim, out_dim, rng)));
        let self_weight = store.add(format!("{name}.self"), glorot(in_dim, out_dim, rng));
        Self {
            relation_weights,
            self_weight,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &Bound,
        h: Var,
        graph: &MessageGraph,
        weights: Option<&EdgeWeights>,
    ) -> Result<Var> {
        self.forward_with(tape, p, h, graph, weights, Activation::Sigmoid)
    }

    pub(crate) fn forward_with(
        &self,
        tape: &mut Tape,
        p: &Bound,
        h: Var,
        graph: &MessageGraph,
        weights: Option<&EdgeWeights>,
        activation: Activation,
    ) -> Result<Var> {
        if tape.shape(h) != (graph.nodes, self.in_dim) {
            return Err(Error::Shape(format!(
                "layer input {:?}, expected ({}, {})",
                tape.shape(h),
                graph.nodes,
                self.in_dim
            )));
        }
        let mut total = tape.matmul(h, p.var(self.self_weight))?;
        for r in Relation::ALL {
            let edges = graph.edges(r);
            if edges.is_empty() {
                continue;
            }
            // Aggregating before projecting keeps intermediates at nodes×in_dim.
            let (src, dst) = (edges.src.clone(), edges.dst.clone());
            let weight = weights.and_then(|w| w.per_relation[r.id()].map(|v| (v, w.normalization)));
            let aggregated = match weight {
                None => {
                    let norm = tape.constant(edges.norm.clone());
                    tape.edge_aggregate(h, src, dst, norm, graph.nodes)?
                }
                Some((w, Normalization::Fixed)) => {
                    let norm = tape.constant(edges.norm.clone());
                    let coef = tape.hadamard(w, norm)?;
                    tape.edge_aggregate(h, src, dst, coef, graph.nodes)?
                }
                Some((w, Normalization::Weighted)) => {
                    let summed = tape.edge_aggregate(h, src, dst.clone(), w, graph.nodes)?;
                    let degree = tape.row_scatter_add(w, dst, graph.nodes)?;
                    let degree = tape.max_scalar(degree, 1.0);
                    tape.div_col(summed, degree)?
                }
            };
            let aggregated = tape.matmul(aggregated, p.var(self.relation_weights[r.id()]))?;
            total = tape.add(total, aggregated)?;
        }
        let out = match activation {
            Activation::Sigmoid => tape.sigmoid(total),
            #[cfg(test)]
            Activation::Identity => total,
        };
        if tape.value(out).iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical("NaN in relational layer activations".into()));
        }
        Ok(out)
    }
}

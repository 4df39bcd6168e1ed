//! Per-prediction explanations over the relational graph.
//!
//! Both explainers work on a frozen model: encoder outputs are computed once
//! and only the two relational layers and the decoder are re-run under
//! perturbed edge weights. Edges are always handled in canonical form, so an
//! edge, its inverse and (for similarity) its mirror share one weight.

mod export;
mod mask;
mod neighborhood;
mod oracle;
mod saliency;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use export::{to_dot, to_json, ExplanationRecord};
pub use mask::{explain_mask, MaskConfig};
pub use neighborhood::computational_neighborhood;
pub use oracle::deletion_oracle;
pub use saliency::explaine_scores;

use crate::autograd::{Matrix, Tape, Var};
use crate::graph::{Relation, RelationalGraph, Triple};
use crate::model::{EdgeWeights, MessageGraph, Model, NodeInputs, Normalization};
use crate::params::Bound;
use crate::{Error, Result};

/// Probability at or above which a pair counts as a predicted link.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mask,
    Explaine,
    Deletion,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Mask => "mask",
            Method::Explaine => "explaine",
            Method::Deletion => "deletion",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mask" => Ok(Method::Mask),
            "explaine" => Ok(Method::Explaine),
            "deletion" => Ok(Method::Deletion),
            _ => Err(Error::Config(format!("unknown explainer `{s}` (expected mask or explaine)"))),
        }
    }
}

/// One canonical edge with its explanation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedEdge {
    pub edge: Triple,
    /// Ranking key: mask probability, gradient magnitude or score drop.
    pub weight: f64,
    /// Signed gradient (gradient explainer only).
    pub gradient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationSubgraph {
    pub target: Triple,
    pub method: Method,
    pub hops: usize,
    /// Selected edges, ranked by weight descending.
    pub edges: Vec<RankedEdge>,
    /// Every neighborhood edge with its weight, same ranking.
    pub candidates: Vec<RankedEdge>,
    pub warnings: Vec<String>,
}

impl ExplanationSubgraph {
    /// The first `k` selected edges.
    pub fn top_k(&self, k: usize) -> &[RankedEdge] {
        &self.edges[..k.min(self.edges.len())]
    }
}

/// Stable descending sort; ties keep neighborhood order.
pub(crate) fn rank(mut edges: Vec<RankedEdge>) -> Vec<RankedEdge> {
    edges.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    edges
}

/// A trained model frozen on one graph, ready to be probed.
#[derive(Debug, Clone)]
pub struct ExplainContext<'a> {
    pub model: &'a Model,
    pub graph: &'a RelationalGraph,
    features: Matrix,
    messages: MessageGraph,
}

/// Maps stored directed edges to the positions of a weight vector.
struct EdgePlan {
    /// Per relation: weight row of each stored edge; `len` means "unweighted".
    index: Vec<Option<Arc<[usize]>>>,
    len: usize,
}

impl<'a> ExplainContext<'a> {
    pub fn new(model: &'a Model, inputs: &NodeInputs, graph: &'a RelationalGraph) -> Result<Self> {
        model.check_inputs(inputs, graph)?;
        Ok(Self {
            model,
            graph,
            features: model.encoder_features(inputs)?,
            messages: MessageGraph::new(graph),
        })
    }

    pub fn check_target(&self, t: Triple) -> Result<()> {
        if !self.graph.type_compatible(t.s, t.r, t.o) || t.r.is_inverse() {
            return Err(Error::Invalid(format!("target ({}, {}, {}) is not a forward triple of this graph", t.s, t.r, t.o)));
        }
        self.model.decoder_row(t.r).map(|_| ())
    }

    /// Model probability for `t` on the unmodified graph.
    pub fn score(&self, t: Triple) -> Result<f64> {
        let z = self.model.embeddings_from(&self.features, &self.messages)?;
        self.model.score(&z, t)
    }

    /// Model probability for `t` on another graph over the same nodes.
    pub fn score_on(&self, graph: &RelationalGraph, t: Triple) -> Result<f64> {
        let z = self.model.embeddings_from(&self.features, &MessageGraph::new(graph))?;
        self.model.score(&z, t)
    }

    /// Score with canonical `edges` re-weighted by `weights`; all other
    /// edges keep weight 1.
    pub fn score_weighted(
        &self,
        t: Triple,
        edges: &[Triple],
        weights: &[f64],
        normalization: Normalization,
    ) -> Result<f64> {
        if edges.len() != weights.len() {
            return Err(Error::Shape(format!("{} edges but {} weights", edges.len(), weights.len())));
        }
        let plan = self.plan(edges)?;
        let mut tape = Tape::new();
        let w = tape.constant(Matrix::from_shape_fn((weights.len(), 1), |(i, _)| weights[i]));
        let (p, _) = self.weighted_score(&mut tape, &plan, w, t, normalization)?;
        Ok(tape.scalar(p))
    }

    fn plan(&self, edges: &[Triple]) -> Result<EdgePlan> {
        let mut slot: HashMap<(Relation, usize, usize), usize> = HashMap::new();
        for (k, &e) in edges.iter().enumerate() {
            let forms = RelationalGraph::directed_forms(e);
            let (r, s, o) = forms[0];
            if !self.graph.has_edge(r, s, o) {
                return Err(Error::Invalid(format!("edge ({s}, {r}, {o}) is not in the graph")));
            }
            for f in forms {
                slot.insert(f, k);
            }
        }
        let len = edges.len();
        let index = Relation::ALL
            .iter()
            .map(|&r| {
                let stored = self.graph.edges(r);
                let idx: Vec<usize> = stored
                    .iter()
                    .map(|&(s, o)| slot.get(&(r, s, o)).copied().unwrap_or(len))
                    .collect();
                idx.iter().any(|&i| i < len).then(|| idx.into())
            })
            .collect();
        Ok(EdgePlan { index, len })
    }

    /// Records the forward pass for `t` with per-edge weights `w` (`len × 1`).
    fn weighted_score(
        &self,
        tape: &mut Tape,
        plan: &EdgePlan,
        w: Var,
        t: Triple,
        normalization: Normalization,
    ) -> Result<(Var, Bound)> {
        if tape.shape(w) != (plan.len, 1) {
            return Err(Error::Shape(format!("edge weights {:?}, expected ({}, 1)", tape.shape(w), plan.len)));
        }
        let p = self.model.store.bind(tape, false);
        let one = tape.constant(Matrix::ones((1, 1)));
        let table = tape.concat_rows(&[w, one])?;
        let mut per_relation = Vec::with_capacity(Relation::COUNT);
        for idx in &plan.index {
            per_relation.push(match idx {
                Some(idx) => Some(tape.row_gather(table, idx.clone())?),
                None => None,
            });
        }
        let weights = EdgeWeights {
            per_relation,
            normalization,
        };
        let x = tape.constant(self.features.clone());
        let z = self.model.propagate(tape, &p, x, &self.messages, Some(&weights))?;
        let score = self.model.score_triples(tape, &p, z, &[t])?;
        Ok((score, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{six_node_fixture, tiny_config};

    fn positive_model() -> Model {
        let mut model = Model::new(tiny_config(), 5).unwrap();
        // Embeddings are sigmoid outputs, so a positive diagonal predicts links.
        let rows = model.store.get(model.distmult).nrows();
        model.store.set("distmult.diag", Matrix::from_elem((rows, 4), 1.5)).unwrap();
        model
    }

    #[test]
    fn unit_weights_reproduce_the_plain_score() {
        let (g, inputs) = six_node_fixture();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(0, Relation::Sensitive, 3);
        let edges = computational_neighborhood(&g, t, 2);
        let ones = vec![1.0; edges.len()];
        let base = ctx.score(t).unwrap();
        for norm in [Normalization::Fixed, Normalization::Weighted] {
            let s = ctx.score_weighted(t, &edges, &ones, norm).unwrap();
            assert!((s - base).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_matches_deletion_under_weighted_normalization() {
        let (g, inputs) = six_node_fixture();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(0, Relation::Sensitive, 3);
        let edges = computational_neighborhood(&g, t, 2);
        for i in 0..edges.len() {
            let mut w = vec![1.0; edges.len()];
            w[i] = 0.0;
            let masked = ctx.score_weighted(t, &edges, &w, Normalization::Weighted).unwrap();
            let mut h = g.clone();
            h.remove_canonical(edges[i]);
            assert!((masked - ctx.score_on(&h, t).unwrap()).abs() < 1e-12, "edge {:?}", edges[i]);
        }
    }

    #[test]
    fn adjacency_gradients_match_finite_differences() {
        let (g, inputs) = six_node_fixture();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        for t in [Triple::positive(0, Relation::Sensitive, 3), Triple::positive(1, Relation::Resistant, 3)] {
            let edges = computational_neighborhood(&g, t, 2);
            let grads = saliency::adjacency_gradients(&ctx, t, &edges).unwrap();
            let h = 1e-5;
            for i in 0..edges.len() {
                let mut w = vec![1.0; edges.len()];
                w[i] = 1.0 + h;
                let up = ctx.score_weighted(t, &edges, &w, Normalization::Fixed).unwrap();
                w[i] = 1.0 - h;
                let down = ctx.score_weighted(t, &edges, &w, Normalization::Fixed).unwrap();
                let fd = (up - down) / (2.0 * h);
                let rel = (grads[i] - fd).abs() / fd.abs().max(grads[i].abs()).max(1e-8);
                assert!(rel < 1e-3 || (grads[i] - fd).abs() < 1e-10, "{:?}: {} vs {fd}", edges[i], grads[i]);
            }
            let ranked = explaine_scores(&ctx, t, 2).unwrap();
            assert_eq!(ranked, explaine_scores(&ctx, t, 2).unwrap());
            assert!(ranked.edges.windows(2).all(|w| w[0].weight >= w[1].weight));
        }
    }

    #[test]
    fn out_of_field_edges_have_exactly_zero_influence() {
        let (g, inputs) = six_node_fixture();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(2, Relation::Sensitive, 4);
        let far = [Triple::positive(1, Relation::Sensitive, 5), Triple::positive(0, Relation::CellSim, 1)];
        assert_eq!(saliency::adjacency_gradients(&ctx, t, &far).unwrap(), vec![0.0, 0.0]);
        let oracle = deletion_oracle(&ctx, t, &far).unwrap();
        assert!(oracle.candidates.iter().all(|e| e.weight == 0.0));
    }

    #[test]
    fn mask_on_single_edge_neighborhood() {
        let mut g = RelationalGraph::empty(vec!["c0".into()], vec!["d0".into()]);
        g.insert_edge(Relation::Sensitive, 0, 1).unwrap();
        g.rebuild_inverses();
        let profile = crate::encoders::OmicsProfile {
            expr: vec![0.2, 0.4, 0.1],
            mutation: vec![1.0, 0.0],
            cnv: vec![0.3, -0.2],
        };
        let mol = crate::smiles::parse_smiles("CCO")
            .unwrap()
            .with_features(&crate::smiles::FeaturizerConfig::default());
        let inputs = NodeInputs::new(crate::model::tests::tiny_dims(), &[profile], &[mol]).unwrap();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(0, Relation::Sensitive, 1);
        let cfg = MaskConfig { iterations: 20, ..MaskConfig::default() };
        let e = explain_mask(&ctx, t, &cfg).unwrap();
        assert_eq!(e.edges.len(), 1);
        assert_eq!(e.edges[0].edge, t);
        let oracle = deletion_oracle(&ctx, t, &[t]).unwrap();
        assert_eq!(oracle.edges[0].edge, t);
    }

    #[test]
    fn mask_supports_exactly_the_neighborhood_and_is_deterministic() {
        let (g, inputs) = six_node_fixture();
        let model = positive_model();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(0, Relation::Sensitive, 3);
        let cfg = MaskConfig { iterations: 40, hops: 2, ..MaskConfig::default() };
        let a = explain_mask(&ctx, t, &cfg).unwrap();
        let b = explain_mask(&ctx, t, &cfg).unwrap();
        assert_eq!(a, b);
        let mut support: Vec<Triple> = a.candidates.iter().map(|e| e.edge).collect();
        support.sort_by_key(|e| (e.r.id(), e.s, e.o));
        assert_eq!(support, computational_neighborhood(&g, t, 2));
        assert!(a.candidates.iter().all(|e| e.weight > 0.0 && e.weight < 1.0));
        assert!(a.candidates.windows(2).all(|w| w[0].weight >= w[1].weight));
        let json = to_json(&g, &a).unwrap();
        assert!(json.contains("\"method\": \"mask\""));
        let dot = to_dot(&g, &a);
        assert!(dot.starts_with("digraph") && dot.contains("\"c0\" -> \"d0\""));
    }

    #[test]
    fn mask_refuses_predicted_negatives() {
        let (g, inputs) = six_node_fixture();
        let mut model = positive_model();
        let rows = model.store.get(model.distmult).nrows();
        model.store.set("distmult.diag", Matrix::from_elem((rows, 4), -1.5)).unwrap();
        let ctx = ExplainContext::new(&model, &inputs, &g).unwrap();
        let t = Triple::positive(0, Relation::Sensitive, 3);
        assert!(explain_mask(&ctx, t, &MaskConfig::default()).is_err());
    }
}

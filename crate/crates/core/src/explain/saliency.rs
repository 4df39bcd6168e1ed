use super::{computational_neighborhood, rank, ExplainContext, ExplanationSubgraph, Method, RankedEdge};
use crate::autograd::{Matrix, Tape};
use crate::graph::Triple;
use crate::model::Normalization;
use crate::Result;

/// Gradient of the target probability with respect to each neighborhood
/// adjacency entry, taken at the observed graph (all entries 1) with degree
/// counts held fixed. Edges are ranked by gradient magnitude.
pub fn explaine_scores(ctx: &ExplainContext<'_>, target: Triple, hops: usize) -> Result<ExplanationSubgraph> {
    ctx.check_target(target)?;
    let target = Triple::positive(target.s, target.r, target.o);
    let edges = computational_neighborhood(ctx.graph, target, hops);
    let gradients = adjacency_gradients(ctx, target, &edges)?;
    let candidates = rank(
        edges
            .iter()
            .zip(&gradients)
            .map(|(&edge, &g)| RankedEdge {
                edge,
                weight: g.abs(),
                gradient: Some(g),
            })
            .collect(),
    );
    Ok(ExplanationSubgraph {
        target,
        method: Method::Explaine,
        hops,
        edges: candidates.clone(),
        candidates,
        warnings: Vec::new(),
    })
}

/// `d p(target) / d a_e` for each canonical edge `e` in `edges`.
pub fn adjacency_gradients(ctx: &ExplainContext<'_>, target: Triple, edges: &[Triple]) -> Result<Vec<f64>> {
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    let plan = ctx.plan(edges)?;
    let mut tape = Tape::new();
    let a = tape.param(Matrix::ones((edges.len(), 1)));
    let (p, _) = ctx.weighted_score(&mut tape, &plan, a, target, Normalization::Fixed)?;
    tape.backward(p)?;
    Ok(match tape.grad(a) {
        Some(g) => g.iter().copied().collect(),
        None => vec![0.0; edges.len()],
    })
}

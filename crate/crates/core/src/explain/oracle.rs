use super::{rank, ExplainContext, ExplanationSubgraph, Method, RankedEdge};
use crate::graph::Triple;
use crate::Result;

/// Ranks `edges` by the score drop caused by deleting each one (with its
/// inverse and mirror) from the graph, one at a time. Costs one forward
/// pass per edge, so keep the candidate set small.
pub fn deletion_oracle(ctx: &ExplainContext<'_>, target: Triple, edges: &[Triple]) -> Result<ExplanationSubgraph> {
    ctx.check_target(target)?;
    let target = Triple::positive(target.s, target.r, target.o);
    let base = ctx.score(target)?;
    let mut scored = Vec::with_capacity(edges.len());
    for &e in edges {
        let edge = e.canonical();
        let mut g = ctx.graph.clone();
        g.remove_canonical(edge);
        let drop = base - ctx.score_on(&g, target)?;
        scored.push(RankedEdge {
            edge,
            weight: drop,
            gradient: None,
        });
    }
    let candidates = rank(scored);
    Ok(ExplanationSubgraph {
        target,
        method: Method::Deletion,
        hops: 0,
        edges: candidates.clone(),
        candidates,
        warnings: Vec::new(),
    })
}

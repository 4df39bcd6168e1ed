use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExplanationSubgraph, RankedEdge};
use crate::graph::{RelationalGraph, Triple};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: String,
    pub relation: String,
    pub target: String,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gradient: Option<f64>,
}

/// Name-based form of an [`ExplanationSubgraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub cell: String,
    pub relation: String,
    pub drug: String,
    pub method: String,
    pub hops: usize,
    pub edges: Vec<EdgeRecord>,
    pub candidates: Vec<EdgeRecord>,
    pub warnings: Vec<String>,
}

impl ExplanationRecord {
    pub fn new(graph: &RelationalGraph, sub: &ExplanationSubgraph) -> Self {
        let edge = |e: &RankedEdge| EdgeRecord {
            source: graph.node_name(e.edge.s).to_string(),
            relation: e.edge.r.name().to_string(),
            target: graph.node_name(e.edge.o).to_string(),
            weight: e.weight,
            gradient: e.gradient,
        };
        Self {
            cell: graph.node_name(sub.target.s).to_string(),
            relation: sub.target.r.name().to_string(),
            drug: graph.node_name(sub.target.o).to_string(),
            method: sub.method.to_string(),
            hops: sub.hops,
            edges: sub.edges.iter().map(edge).collect(),
            candidates: sub.candidates.iter().map(edge).collect(),
            warnings: sub.warnings.clone(),
        }
    }
}

pub fn to_json(graph: &RelationalGraph, sub: &ExplanationSubgraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ExplanationRecord::new(graph, sub))?)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: cells as ellipses, drugs as triangles, similarity
/// edges undirected, the explained pair dashed.
pub fn to_dot(graph: &RelationalGraph, sub: &ExplanationSubgraph) -> String {
    let mut nodes: Vec<usize> = sub.edges.iter().flat_map(|e| [e.edge.s, e.edge.o]).collect();
    nodes.extend([sub.target.s, sub.target.o]);
    nodes.sort_unstable();
    nodes.dedup();

    let mut out = String::from("digraph explanation {\n");
    for n in nodes {
        let (kind, shape) = if graph.is_cell(n) { ("cell", "ellipse") } else { ("drug", "triangle") };
        let _ = writeln!(out, "  {} [type={kind}, shape={shape}];", quote(graph.node_name(n)));
    }
    let edge_line = |out: &mut String, t: Triple, label: String, extra: &str| {
        let dir = if t.r.is_similarity() { ", dir=none" } else { "" };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{dir}{extra}];",
            quote(graph.node_name(t.s)),
            quote(graph.node_name(t.o)),
            quote(&label)
        );
    };
    edge_line(&mut out, sub.target, format!("{} ({})", sub.target.r.name(), sub.method), ", style=dashed");
    for e in &sub.edges {
        edge_line(&mut out, e.edge, format!("{} {:.4}", e.edge.r.name(), e.weight), "");
    }
    out.push_str("}\n");
    out
}

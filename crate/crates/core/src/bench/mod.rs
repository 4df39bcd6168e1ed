//! Similarity-supported ground truths and top-k scoring of explanations.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::explain::{explain_mask, explaine_scores, ExplainContext, ExplanationSubgraph, MaskConfig, Method};
use crate::graph::{Relation, RelationalGraph, Triple};
use crate::{Error, Result};

/// Which evidence pattern produced a ground-truth entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// A similar cell responds the same way to a similar drug.
    A,
    /// A similar cell responds the same way to the same drug.
    B,
    /// The same cell responds the same way to a similar drug.
    C,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::A => "a",
            Pattern::B => "b",
            Pattern::C => "c",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub pattern: Pattern,
    /// Canonical edges, response edge first.
    pub edges: Vec<Triple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSet {
    pub target: Triple,
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruthSet {
    /// Distinct edges over all entries.
    pub fn union(&self) -> BTreeSet<Triple> {
        self.entries.iter().flat_map(|e| e.edges.iter().copied()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn neighbors(graph: &RelationalGraph, r: Relation, node: usize) -> impl Iterator<Item = usize> + '_ {
    let list = graph.edges(r);
    let start = list.partition_point(|&(s, _)| s < node);
    list[start..].iter().take_while(move |&&(s, _)| s == node).map(|&(_, o)| o)
}

fn sim(r: Relation, a: usize, b: usize) -> Triple {
    Triple::positive(a, r, b).canonical()
}

fn check_target(graph: &RelationalGraph, t: Triple) -> Result<()> {
    if t.r.is_inverse() || !t.r.is_response() || !graph.type_compatible(t.s, t.r, t.o) {
        return Err(Error::Invalid(format!("ground truth needs a forward response triple, got ({}, {}, {})", t.s, t.r, t.o)));
    }
    Ok(())
}

/// Pattern (a): `{(c2, r, d4), CellSim(c1, c2), DrugSim(d6, d4)}` for every
/// similar cell `c2` and similar drug `d4` with an observed `r` response.
pub fn ground_truth_a(graph: &RelationalGraph, target: Triple) -> Result<Vec<GroundTruthEntry>> {
    check_target(graph, target)?;
    let (c1, r, d6) = (target.s, target.r, target.o);
    let mut out = Vec::new();
    for c2 in neighbors(graph, Relation::CellSim, c1) {
        for d4 in neighbors(graph, Relation::DrugSim, d6) {
            if graph.has_edge(r, c2, d4) {
                out.push(GroundTruthEntry {
                    pattern: Pattern::A,
                    edges: vec![Triple::positive(c2, r, d4), sim(Relation::CellSim, c1, c2), sim(Relation::DrugSim, d6, d4)],
                });
            }
        }
    }
    Ok(out)
}

/// Pattern (b): `{(c2, r, d6), CellSim(c1, c2)}`.
pub fn ground_truth_b(graph: &RelationalGraph, target: Triple) -> Result<Vec<GroundTruthEntry>> {
    check_target(graph, target)?;
    let (c1, r, d6) = (target.s, target.r, target.o);
    Ok(neighbors(graph, Relation::CellSim, c1)
        .filter(|&c2| graph.has_edge(r, c2, d6))
        .map(|c2| GroundTruthEntry {
            pattern: Pattern::B,
            edges: vec![Triple::positive(c2, r, d6), sim(Relation::CellSim, c1, c2)],
        })
        .collect())
}

/// Pattern (c): `{(c1, r, d4), DrugSim(d6, d4)}`.
pub fn ground_truth_c(graph: &RelationalGraph, target: Triple) -> Result<Vec<GroundTruthEntry>> {
    check_target(graph, target)?;
    let (c1, r, d6) = (target.s, target.r, target.o);
    Ok(neighbors(graph, Relation::DrugSim, d6)
        .filter(|&d4| graph.has_edge(r, c1, d4))
        .map(|d4| GroundTruthEntry {
            pattern: Pattern::C,
            edges: vec![Triple::positive(c1, r, d4), sim(Relation::DrugSim, d6, d4)],
        })
        .collect())
}

/// All three patterns. The target itself need not be in `graph` (held-out
/// targets are explained on their training graph).
pub fn ground_truth(graph: &RelationalGraph, target: Triple) -> Result<GroundTruthSet> {
    let target = Triple::positive(target.s, target.r, target.o);
    let mut entries = ground_truth_a(graph, target)?;
    entries.extend(ground_truth_b(graph, target)?);
    entries.extend(ground_truth_c(graph, target)?);
    Ok(GroundTruthSet { target, entries })
}

/// Top-k overlap metrics for one explanation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth edges found in the top k.
    pub hits: usize,
    /// Ground-truth size used as the recall denominator.
    pub total: usize,
}

/// How the recall denominator is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Denominator {
    /// Distinct ground-truth edges of the explained target.
    #[default]
    PerTarget,
    /// A fixed dataset-wide count (distinct ground-truth edges over all targets).
    Global(usize),
}

/// Precision, recall and F1 of the top `k` explanation edges against the
/// union of ground-truth edges. `None` when the ground truth is empty.
pub fn evaluate_at_k(explanation: &ExplanationSubgraph, gt: &GroundTruthSet, k: usize, denominator: Denominator) -> Result<Option<AtK>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let union = gt.union();
    if union.is_empty() {
        return Ok(None);
    }
    let hits = explanation.top_k(k).iter().filter(|e| union.contains(&e.edge.canonical())).count();
    let total = match denominator {
        Denominator::PerTarget => union.len(),
        Denominator::Global(n) => n.max(1),
    };
    Ok(Some(at_k(hits, k, total)))
}

pub fn at_k(hits: usize, k: usize, total: usize) -> AtK {
    let precision = hits as f64 / k as f64;
    let recall = hits as f64 / total as f64;
    // Harmonic mean of precision and recall, reduced to one division.
    let f1 = if hits > 0 { 2.0 * hits as f64 / (k + total) as f64 } else { 0.0 };
    AtK {
        precision,
        recall,
        f1,
        hits,
        total,
    }
}

/// Distinct ground-truth edges over a whole benchmark.
pub fn global_denominator(gts: &[GroundTruthSet]) -> usize {
    gts.iter().flat_map(|g| g.union()).collect::<BTreeSet<_>>().len()
}

/// Mean metrics of one explainer over a target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Targets scored.
    pub evaluated: usize,
    /// Targets skipped for an empty ground truth.
    pub skipped: usize,
    pub per_target: Vec<AtK>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub k: usize,
    pub rows: Vec<BenchmarkRow>,
    /// Fraction of requested targets with a nonempty ground truth.
    pub coverage: f64,
}

impl BenchmarkTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Method\tPrecision@k\tRecall@k\tF1@k\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{:.4}\t{:.4}\t{:.4}", r.method, r.precision, r.recall, r.f1);
        }
        let _ = writeln!(out, "# k={} coverage={:.4}", self.k, self.coverage);
        out
    }

    pub fn row(&self, method: Method) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Runs one explainer on `target`.
pub fn explain(ctx: &ExplainContext<'_>, method: Method, target: Triple, cfg: &MaskConfig) -> Result<ExplanationSubgraph> {
    match method {
        Method::Mask => explain_mask(ctx, target, cfg),
        Method::Explaine => explaine_scores(ctx, target, cfg.hops),
        Method::Deletion => {
            let edges = crate::explain::computational_neighborhood(ctx.graph, target, cfg.hops);
            crate::explain::deletion_oracle(ctx, target, &edges)
        }
    }
}

/// Mean metrics per method; the explanations are returned alongside.
/// Ground truths are built on `ctx.graph`.
pub fn benchmark(
    ctx: &ExplainContext<'_>,
    methods: &[Method],
    targets: &[Triple],
    cfg: &MaskConfig,
    denominator_global: bool,
) -> Result<(BenchmarkTable, Vec<Vec<ExplanationSubgraph>>)> {
    let gts = targets.iter().map(|&t| ground_truth(ctx.graph, t)).collect::<Result<Vec<_>>>()?;
    let denominator = if denominator_global {
        Denominator::Global(global_denominator(&gts))
    } else {
        Denominator::PerTarget
    };
    let covered = gts.iter().filter(|g| !g.is_empty()).count();
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &method in methods {
        let explanations = targets
            .par_iter()
            .map(|&t| explain(ctx, method, t, cfg))
            .collect::<Result<Vec<_>>>()?;
        let mut per_target = Vec::new();
        for (e, gt) in explanations.iter().zip(&gts) {
            if let Some(m) = evaluate_at_k(e, gt, cfg.k, denominator)? {
                per_target.push(m);
            }
        }
        let n = per_target.len();
        let mean = |f: fn(&AtK) -> f64| if n == 0 { 0.0 } else { per_target.iter().map(f).sum::<f64>() / n as f64 };
        rows.push(BenchmarkRow {
            method,
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            evaluated: n,
            skipped: targets.len() - n,
            per_target,
        });
        all.push(explanations);
    }
    let coverage = if targets.is_empty() { 0.0 } else { covered as f64 / targets.len() as f64 };
    Ok((BenchmarkTable { k: cfg.k, rows, coverage }, all))
}

/// One JSON line per target with pattern-tagged, name-based entries.
pub fn ground_truth_jsonl(graph: &RelationalGraph, gts: &[GroundTruthSet]) -> Result<String> {
    #[derive(Serialize)]
    struct Edge<'a> {
        source: &'a str,
        relation: &'a str,
        target: &'a str,
    }
    #[derive(Serialize)]
    struct Entry<'a> {
        pattern: Pattern,
        edges: Vec<Edge<'a>>,
    }
    #[derive(Serialize)]
    struct Record<'a> {
        cell: &'a str,
        relation: &'a str,
        drug: &'a str,
        entries: Vec<Entry<'a>>,
    }
    let edge = |t: &Triple| Edge {
        source: graph.node_name(t.s),
        relation: t.r.name(),
        target: graph.node_name(t.o),
    };
    let mut out = String::new();
    for gt in gts {
        let record = Record {
            cell: graph.node_name(gt.target.s),
            relation: gt.target.r.name(),
            drug: graph.node_name(gt.target.o),
            entries: gt
                .entries
                .iter()
                .map(|e| Entry {
                    pattern: e.pattern,
                    edges: e.edges.iter().map(edge).collect(),
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::RankedEdge;

    /// The configuration drawn for the three patterns: cells 1, 2 similar,
    /// drugs 4, 6 similar (node ids shifted to the cells-first layout).
    fn figure_graph() -> (RelationalGraph, Triple) {
        // cells c1 = 0, c2 = 1; drugs d4 = 2, d6 = 3
        let mut g = RelationalGraph::empty(vec!["c1".into(), "c2".into()], vec!["d4".into(), "d6".into()]);
        for (a, b) in [(0, 1), (1, 0)] {
            g.insert_edge(Relation::CellSim, a, b).unwrap();
        }
        for (a, b) in [(2, 3), (3, 2)] {
            g.insert_edge(Relation::DrugSim, a, b).unwrap();
        }
        g.insert_edge(Relation::Sensitive, 1, 2).unwrap();
        g.insert_edge(Relation::Sensitive, 0, 3).unwrap();
        g.rebuild_inverses();
        (g, Triple::positive(0, Relation::Sensitive, 3))
    }

    #[test]
    fn pattern_a_matches_the_drawn_configuration() {
        let (g, t) = figure_graph();
        let a = ground_truth_a(&g, t).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(
            a[0].edges,
            vec![
                Triple::positive(1, Relation::Sensitive, 2),
                Triple::positive(0, Relation::CellSim, 1),
                Triple::positive(2, Relation::DrugSim, 3),
            ]
        );
        assert!(ground_truth_b(&g, t).unwrap().is_empty());
        assert!(ground_truth_c(&g, t).unwrap().is_empty());
    }

    #[test]
    fn patterns_b_and_c() {
        let (mut g, t) = figure_graph();
        g.insert_edge(Relation::Sensitive, 1, 3).unwrap();
        g.insert_edge(Relation::Resistant, 0, 2).unwrap();
        g.rebuild_inverses();
        let b = ground_truth_b(&g, t).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].edges, vec![Triple::positive(1, Relation::Sensitive, 3), Triple::positive(0, Relation::CellSim, 1)]);
        // (c1, resistant, d4) does not share the target's relation.
        assert!(ground_truth_c(&g, t).unwrap().is_empty());
        let gt = ground_truth(&g, t).unwrap();
        assert!(!gt.union().contains(&t));
    }

    #[test]
    fn no_similarity_means_no_ground_truth() {
        let mut g = RelationalGraph::empty(vec!["a".into(), "b".into()], vec!["x".into()]);
        g.insert_edge(Relation::Sensitive, 0, 2).unwrap();
        g.insert_edge(Relation::Sensitive, 1, 2).unwrap();
        g.rebuild_inverses();
        assert!(ground_truth(&g, Triple::positive(0, Relation::Sensitive, 2)).unwrap().is_empty());
    }

    fn explanation(edges: &[Triple]) -> ExplanationSubgraph {
        let ranked: Vec<RankedEdge> = edges
            .iter()
            .enumerate()
            .map(|(i, &edge)| RankedEdge {
                edge,
                weight: 1.0 - i as f64 * 0.1,
                gradient: None,
            })
            .collect();
        ExplanationSubgraph {
            target: Triple::positive(0, Relation::Sensitive, 9),
            method: Method::Mask,
            hops: 1,
            edges: ranked.clone(),
            candidates: ranked,
            warnings: Vec::new(),
        }
    }

    fn edge(i: usize) -> Triple {
        Triple::positive(i, Relation::CellSim, i + 100)
    }

    #[test]
    fn hand_enumerated_at_k() {
        // top-5 with 2 hits against 4 ground-truth edges.
        let gt = GroundTruthSet {
            target: Triple::positive(0, Relation::Sensitive, 9),
            entries: vec![
                GroundTruthEntry { pattern: Pattern::B, edges: vec![edge(1), edge(3)] },
                GroundTruthEntry { pattern: Pattern::C, edges: vec![edge(7), edge(8)] },
            ],
        };
        let e = explanation(&[edge(1), edge(2), edge(3), edge(4), edge(5), edge(7)]);
        let m = evaluate_at_k(&e, &gt, 5, Denominator::PerTarget).unwrap().unwrap();
        assert_eq!((m.hits, m.total), (2, 4));
        assert_eq!(m.precision, 0.4);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 4.0 / 9.0);

        let exact = explanation(&[edge(1), edge(3), edge(7), edge(8)]);
        let m = evaluate_at_k(&exact, &gt, 4, Denominator::PerTarget).unwrap().unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let none = explanation(&[edge(2)]);
        let m = evaluate_at_k(&none, &gt, 1, Denominator::PerTarget).unwrap().unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));

        let m = evaluate_at_k(&e, &gt, 5, Denominator::Global(10)).unwrap().unwrap();
        assert_eq!(m.recall, 0.2);

        let empty = GroundTruthSet { target: gt.target, entries: Vec::new() };
        assert!(evaluate_at_k(&e, &empty, 5, Denominator::PerTarget).unwrap().is_none());
        assert!(evaluate_at_k(&e, &gt, 0, Denominator::PerTarget).is_err());
    }

    #[test]
    fn inverse_edges_match_their_forward_form() {
        let gt = GroundTruthSet {
            target: Triple::positive(0, Relation::Sensitive, 9),
            entries: vec![GroundTruthEntry { pattern: Pattern::B, edges: vec![Triple::positive(1, Relation::Sensitive, 9)] }],
        };
        let e = explanation(&[Triple::positive(9, Relation::SensitiveInv, 1)]);
        assert_eq!(evaluate_at_k(&e, &gt, 1, Denominator::PerTarget).unwrap().unwrap().hits, 1);
    }
}

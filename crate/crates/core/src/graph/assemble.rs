use std::collections::HashMap;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{cosine_matrix, threshold_similarity, Relation, RelationalGraph};
use crate::{Error, Result};

/// IC50 (natural log) below this is a sensitive response.
pub const SENSITIVE_IC50: f64 = -3.0;
/// IC50 (natural log) above this is a resistant response.
pub const RESISTANT_IC50: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseLabel {
    Sensitive,
    Resistant,
}

impl ResponseLabel {
    pub fn relation(self) -> Relation {
        match self {
            ResponseLabel::Sensitive => Relation::Sensitive,
            ResponseLabel::Resistant => Relation::Resistant,
        }
    }
}

/// Binarizes a log IC50; values in `[-3, 3]` carry no label.
pub fn label_ic50(ic50: f64) -> Option<ResponseLabel> {
    if ic50 < SENSITIVE_IC50 {
        Some(ResponseLabel::Sensitive)
    } else if ic50 > RESISTANT_IC50 {
        Some(ResponseLabel::Resistant)
    } else {
        None
    }
}

/// A labeled response between cell `cell` and drug `drug` (0-based within their type).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub cell: usize,
    pub drug: usize,
    pub label: ResponseLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub cell_sim_pairs: usize,
    pub drug_sim_pairs: usize,
    pub sensitive: usize,
    pub resistant: usize,
    /// Nodes whose embedding had zero norm (similarity forced to 0).
    pub zero_norm_nodes: Vec<usize>,
}

/// Builds the four forward relations from embeddings and labeled responses,
/// then adds inverse relations by transposition.
///
/// `features` holds cell rows followed by drug rows.
pub fn assemble(
    cell_ids: Vec<String>,
    drug_ids: Vec<String>,
    responses: &[Response],
    features: Array2<f64>,
    phi_cell: f64,
    phi_drug: f64,
) -> Result<(RelationalGraph, AssemblyReport)> {
    let n_cells = cell_ids.len();
    let n_drugs = drug_ids.len();
    if features.nrows() != n_cells + n_drugs {
        return Err(Error::Shape(format!(
            "{} feature rows for {} cells and {} drugs",
            features.nrows(),
            n_cells,
            n_drugs
        )));
    }
    let mut graph = RelationalGraph::empty(cell_ids, drug_ids);
    let mut report = AssemblyReport::default();

    let cells = cosine_matrix(features.slice(s![..n_cells, ..]));
    let drugs = cosine_matrix(features.slice(s![n_cells.., ..]));
    report.zero_norm_nodes = cells
        .zero_norm_rows
        .iter()
        .copied()
        .chain(drugs.zero_norm_rows.iter().map(|d| d + n_cells))
        .collect();
    let cell_adj = threshold_similarity(cells.values.view(), phi_cell)?;
    let drug_adj = threshold_similarity(drugs.values.view(), phi_drug)?;
    for ((i, j), &v) in cell_adj.indexed_iter() {
        if v > 0.0 {
            graph.insert_edge(Relation::CellSim, i, j)?;
        }
    }
    for ((i, j), &v) in drug_adj.indexed_iter() {
        if v > 0.0 {
            graph.insert_edge(Relation::DrugSim, n_cells + i, n_cells + j)?;
        }
    }
    report.cell_sim_pairs = graph.edges(Relation::CellSim).len() / 2;
    report.drug_sim_pairs = graph.edges(Relation::DrugSim).len() / 2;

    let mut seen: HashMap<(usize, usize), ResponseLabel> = HashMap::new();
    for resp in responses {
        if resp.cell >= n_cells || resp.drug >= n_drugs {
            return Err(Error::Invalid(format!(
                "response ({}, {}) out of range",
                resp.cell, resp.drug
            )));
        }
        if let Some(prev) = seen.insert((resp.cell, resp.drug), resp.label) {
            let (c, d) = (&graph.cell_ids[resp.cell], &graph.drug_ids[resp.drug]);
            return Err(Error::Invalid(if prev == resp.label {
                format!("duplicate response for ({c}, {d})")
            } else {
                format!("pair ({c}, {d}) labeled both sensitive and resistant")
            }));
        }
        graph.insert_edge(resp.label.relation(), resp.cell, n_cells + resp.drug)?;
        match resp.label {
            ResponseLabel::Sensitive => report.sensitive += 1,
            ResponseLabel::Resistant => report.resistant += 1,
        }
    }

    graph.features = features;
    graph.rebuild_inverses();
    graph.validate()?;
    Ok((graph, report))
}

//! The directed multi-relational cell-line/drug graph.
//!
//! Nodes share one index space: cells occupy `0..n_cells`, drugs follow at
//! `n_cells..n_cells + n_drugs`. Each of the eight relations stores a
//! sorted, duplicate-free edge list; a relation's inverse holds the
//! transposed edges.

mod assemble;
mod similarity;
mod split;

pub use assemble::{assemble, label_ic50, AssemblyReport, Response, ResponseLabel};
pub use similarity::{cosine_matrix, cosine_similarity, threshold_similarity, SimilarityMatrix};
pub use split::{split_tasks, Fold, Task};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Relation {
    Resistant = 0,
    Sensitive = 1,
    CellSim = 2,
    DrugSim = 3,
    ResistantInv = 4,
    SensitiveInv = 5,
    CellSimInv = 6,
    DrugSimInv = 7,
}

impl Relation {
    pub const COUNT: usize = 8;
    pub const ALL: [Relation; 8] = [
        Relation::Resistant,
        Relation::Sensitive,
        Relation::CellSim,
        Relation::DrugSim,
        Relation::ResistantInv,
        Relation::SensitiveInv,
        Relation::CellSimInv,
        Relation::DrugSimInv,
    ];
    pub const FORWARD: [Relation; 4] = [
        Relation::Resistant,
        Relation::Sensitive,
        Relation::CellSim,
        Relation::DrugSim,
    ];
    pub const RESPONSES: [Relation; 2] = [Relation::Sensitive, Relation::Resistant];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Relation> {
        Relation::ALL.get(id).copied()
    }

    pub fn inverse(self) -> Relation {
        Relation::ALL[(self.id() + 4) % 8]
    }

    pub fn is_inverse(self) -> bool {
        self.id() >= 4
    }

    /// The forward relation this one is, or is the inverse of.
    pub fn forward(self) -> Relation {
        Relation::ALL[self.id() % 4]
    }

    pub fn is_response(self) -> bool {
        matches!(self.forward(), Relation::Sensitive | Relation::Resistant)
    }

    pub fn is_similarity(self) -> bool {
        !self.is_response()
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Resistant => "resistant",
            Relation::Sensitive => "sensitive",
            Relation::CellSim => "cell_sim",
            Relation::DrugSim => "drug_sim",
            Relation::ResistantInv => "resistant_inv",
            Relation::SensitiveInv => "sensitive_inv",
            Relation::CellSimInv => "cell_sim_inv",
            Relation::DrugSimInv => "drug_sim_inv",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == lower)
            .or(match lower.as_str() {
                "s" | "sens" => Some(Relation::Sensitive),
                "r" | "res" => Some(Relation::Resistant),
                _ => None,
            })
            .ok_or_else(|| Error::Invalid(format!("unknown relation `{s}`")))
    }
}

/// `(subject, relation, object)` with a binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub s: usize,
    pub r: Relation,
    pub o: usize,
    pub label: bool,
}

impl Triple {
    pub fn positive(s: usize, r: Relation, o: usize) -> Self {
        Self { s, r, o, label: true }
    }

    pub fn negative(s: usize, r: Relation, o: usize) -> Self {
        Self { s, r, o, label: false }
    }

    /// Forward form of an edge: inverse relations are flipped, symmetric
    /// similarity edges are ordered `s < o`. The label is dropped to `true`.
    pub fn canonical(self) -> Triple {
        let (mut s, r, mut o) = if self.r.is_inverse() {
            (self.o, self.r.forward(), self.s)
        } else {
            (self.s, self.r, self.o)
        };
        if r.is_similarity() && s > o {
            std::mem::swap(&mut s, &mut o);
        }
        Triple::positive(s, r, o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalGraph {
    pub n_cells: usize,
    pub n_drugs: usize,
    pub cell_ids: Vec<String>,
    pub drug_ids: Vec<String>,
    /// Node features the similarity relations were derived from (N×F); may be empty.
    pub features: Array2<f64>,
    edges: [Vec<(usize, usize)>; 8],
}

impl RelationalGraph {
    pub fn empty(cell_ids: Vec<String>, drug_ids: Vec<String>) -> Self {
        Self {
            n_cells: cell_ids.len(),
            n_drugs: drug_ids.len(),
            cell_ids,
            drug_ids,
            features: Array2::zeros((0, 0)),
            edges: Default::default(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_cells + self.n_drugs
    }

    pub fn is_cell(&self, node: usize) -> bool {
        node < self.n_cells
    }

    pub fn is_drug(&self, node: usize) -> bool {
        node >= self.n_cells && node < self.node_count()
    }

    pub fn drug_node(&self, drug: usize) -> usize {
        self.n_cells + drug
    }

    pub fn node_name(&self, node: usize) -> &str {
        if self.is_cell(node) {
            &self.cell_ids[node]
        } else {
            &self.drug_ids[node - self.n_cells]
        }
    }

    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        self.cell_ids
            .iter()
            .position(|c| c == name)
            .or_else(|| self.drug_ids.iter().position(|d| d == name).map(|d| self.n_cells + d))
    }

    /// Whether `(s, r, o)` respects node types for `r`.
    pub fn type_compatible(&self, s: usize, r: Relation, o: usize) -> bool {
        let (s, o) = if r.is_inverse() { (o, s) } else { (s, o) };
        match r.forward() {
            Relation::Sensitive | Relation::Resistant => self.is_cell(s) && self.is_drug(o),
            Relation::CellSim => self.is_cell(s) && self.is_cell(o) && s != o,
            Relation::DrugSim => self.is_drug(s) && self.is_drug(o) && s != o,
            _ => unreachable!(),
        }
    }

    pub fn edges(&self, r: Relation) -> &[(usize, usize)] {
        &self.edges[r.id()]
    }

    pub fn has_edge(&self, r: Relation, s: usize, o: usize) -> bool {
        self.edges[r.id()].binary_search(&(s, o)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Every edge of every relation as positive triples, ordered by relation then endpoints.
    pub fn all_edges(&self) -> Vec<Triple> {
        Relation::ALL
            .iter()
            .flat_map(|&r| self.edges(r).iter().map(move |&(s, o)| Triple::positive(s, r, o)))
            .collect()
    }

    /// Inserts one edge of relation `r` without touching its inverse.
    pub fn insert_edge(&mut self, r: Relation, s: usize, o: usize) -> Result<bool> {
        if !self.type_compatible(s, r, o) {
            return Err(Error::Invalid(format!(
                "edge ({s}, {r}, {o}) is not type-compatible (cells 0..{}, drugs {}..{})",
                self.n_cells,
                self.n_cells,
                self.node_count()
            )));
        }
        let list = &mut self.edges[r.id()];
        match list.binary_search(&(s, o)) {
            Ok(_) => Ok(false),
            Err(pos) => {
                list.insert(pos, (s, o));
                Ok(true)
            }
        }
    }

    pub fn remove_edge(&mut self, r: Relation, s: usize, o: usize) -> bool {
        let list = &mut self.edges[r.id()];
        match list.binary_search(&(s, o)) {
            Ok(pos) => {
                list.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Stored directed edges standing for one canonical edge: the edge, its
    /// inverse and, for similarity, both orientations of each.
    pub fn directed_forms(edge: Triple) -> Vec<(Relation, usize, usize)> {
        let t = edge.canonical();
        let mut forms = vec![(t.r, t.s, t.o), (t.r.inverse(), t.o, t.s)];
        if t.r.is_similarity() {
            forms.push((t.r, t.o, t.s));
            forms.push((t.r.inverse(), t.s, t.o));
        }
        forms
    }

    /// Removes every directed form of a canonical edge; true if any existed.
    pub fn remove_canonical(&mut self, edge: Triple) -> bool {
        let mut any = false;
        for (r, s, o) in Self::directed_forms(edge) {
            any |= self.remove_edge(r, s, o);
        }
        any
    }

    fn set_edges(&mut self, r: Relation, mut list: Vec<(usize, usize)>) {
        list.sort_unstable();
        list.dedup();
        self.edges[r.id()] = list;
    }

    /// Rebuilds every inverse relation as the transpose of its forward relation.
    pub fn rebuild_inverses(&mut self) {
        for r in Relation::FORWARD {
            let transposed = self.edges(r).iter().map(|&(s, o)| (o, s)).collect();
            self.set_edges(r.inverse(), transposed);
        }
    }

    /// Forward Sensitive/Resistant edges as positive triples.
    pub fn response_triples(&self) -> Vec<Triple> {
        let mut out: Vec<Triple> = Relation::RESPONSES
            .iter()
            .flat_map(|&r| self.edges(r).iter().map(move |&(s, o)| Triple::positive(s, r, o)))
            .collect();
        out.sort();
        out
    }

    /// Whether the `(cell, drug)` pair carries any response edge.
    pub fn has_response(&self, cell: usize, drug_node: usize) -> bool {
        self.has_edge(Relation::Sensitive, cell, drug_node) || self.has_edge(Relation::Resistant, cell, drug_node)
    }

    /// Same nodes and similarity structure, response edges replaced by
    /// `responses` (forward form), inverses rebuilt.
    pub fn with_responses(&self, responses: &[Triple]) -> Result<RelationalGraph> {
        let mut g = self.clone();
        for r in [Relation::Sensitive, Relation::Resistant, Relation::SensitiveInv, Relation::ResistantInv] {
            g.edges[r.id()].clear();
        }
        for t in responses {
            let t = t.canonical();
            if !t.r.is_response() {
                return Err(Error::Invalid(format!("{t:?} is not a response triple")));
            }
            g.insert_edge(t.r, t.s, t.o)?;
        }
        g.rebuild_inverses();
        g.check_disjoint_responses()?;
        Ok(g)
    }

    /// Drops similarity edges whose endpoints are both held out.
    pub fn restrict_similarity(&mut self, held_out: &[usize]) {
        let mut mask = vec![false; self.node_count()];
        for &n in held_out {
            mask[n] = true;
        }
        for r in [Relation::CellSim, Relation::DrugSim] {
            let kept = self.edges(r).iter().copied().filter(|&(s, o)| !(mask[s] && mask[o])).collect();
            self.set_edges(r, kept);
        }
        self.rebuild_inverses();
    }

    /// Dense binary adjacency for one relation.
    pub fn adjacency(&self, r: Relation) -> Array2<f64> {
        let n = self.node_count();
        let mut a = Array2::zeros((n, n));
        for &(s, o) in self.edges(r) {
            a[[s, o]] = 1.0;
        }
        a
    }

    fn check_disjoint_responses(&self) -> Result<()> {
        for &(s, o) in self.edges(Relation::Sensitive) {
            if self.has_edge(Relation::Resistant, s, o) {
                return Err(Error::Invalid(format!(
                    "pair ({}, {}) is both sensitive and resistant",
                    self.node_name(s),
                    self.node_name(o)
                )));
            }
        }
        Ok(())
    }

    /// Checks every structural invariant of the graph.
    pub fn validate(&self) -> Result<()> {
        if self.cell_ids.len() != self.n_cells || self.drug_ids.len() != self.n_drugs {
            return Err(Error::Invalid("id lists disagree with node counts".into()));
        }
        for r in Relation::ALL {
            for &(s, o) in self.edges(r) {
                if !self.type_compatible(s, r, o) {
                    return Err(Error::Invalid(format!("edge ({s}, {r}, {o}) violates node types")));
                }
            }
            if self.edges(r).windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("{r} edge list unsorted or duplicated")));
            }
        }
        for r in [Relation::CellSim, Relation::DrugSim] {
            for &(s, o) in self.edges(r) {
                if !self.has_edge(r, o, s) {
                    return Err(Error::Invalid(format!("{r} is not symmetric at ({s}, {o})")));
                }
            }
        }
        for r in Relation::FORWARD {
            let inv = r.inverse();
            if self.edges(r).len() != self.edges(inv).len()
                || self.edges(r).iter().any(|&(s, o)| !self.has_edge(inv, o, s))
            {
                return Err(Error::Invalid(format!("{inv} is not the transpose of {r}")));
            }
        }
        self.check_disjoint_responses()
    }
}

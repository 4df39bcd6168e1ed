use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{RelationalGraph, Triple};
use crate::{rng, Error, Result};

/// Cold-start evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Known cells, known drugs.
    A,
    /// Novel cells.
    B,
    /// Novel drugs.
    C,
    /// Novel cells and novel drugs.
    D,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::A, Task::B, Task::C, Task::D];
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Task::A),
            "B" => Ok(Task::B),
            "C" => Ok(Task::C),
            "D" => Ok(Task::D),
            _ => Err(Error::Config(format!("unknown task `{s}` (expected A, B, C or D)"))),
        }
    }
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Unlabeled `(cell, drug node)` pairs available as training negatives.
    pub train_pool: Vec<(usize, usize)>,
    /// Unlabeled pairs reserved for evaluation negatives.
    pub test_pool: Vec<(usize, usize)>,
    /// Cell and drug nodes unseen during training (tasks B-D).
    pub held_out: Vec<usize>,
}

fn fold_of(items: &mut [usize], folds: usize, rng: &mut rng::Rng) -> Vec<usize> {
    items.shuffle(rng);
    let max = items.iter().copied().max().map_or(0, |m| m + 1);
    let mut assignment = vec![usize::MAX; max];
    for (pos, &item) in items.iter().enumerate() {
        assignment[item] = pos % folds;
    }
    assignment
}

/// Partitions the graph's response triples (and the unlabeled pair pool)
/// into `folds` train/test splits according to `task`.
///
/// Inverse edges are not part of the triples; callers add them when
/// building each fold's training graph.
pub fn split_tasks(graph: &RelationalGraph, task: Task, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let triples = graph.response_triples();
    let entity_count = match task {
        Task::A => triples.len(),
        Task::B => graph.n_cells,
        Task::C => graph.n_drugs,
        Task::D => graph.n_cells.min(graph.n_drugs),
    };
    if folds > entity_count {
        return Err(Error::Invalid(format!(
            "{folds} folds exceed the {entity_count} splittable entities for task {task}"
        )));
    }

    let labeled: HashSet<(usize, usize)> = triples.iter().map(|t| (t.s, t.o)).collect();
    let pool: Vec<(usize, usize)> = (0..graph.n_cells)
        .flat_map(|c| (0..graph.n_drugs).map(move |d| (c, d)))
        .map(|(c, d)| (c, graph.drug_node(d)))
        .filter(|p| !labeled.contains(p))
        .collect();

    let mut rng = rng::stream(seed, rng::SPLIT);
    let mut cell_order: Vec<usize> = (0..graph.n_cells).collect();
    let mut drug_order: Vec<usize> = (0..graph.n_drugs).collect();

    // Fold index of each triple / pool pair; `None` means excluded from both sides.
    let (triple_fold, pool_fold, held): (Vec<Vec<Option<usize>>>, Vec<Vec<Option<usize>>>, Vec<Vec<usize>>) = match task {
        Task::A => {
            let mut idx: Vec<usize> = (0..triples.len()).collect();
            let tf = fold_of(&mut idx, folds, &mut rng);
            let mut pidx: Vec<usize> = (0..pool.len()).collect();
            let pf = fold_of(&mut pidx, folds, &mut rng);
            let per_fold = |assign: &[usize], n: usize| {
                (0..folds)
                    .map(|k| (0..n).map(|i| Some(usize::from(assign[i] == k))).collect())
                    .collect::<Vec<Vec<Option<usize>>>>()
            };
            (per_fold(&tf, triples.len()), per_fold(&pf, pool.len()), vec![Vec::new(); folds])
        }
        Task::B | Task::C | Task::D => {
            let cf = fold_of(&mut cell_order, folds, &mut rng);
            let df = fold_of(&mut drug_order, folds, &mut rng);
            let n_cells = graph.n_cells;
            let side = |k: usize, cell: usize, drug_node: usize| -> Option<usize> {
                let cell_out = cf[cell] == k;
                let drug_out = df[drug_node - n_cells] == k;
                match task {
                    Task::B => Some(usize::from(cell_out)),
                    Task::C => Some(usize::from(drug_out)),
                    _ => match (cell_out, drug_out) {
                        (true, true) => Some(1),
                        (false, false) => Some(0),
                        _ => None,
                    },
                }
            };
            let tf = (0..folds)
                .map(|k| triples.iter().map(|t| side(k, t.s, t.o)).collect())
                .collect();
            let pf = (0..folds)
                .map(|k| pool.iter().map(|&(c, d)| side(k, c, d)).collect())
                .collect();
            let held = (0..folds)
                .map(|k| {
                    let mut h = Vec::new();
                    if matches!(task, Task::B | Task::D) {
                        h.extend((0..n_cells).filter(|&c| cf[c] == k));
                    }
                    if matches!(task, Task::C | Task::D) {
                        h.extend((0..graph.n_drugs).filter(|&d| df[d] == k).map(|d| n_cells + d));
                    }
                    h
                })
                .collect();
            (tf, pf, held)
        }
    };

    let mut out = Vec::with_capacity(folds);
    for (k, held_out) in held.into_iter().enumerate() {
        let pick = |side: usize| -> Vec<Triple> {
            triples
                .iter()
                .zip(&triple_fold[k])
                .filter(|(_, f)| **f == Some(side))
                .map(|(t, _)| *t)
                .collect()
        };
        let pick_pool = |side: usize| -> Vec<(usize, usize)> {
            pool.iter()
                .zip(&pool_fold[k])
                .filter(|(_, f)| **f == Some(side))
                .map(|(p, _)| *p)
                .collect()
        };
        out.push(Fold {
            index: k,
            train: pick(0),
            test: pick(1),
            train_pool: pick_pool(0),
            test_pool: pick_pool(1),
            held_out,
        });
    }
    Ok(out)
}

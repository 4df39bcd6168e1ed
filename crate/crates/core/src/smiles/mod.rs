//! SMILES subset parsing and deterministic atom featurization.
//!
//! Supported: organic-subset atoms, aromatic lowercase atoms, bracket atoms
//! with isotope (discarded), hydrogen count and charge, bond symbols
//! `- = # :`, branches, ring closures (`1`..`9` and `%nn`) and `.`
//! separators. Stereo markers (`/ \ @`) are consumed and ignored; the
//! result carries a flag when any were seen.

mod features;
mod parser;

pub use features::{featurize_atoms, FeaturizerConfig, ELEMENT_TABLE, FEATURE_WIDTH, USED_FEATURE_COLUMNS};
pub use parser::parse_smiles;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("non-ASCII character at position {0}")]
    NonAscii(usize),
    #[error("unbalanced parenthesis at position {0}")]
    UnbalancedParenthesis(usize),
    #[error("ring bond {0} opened but never closed")]
    UnclosedRing(u32),
    #[error("unknown element `{token}` at position {position}")]
    UnknownElement { token: String, position: usize },
    #[error("bond symbol without a following atom at position {0}")]
    DanglingBond(usize),
    #[error("empty branch at position {0}")]
    EmptyBranch(usize),
    #[error("unexpected character `{character}` at position {position}")]
    UnexpectedCharacter { character: char, position: usize },
    #[error("malformed bracket atom at position {0}")]
    MalformedBracket(usize),
    #[error("ring closure {ring} would bond an atom to itself or duplicate a bond")]
    InvalidRingBond { ring: u32 },
    #[error("conflicting bond orders on ring closure {0}")]
    ConflictingRingBond(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: String,
    pub formal_charge: i32,
    pub is_aromatic: bool,
    /// Hydrogen count from a bracket atom; `None` for organic-subset atoms.
    pub explicit_h: Option<u32>,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Set when stereo markers were present and ignored.
    pub stereo_ignored: bool,
    /// `(N_d, F_d)` atom features; empty until [`MolecularGraph::with_features`].
    pub features: Array2<f64>,
}

impl MolecularGraph {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Symmetric binary adjacency with zero diagonal; aromatic bonds map to 1.
    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.atoms.len();
        let mut adj = Array2::zeros((n, n));
        for bond in &self.bonds {
            adj[[bond.a, bond.b]] = 1.0;
            adj[[bond.b, bond.a]] = 1.0;
        }
        adj
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = usize> + '_ {
        self.bonds.iter().filter_map(move |b| {
            if b.a == atom {
                Some(b.b)
            } else if b.b == atom {
                Some(b.a)
            } else {
                None
            }
        })
    }

    /// Atoms lying on at least one cycle.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut in_ring = vec![false; n];
        // A bond is a ring bond iff its endpoints stay connected without it.
        for (skip, bond) in self.bonds.iter().enumerate() {
            if in_ring[bond.a] && in_ring[bond.b] {
                continue;
            }
            let mut seen = vec![false; n];
            let mut stack = vec![bond.a];
            seen[bond.a] = true;
            while let Some(u) = stack.pop() {
                for (i, other) in self.bonds.iter().enumerate() {
                    if i == skip {
                        continue;
                    }
                    let v = if other.a == u {
                        other.b
                    } else if other.b == u {
                        other.a
                    } else {
                        continue;
                    };
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            if seen[bond.b] {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    pub fn with_features(mut self, config: &FeaturizerConfig) -> Self {
        self.features = featurize_atoms(&self, config);
        self
    }

    /// Relabels atoms: new atom `i` is old atom `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> MolecularGraph {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: inverse[b.a],
                b: inverse[b.b],
                order: b.order,
            })
            .collect();
        let features = if self.features.nrows() == self.atoms.len() {
            self.features.select(ndarray::Axis(0), order)
        } else {
            Array2::zeros((0, 0))
        };
        MolecularGraph {
            atoms,
            bonds,
            stereo_ignored: self.stereo_ignored,
            features,
        }
    }
}

use ndarray::Array2;

use super::MolecularGraph;

/// Default atom feature width.
pub const FEATURE_WIDTH: usize = 75;

/// Element vocabulary; the final slot collects every other element.
pub const ELEMENT_TABLE: [&str; 44] = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al", "I", "B", "V", "K", "Tl", "Yb",
    "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr",
    "Pt", "Hg", "Pb", "Other",
];

const DEGREE_SLOTS: usize = 11;
const CHARGE_SLOTS: usize = 6;
const H_SLOTS: usize = 5;

const ELEMENT_OFFSET: usize = 0;
const DEGREE_OFFSET: usize = ELEMENT_OFFSET + ELEMENT_TABLE.len();
const CHARGE_OFFSET: usize = DEGREE_OFFSET + DEGREE_SLOTS;
const AROMATIC_OFFSET: usize = CHARGE_OFFSET + CHARGE_SLOTS;
const H_OFFSET: usize = AROMATIC_OFFSET + 1;
const RING_OFFSET: usize = H_OFFSET + H_SLOTS;

/// Columns carrying information; the remainder up to the width is zero padding.
pub const USED_FEATURE_COLUMNS: usize = RING_OFFSET + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeaturizerConfig {
    pub width: usize,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self { width: FEATURE_WIDTH }
    }
}

impl FeaturizerConfig {
    pub fn new(width: usize) -> crate::Result<Self> {
        if width < USED_FEATURE_COLUMNS {
            return Err(crate::Error::Config(format!(
                "atom feature width {width} is below the {USED_FEATURE_COLUMNS} informative columns"
            )));
        }
        Ok(Self { width })
    }
}

/// Per-atom one-hot features, zero padded to `config.width` columns.
///
/// Layout: element (44, last slot = other), degree 0..=10, formal charge
/// -2..=2 plus other, aromatic bit, bracket hydrogen count 0..=4 (no bit for
/// organic-subset atoms), ring-membership bit.
pub fn featurize_atoms(mol: &MolecularGraph, config: &FeaturizerConfig) -> Array2<f64> {
    let width = config.width.max(USED_FEATURE_COLUMNS);
    let in_ring = mol.ring_atoms();
    let mut features = Array2::zeros((mol.atoms.len(), width));
    for (i, atom) in mol.atoms.iter().enumerate() {
        let element = ELEMENT_TABLE
            .iter()
            .position(|s| *s == atom.element)
            .unwrap_or(ELEMENT_TABLE.len() - 1);
        features[[i, ELEMENT_OFFSET + element]] = 1.0;
        features[[i, DEGREE_OFFSET + atom.degree.min(DEGREE_SLOTS - 1)]] = 1.0;
        let charge = match atom.formal_charge {
            c @ -2..=2 => (c + 2) as usize,
            _ => CHARGE_SLOTS - 1,
        };
        features[[i, CHARGE_OFFSET + charge]] = 1.0;
        if atom.is_aromatic {
            features[[i, AROMATIC_OFFSET]] = 1.0;
        }
        if let Some(h) = atom.explicit_h {
            features[[i, H_OFFSET + (h as usize).min(H_SLOTS - 1)]] = 1.0;
        }
        if in_ring[i] {
            features[[i, RING_OFFSET]] = 1.0;
        }
    }
    features
}

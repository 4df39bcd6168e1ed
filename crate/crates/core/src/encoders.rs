//! Node feature encoders: an omics MLP for cell lines and a mean-aggregation
//! message-passing network over molecular graphs for drugs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autograd::{Matrix, Tape, Var};
use crate::params::{glorot, Bound, ParamId, ParamStore};
use crate::rng::Rng;
use crate::smiles::MolecularGraph;
use crate::{Error, Result};

/// Per-cell omics vectors; the mutation block is 0/1 but handled as reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmicsProfile {
    pub expr: Vec<f64>,
    pub mutation: Vec<f64>,
    pub cnv: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmicsDims {
    pub expr: usize,
    pub mutation: usize,
    pub cnv: usize,
}

impl OmicsDims {
    /// Feature widths after cancer-gene filtering on the full-scale data.
    pub const FULL_SCALE: OmicsDims = OmicsDims {
        expr: 674,
        mutation: 689,
        cnv: 480,
    };

    pub fn check(&self, p: &OmicsProfile) -> Result<()> {
        if p.expr.len() != self.expr || p.mutation.len() != self.mutation || p.cnv.len() != self.cnv {
            return Err(Error::Shape(format!(
                "omics profile dims ({}, {}, {}) != encoder dims ({}, {}, {})",
                p.expr.len(),
                p.mutation.len(),
                p.cnv.len(),
                self.expr,
                self.mutation,
                self.cnv
            )));
        }
        if p.expr.iter().chain(&p.mutation).chain(&p.cnv).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("omics profile contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Stacked omics matrices for a list of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBatch {
    pub expr: Matrix,
    pub mutation: Matrix,
    pub cnv: Matrix,
}

impl CellBatch {
    pub fn new(dims: OmicsDims, profiles: &[OmicsProfile]) -> Result<Self> {
        for p in profiles {
            dims.check(p)?;
        }
        let stack = |width: usize, pick: &dyn Fn(&OmicsProfile) -> &[f64]| {
            Matrix::from_shape_fn((profiles.len(), width), |(i, j)| pick(&profiles[i])[j])
        };
        Ok(Self {
            expr: stack(dims.expr, &|p| &p.expr),
            mutation: stack(dims.mutation, &|p| &p.mutation),
            cnv: stack(dims.cnv, &|p| &p.cnv),
        })
    }

    pub fn len(&self) -> usize {
        self.expr.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `c = g_c([g_e(expr) ‖ g_m(mut) ‖ g_n(cnv)])` with one ReLU layer per block.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEncoder {
    pub dims: OmicsDims,
    pub hidden: usize,
    pub out: usize,
    blocks: [(ParamId, ParamId); 3],
    fuse: (ParamId, ParamId),
}

impl CellEncoder {
    pub fn new(store: &mut ParamStore, dims: OmicsDims, hidden: usize, out: usize, rng: &mut Rng) -> Self {
        let mut block = |name: &str, width: usize| {
            (
                store.add(format!("cell.{name}.weight"), glorot(width, hidden, rng)),
                store.add(format!("cell.{name}.bias"), Matrix::zeros((1, hidden))),
            )
        };
        let blocks = [block("expr", dims.expr), block("mut", dims.mutation), block("cnv", dims.cnv)];
        let fuse = (
            store.add("cell.fuse.weight", glorot(3 * hidden, out, rng)),
            store.add("cell.fuse.bias", Matrix::zeros((1, out))),
        );
        Self {
            dims,
            hidden,
            out,
            blocks,
            fuse,
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, batch: &CellBatch) -> Result<Var> {
        let inputs = [&batch.expr, &batch.mutation, &batch.cnv];
        let mut parts = Vec::with_capacity(3);
        for (input, &(w, b)) in inputs.into_iter().zip(&self.blocks) {
            let x = tape.constant(input.clone());
            let h = tape.matmul(x, p.var(w))?;
            let h = tape.add_row(h, p.var(b))?;
            parts.push(tape.relu(h));
        }
        self.fuse(tape, p, &parts)
    }

    /// Same as [`CellEncoder::forward`] but with differentiable inputs.
    pub fn forward_vars(&self, tape: &mut Tape, p: &Bound, expr: Var, mutation: Var, cnv: Var) -> Result<Var> {
        let mut parts = Vec::with_capacity(3);
        for (x, &(w, b)) in [expr, mutation, cnv].into_iter().zip(&self.blocks) {
            let h = tape.matmul(x, p.var(w))?;
            let h = tape.add_row(h, p.var(b))?;
            parts.push(tape.relu(h));
        }
        self.fuse(tape, p, &parts)
    }

    fn fuse(&self, tape: &mut Tape, p: &Bound, parts: &[Var]) -> Result<Var> {
        let joined = tape.concat_cols(parts)?;
        let c = tape.matmul(joined, p.var(self.fuse.0))?;
        let c = tape.add_row(c, p.var(self.fuse.1))?;
        Ok(tape.relu(c))
    }

    /// Embeds one profile with the stored parameters.
    pub fn encode_cell(&self, store: &ParamStore, profile: &OmicsProfile) -> Result<Vec<f64>> {
        let batch = CellBatch::new(self.dims, std::slice::from_ref(profile))?;
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape, false);
        let out = self.forward(&mut tape, &bound, &batch)?;
        Ok(tape.value(out).row(0).to_vec())
    }
}

/// Molecular graphs flattened into one disjoint union for batched message passing.
#[derive(Debug, Clone)]
pub struct DrugBatch {
    pub atom_features: Matrix,
    bond_src: Arc<[usize]>,
    bond_dst: Arc<[usize]>,
    /// `1 / degree(dst)` per directed bond.
    bond_norm: Matrix,
    atom_drug: Arc<[usize]>,
    /// `1 / atoms(drug)` per atom.
    atom_norm: Matrix,
    drugs: usize,
}

impl DrugBatch {
    pub fn new(molecules: &[MolecularGraph]) -> Result<Self> {
        let Some(first) = molecules.first() else {
            return Err(Error::Invalid("no drugs to encode".into()));
        };
        let width = first.features.ncols();
        let mut rows = Vec::new();
        let (mut src, mut dst, mut atom_drug) = (Vec::new(), Vec::new(), Vec::new());
        let (mut bond_norm, mut atom_norm) = (Vec::new(), Vec::new());
        let mut offset = 0;
        for (d, mol) in molecules.iter().enumerate() {
            let n = mol.atom_count();
            if n == 0 {
                return Err(Error::Invalid(format!("drug {d} has no atoms")));
            }
            if mol.features.dim() != (n, width) {
                return Err(Error::Shape(format!(
                    "drug {d}: features {:?}, expected ({n}, {width})",
                    mol.features.dim()
                )));
            }
            let mut degree = vec![0usize; n];
            for b in &mol.bonds {
                degree[b.a] += 1;
                degree[b.b] += 1;
            }
            for b in &mol.bonds {
                for (u, v) in [(b.a, b.b), (b.b, b.a)] {
                    src.push(offset + u);
                    dst.push(offset + v);
                    bond_norm.push(1.0 / degree[v] as f64);
                }
            }
            for i in 0..n {
                rows.extend(mol.features.row(i).iter().copied());
                atom_drug.push(d);
                atom_norm.push(1.0 / n as f64);
            }
            offset += n;
        }
        let column = |v: Vec<f64>| Matrix::from_shape_vec((v.len(), 1), v).expect("column");
        Ok(Self {
            atom_features: Matrix::from_shape_vec((offset, width), rows).expect("atom rows"),
            bond_src: src.into(),
            bond_dst: dst.into(),
            bond_norm: column(bond_norm),
            atom_drug: atom_drug.into(),
            atom_norm: column(atom_norm),
            drugs: molecules.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.drugs
    }

    pub fn is_empty(&self) -> bool {
        self.drugs == 0
    }

    pub fn atoms(&self) -> usize {
        self.atom_features.nrows()
    }
}

/// `layers` rounds of `tanh(mean_nbr(h) W_nbr + h W_self + b)` and a mean-pool readout.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugEncoder {
    pub in_dim: usize,
    pub out: usize,
    layers: Vec<(ParamId, ParamId, ParamId)>,
}

impl DrugEncoder {
    pub fn new(store: &mut ParamStore, in_dim: usize, out: usize, depth: usize, rng: &mut Rng) -> Self {
        let layers = (0..depth)
            .map(|l| {
                let fan_in = if l == 0 { in_dim } else { out };
                (
                    store.add(format!("drug.layer{l}.neighbor"), glorot(fan_in, out, rng)),
                    store.add(format!("drug.layer{l}.self"), glorot(fan_in, out, rng)),
                    store.add(format!("drug.layer{l}.bias"), Matrix::zeros((1, out))),
                )
            })
            .collect();
        Self { in_dim, out, layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, batch: &DrugBatch) -> Result<Var> {
        let x = tape.constant(batch.atom_features.clone());
        self.forward_from(tape, p, batch, x)
    }

    /// Runs the encoder on an atom feature variable (for gradient checks).
    pub fn forward_from(&self, tape: &mut Tape, p: &Bound, batch: &DrugBatch, atoms: Var) -> Result<Var> {
        if tape.shape(atoms).1 != self.in_dim {
            return Err(Error::Shape(format!(
                "atom features have {} columns, encoder expects {}",
                tape.shape(atoms).1,
                self.in_dim
            )));
        }
        let bond_norm = tape.constant(batch.bond_norm.clone());
        let atom_norm = tape.constant(batch.atom_norm.clone());
        let n_atoms = batch.atoms();
        let mut h = atoms;
        for &(w_nbr, w_self, b) in &self.layers {
            let own = tape.matmul(h, p.var(w_self))?;
            let projected = tape.matmul(h, p.var(w_nbr))?;
            let msg = tape.row_gather(projected, batch.bond_src.clone())?;
            let msg = tape.mul_col(msg, bond_norm)?;
            let nbr = tape.row_scatter_add(msg, batch.bond_dst.clone(), n_atoms)?;
            let z = tape.add(nbr, own)?;
            let z = tape.add_row(z, p.var(b))?;
            h = tape.tanh(z);
        }
        let pooled = tape.mul_col(h, atom_norm)?;
        tape.row_scatter_add(pooled, batch.atom_drug.clone(), batch.drugs)
    }

    pub fn encode_drug(&self, store: &ParamStore, mol: &MolecularGraph) -> Result<Vec<f64>> {
        let batch = DrugBatch::new(std::slice::from_ref(mol))?;
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape, false);
        let out = self.forward(&mut tape, &bound, &batch)?;
        Ok(tape.value(out).row(0).to_vec())
    }
}

/// Stacks cell embeddings (rows `0..N_C`) over drug embeddings.
pub fn encode_all(
    tape: &mut Tape,
    p: &Bound,
    cells: (&CellEncoder, &CellBatch),
    drugs: (&DrugEncoder, &DrugBatch),
) -> Result<Var> {
    if cells.0.out != drugs.0.out {
        return Err(Error::Shape(format!(
            "cell encoder width {} != drug encoder width {}",
            cells.0.out, drugs.0.out
        )));
    }
    let c = cells.0.forward(tape, p, cells.1)?;
    let d = drugs.0.forward(tape, p, drugs.1)?;
    tape.concat_rows(&[c, d])
}

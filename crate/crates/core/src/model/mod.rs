//! The drug response predictor: feature encoders, two relational graph
//! convolution layers and a DistMult decoder.

mod checkpoint;
mod dgcn;
mod negatives;
mod train;

use std::sync::Arc;

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_HEADER};
pub use dgcn::{DgcnLayer, EdgeWeights, MessageGraph, Normalization, RelationEdges};
pub use negatives::{candidate_pool, sample_negatives, NegativeSample};
pub use train::{train, TrainConfig, TrainReport};

use crate::autograd::{Matrix, Tape, Var};
use crate::encoders::{CellBatch, CellEncoder, DrugBatch, DrugEncoder, OmicsDims, OmicsProfile};
use crate::graph::{Relation, RelationalGraph, Triple};
use crate::params::{glorot, Bound, ParamId, ParamStore};
use crate::rng;
use crate::smiles::{MolecularGraph, FEATURE_WIDTH};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub omics: OmicsDims,
    pub atom_features: usize,
    pub omics_hidden: usize,
    pub drug_depth: usize,
    pub embed_dim: usize,
    /// Also decode cell-cell and drug-drug similarity links during training.
    pub decode_similarity: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            omics: OmicsDims::FULL_SCALE,
            atom_features: FEATURE_WIDTH,
            omics_hidden: 100,
            drug_depth: 2,
            embed_dim: 64,
            decode_similarity: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.omics_hidden == 0 || self.atom_features == 0 {
            return Err(Error::Config("model widths must be positive".into()));
        }
        if self.omics.expr + self.omics.mutation + self.omics.cnv == 0 {
            return Err(Error::Config("cell features are empty".into()));
        }
        Ok(())
    }

    /// Relations with a DistMult diagonal, in table row order.
    pub fn decoded_relations(&self) -> Vec<Relation> {
        let mut rels = Relation::RESPONSES.to_vec();
        if self.decode_similarity {
            rels.extend([Relation::CellSim, Relation::DrugSim]);
        }
        rels
    }
}

/// Raw inputs of every node: omics for cells, molecular graphs for drugs.
#[derive(Debug, Clone)]
pub struct NodeInputs {
    pub cells: CellBatch,
    pub drugs: DrugBatch,
}

impl NodeInputs {
    pub fn new(dims: OmicsDims, profiles: &[OmicsProfile], molecules: &[MolecularGraph]) -> Result<Self> {
        Ok(Self {
            cells: CellBatch::new(dims, profiles)?,
            drugs: DrugBatch::new(molecules)?,
        })
    }

    pub fn node_count(&self) -> usize {
        self.cells.len() + self.drugs.len()
    }
}

/// `sigma(sum_k zs[k] * diag[k] * zo[k])`.
pub fn distmult_score(zs: ArrayView1<f64>, diag: ArrayView1<f64>, zo: ArrayView1<f64>) -> f64 {
    let logit: f64 = zs.iter().zip(diag).zip(zo).map(|((a, d), b)| a * d * b).sum();
    1.0 / (1.0 + (-logit).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub seed: u64,
    pub store: ParamStore,
    pub cell_encoder: CellEncoder,
    pub drug_encoder: DrugEncoder,
    pub layers: [DgcnLayer; 2],
    /// One diagonal per decoded relation (rows follow `config.decoded_relations()`).
    pub distmult: ParamId,
}

impl Model {
    /// Fresh parameters drawn from the `init` stream of `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, rng::INIT);
        let mut store = ParamStore::new();
        let f = config.embed_dim;
        let cell_encoder = CellEncoder::new(&mut store, config.omics, config.omics_hidden, f, &mut rng);
        let drug_encoder = DrugEncoder::new(&mut store, config.atom_features, f, config.drug_depth, &mut rng);
        let layers = [
            DgcnLayer::new(&mut store, "dgcn0", f, f, &mut rng),
            DgcnLayer::new(&mut store, "dgcn1", f, f, &mut rng),
        ];
        let rows = config.decoded_relations().len();
        let distmult = store.add("distmult.diag", glorot(rows, f, &mut rng));
        Ok(Self {
            config,
            seed,
            store,
            cell_encoder,
            drug_encoder,
            layers,
            distmult,
        })
    }

    pub fn decoder_row(&self, r: Relation) -> Result<usize> {
        self.config
            .decoded_relations()
            .iter()
            .position(|&d| d == r)
            .ok_or_else(|| Error::Invalid(format!("relation `{r}` has no DistMult diagonal")))
    }

    pub fn diag(&self, r: Relation) -> Result<ArrayView1<'_, f64>> {
        let row = self.decoder_row(r)?;
        Ok(self.store.get(self.distmult).row(row))
    }

    pub fn check_inputs(&self, inputs: &NodeInputs, graph: &RelationalGraph) -> Result<()> {
        if inputs.cells.len() != graph.n_cells || inputs.drugs.len() != graph.n_drugs {
            return Err(Error::Shape(format!(
                "inputs cover {} cells / {} drugs, graph has {} / {}",
                inputs.cells.len(),
                inputs.drugs.len(),
                graph.n_cells,
                graph.n_drugs
            )));
        }
        Ok(())
    }

    /// Encoder output for every node (`N × F`).
    pub fn encode(&self, tape: &mut Tape, p: &Bound, inputs: &NodeInputs) -> Result<Var> {
        crate::encoders::encode_all(
            tape,
            p,
            (&self.cell_encoder, &inputs.cells),
            (&self.drug_encoder, &inputs.drugs),
        )
    }

    /// Both relational layers on top of node features `x`.
    pub fn propagate(
        &self,
        tape: &mut Tape,
        p: &Bound,
        x: Var,
        graph: &MessageGraph,
        weights: Option<&EdgeWeights>,
    ) -> Result<Var> {
        let h = self.layers[0].forward(tape, p, x, graph, weights)?;
        self.layers[1].forward(tape, p, h, graph, weights)
    }

    /// DistMult probabilities for `triples` (`B × 1`).
    pub fn score_triples(&self, tape: &mut Tape, p: &Bound, z: Var, triples: &[Triple]) -> Result<Var> {
        let rows = triples
            .iter()
            .map(|t| self.decoder_row(t.r))
            .collect::<Result<Vec<_>>>()?;
        let s: Arc<[usize]> = triples.iter().map(|t| t.s).collect();
        let o: Arc<[usize]> = triples.iter().map(|t| t.o).collect();
        let zs = tape.row_gather(z, s)?;
        let zo = tape.row_gather(z, o)?;
        let d = tape.row_gather(p.var(self.distmult), rows.into())?;
        let prod = tape.hadamard(zs, d)?;
        let prod = tape.hadamard(prod, zo)?;
        let logits = tape.sum_cols(prod);
        Ok(tape.sigmoid(logits))
    }

    /// Encoder outputs as a plain matrix.
    pub fn encoder_features(&self, inputs: &NodeInputs) -> Result<Matrix> {
        let mut tape = Tape::new();
        let p = self.store.bind(&mut tape, false);
        let x = self.encode(&mut tape, &p, inputs)?;
        Ok(tape.value(x).clone())
    }

    /// Final node embeddings from precomputed encoder outputs.
    pub fn embeddings_from(&self, x: &Matrix, graph: &MessageGraph) -> Result<Matrix> {
        let mut tape = Tape::new();
        let p = self.store.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let z = self.propagate(&mut tape, &p, xv, graph, None)?;
        Ok(tape.value(z).clone())
    }

    pub fn embeddings(&self, inputs: &NodeInputs, graph: &RelationalGraph) -> Result<Matrix> {
        self.check_inputs(inputs, graph)?;
        let x = self.encoder_features(inputs)?;
        self.embeddings_from(&x, &MessageGraph::new(graph))
    }

    pub fn score(&self, z: &Matrix, t: Triple) -> Result<f64> {
        if t.s >= z.nrows() || t.o >= z.nrows() {
            return Err(Error::Invalid(format!("triple ({}, {}, {}) out of range", t.s, t.r, t.o)));
        }
        Ok(distmult_score(z.row(t.s), self.diag(t.r)?, z.row(t.o)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredPair {
    pub cell: usize,
    /// Node index of the drug.
    pub drug: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub relation: Relation,
    pub pairs: Vec<ScoredPair>,
}

/// Scores every `(cell, drug node)` pair under each response relation and
/// sorts descending (ties by cell, then drug).
pub fn predict_all(
    model: &Model,
    inputs: &NodeInputs,
    graph: &RelationalGraph,
    pairs: &[(usize, usize)],
) -> Result<Vec<Ranking>> {
    for &(c, d) in pairs {
        if !graph.is_cell(c) || !graph.is_drug(d) {
            return Err(Error::Invalid(format!("pair ({c}, {d}) is not a (cell, drug) pair")));
        }
    }
    let z = model.embeddings(inputs, graph)?;
    Ok(rank_pairs(model, &z, pairs))
}

pub fn rank_pairs(model: &Model, z: &Matrix, pairs: &[(usize, usize)]) -> Vec<Ranking> {
    Relation::RESPONSES
        .iter()
        .map(|&relation| {
            let diag = model.diag(relation).expect("response relations are always decoded");
            let mut scored: Vec<ScoredPair> = pairs
                .par_iter()
                .map(|&(cell, drug)| ScoredPair {
                    cell,
                    drug,
                    score: distmult_score(z.row(cell), diag, z.row(drug)),
                })
                .collect();
            scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.cell.cmp(&b.cell)).then(a.drug.cmp(&b.drug)));
            Ranking { relation, pairs: scored }
        })
        .collect()
}

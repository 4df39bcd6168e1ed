//! A loaded dataset and its conversion into a relational graph.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::tsv::{read_drugs, read_omics, read_responses};
use crate::encoders::{OmicsDims, OmicsProfile};
use crate::graph::{assemble, label_ic50, AssemblyReport, RelationalGraph, Response};
use crate::model::{Model, ModelConfig, NodeInputs};
use crate::smiles::{parse_smiles, FeaturizerConfig, MolecularGraph};
use crate::{Error, Result};

/// Input file locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub expr: PathBuf,
    pub mutation: PathBuf,
    pub cnv: PathBuf,
    pub drugs: PathBuf,
    pub responses: PathBuf,
}

impl DataPaths {
    /// The standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            expr: dir.join("expr.tsv"),
            mutation: dir.join("mut.tsv"),
            cnv: dir.join("cnv.tsv"),
            drugs: dir.join("drugs.tsv"),
            responses: dir.join("responses.tsv"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [&self.expr, &self.mutation, &self.cnv, &self.drugs, &self.responses]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dims: OmicsDims,
    pub cell_ids: Vec<String>,
    pub profiles: Vec<OmicsProfile>,
    pub drug_ids: Vec<String>,
    pub smiles: Vec<String>,
    pub molecules: Vec<MolecularGraph>,
    /// `(cell, drug, ic50)` with type-local indices.
    pub ic50: Vec<(usize, usize, f64)>,
    /// Non-fatal notes from loading (dropped rows and similar).
    pub notes: Vec<String>,
}

/// A dataset assembled into a graph plus the matching node inputs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: RelationalGraph,
    pub inputs: NodeInputs,
    pub assembly: AssemblyReport,
    pub model: ModelConfig,
}

impl Dataset {
    pub fn load(paths: &DataPaths) -> Result<Self> {
        let expr = read_omics(&paths.expr)?;
        let mutation = read_omics(&paths.mutation)?;
        let cnv = read_omics(&paths.cnv)?;
        let mut notes = Vec::new();
        // Cells need all three omics blocks.
        let cell_ids: Vec<String> = expr
            .ids
            .iter()
            .filter(|id| mutation.rows.contains_key(*id) && cnv.rows.contains_key(*id))
            .cloned()
            .collect();
        let dropped = expr.ids.len() - cell_ids.len();
        if dropped > 0 {
            notes.push(format!("{dropped} cells lack a mutation or cnv profile and were dropped"));
        }
        let profiles = cell_ids
            .iter()
            .map(|id| OmicsProfile {
                expr: expr.rows[id].clone(),
                mutation: mutation.rows[id].clone(),
                cnv: cnv.rows[id].clone(),
            })
            .collect();
        let dims = OmicsDims {
            expr: expr.width,
            mutation: mutation.width,
            cnv: cnv.width,
        };

        let featurizer = FeaturizerConfig::default();
        let mut drug_ids = Vec::new();
        let mut smiles = Vec::new();
        let mut molecules = Vec::new();
        for (line, id, s) in read_drugs(&paths.drugs)? {
            let mol = parse_smiles(&s).map_err(|e| {
                Error::format(&paths.drugs, line, id.len() + 2, format!("drug `{id}`: {e}"))
            })?;
            drug_ids.push(id);
            smiles.push(s);
            molecules.push(mol.with_features(&featurizer));
        }

        let cell_index: HashMap<&str, usize> = cell_ids.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let drug_index: HashMap<&str, usize> = drug_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        let mut ic50 = Vec::new();
        let mut seen = HashSet::new();
        let mut unknown = 0;
        for (line, c, d, v) in read_responses(&paths.responses)? {
            let (Some(&ci), Some(&di)) = (cell_index.get(c.as_str()), drug_index.get(d.as_str())) else {
                unknown += 1;
                continue;
            };
            if !seen.insert((ci, di)) {
                return Err(Error::format(&paths.responses, line, 1, format!("duplicate response for ({c}, {d})")));
            }
            ic50.push((ci, di, v));
        }
        if unknown > 0 {
            notes.push(format!("{unknown} responses reference unknown cells or drugs and were skipped"));
        }
        Ok(Self {
            dims,
            cell_ids,
            profiles,
            drug_ids,
            smiles,
            molecules,
            ic50,
            notes,
        })
    }

    /// Labeled responses after IC50 binarization.
    pub fn responses(&self) -> Vec<Response> {
        self.ic50
            .iter()
            .filter_map(|&(cell, drug, v)| label_ic50(v).map(|label| Response { cell, drug, label }))
            .collect()
    }

    pub fn inputs(&self) -> Result<NodeInputs> {
        NodeInputs::new(self.dims, &self.profiles, &self.molecules)
    }

    /// `base` with the omics widths of this dataset.
    pub fn model_config(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            omics: self.dims,
            ..base.clone()
        }
    }

    /// Builds the graph; similarity comes from the encoder outputs of a
    /// freshly initialized model seeded with `seed`.
    pub fn prepare(&self, base: &ModelConfig, seed: u64, phi_cell: f64, phi_drug: f64) -> Result<Prepared> {
        let model = self.model_config(base);
        let inputs = self.inputs()?;
        let features = Model::new(model.clone(), seed)?.encoder_features(&inputs)?;
        let (graph, assembly) = assemble(
            self.cell_ids.clone(),
            self.drug_ids.clone(),
            &self.responses(),
            features,
            phi_cell,
            phi_drug,
        )?;
        Ok(Prepared {
            graph,
            inputs,
            assembly,
            model,
        })
    }

    /// Writes the five standard files into `dir`. Numbers use the shortest
    /// representation that round-trips.
    pub fn write(&self, dir: &Path) -> Result<DataPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = DataPaths::in_dir(dir);
        let omics = |pick: &dyn Fn(&OmicsProfile) -> &Vec<f64>, width: usize, prefix: &str| {
            let mut out = String::from("cell_id");
            for k in 0..width {
                write!(out, "\t{prefix}{k}").unwrap();
            }
            out.push('\n');
            for (id, p) in self.cell_ids.iter().zip(&self.profiles) {
                out.push_str(id);
                for v in pick(p) {
                    write!(out, "\t{v}").unwrap();
                }
                out.push('\n');
            }
            out
        };
        let mut drugs = String::from("drug_id\tsmiles\n");
        for (id, s) in self.drug_ids.iter().zip(&self.smiles) {
            writeln!(drugs, "{id}\t{s}").unwrap();
        }
        let mut responses = String::from("cell_id\tdrug_id\tic50\n");
        for &(c, d, v) in &self.ic50 {
            writeln!(responses, "{}\t{}\t{v}", self.cell_ids[c], self.drug_ids[d]).unwrap();
        }
        let files = [
            (&paths.expr, omics(&|p| &p.expr, self.dims.expr, "e")),
            (&paths.mutation, omics(&|p| &p.mutation, self.dims.mutation, "m")),
            (&paths.cnv, omics(&|p| &p.cnv, self.dims.cnv, "n")),
            (&paths.drugs, drugs),
            (&paths.responses, responses),
        ];
        for (path, text) in files {
            std::fs::write(path, text).map_err(|e| Error::io(path.as_path(), e))?;
        }
        Ok(paths)
    }
}

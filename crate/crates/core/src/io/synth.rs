//! Synthetic benchmark with planted group structure.
//!
//! Cells and drugs fall into groups; a rule table over (cell group, drug
//! group) decides which pairs respond. Cells in a group share a feature
//! centroid, drugs in a group share a scaffold, so similarity edges form
//! within-group cliques that support every planted response.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::encoders::{OmicsDims, OmicsProfile};
use crate::graph::ResponseLabel;
use crate::rng;
use crate::smiles::{parse_smiles, FeaturizerConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Sensitive,
    Resistant,
    None,
}

/// Drugs per group: a fixed count or an inclusive `[min, max]` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSize {
    Fixed(usize),
    Range([usize; 2]),
}

impl GroupSize {
    fn bounds(self) -> (usize, usize) {
        match self {
            GroupSize::Fixed(n) => (n, n),
            GroupSize::Range([a, b]) => (a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_cell_groups: usize,
    pub n_drug_groups: usize,
    pub cells_per_group: usize,
    pub drugs_per_group: GroupSize,
    pub feature_noise: f64,
    /// `rules[g][h]`: response of cell group `g` to drug group `h`.
    pub rules: Vec<Vec<Rule>>,
    /// Probability that a pair covered by a response rule is observed.
    pub planting_rate: f64,
    pub omics: OmicsDims,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_cell_groups: 3,
            n_drug_groups: 3,
            cells_per_group: 20,
            drugs_per_group: GroupSize::Range([6, 8]),
            feature_noise: 0.1,
            rules: default_rules(3, 3),
            planting_rate: 1.0,
            omics: OmicsDims {
                expr: 32,
                mutation: 32,
                cnv: 16,
            },
        }
    }
}

/// Every cell group is sensitive to its own drug group; cell group 0 is
/// also resistant to drug group 1 (or 0 when there is only one drug group
/// and nothing else is free).
pub fn default_rules(cell_groups: usize, drug_groups: usize) -> Vec<Vec<Rule>> {
    let mut rules = vec![vec![Rule::None; drug_groups]; cell_groups];
    for (g, row) in rules.iter_mut().enumerate() {
        row[g % drug_groups] = Rule::Sensitive;
    }
    if drug_groups > 1 {
        rules[0][1] = Rule::Resistant;
    } else if cell_groups > 1 {
        rules[1][0] = Rule::Resistant;
    }
    rules
}

const SCAFFOLDS: [&str; 8] = [
    "c1ccc2cc3ccccc3cc2c1",
    "OP(O)(=O)OP(O)(=O)OP(O)(=O)O",
    "SSSSSSSSS",
    "[Si]([Si])([Si])[Si][Si]([Si])[Si]",
    "FC(F)(F)C(F)(F)C(F)(F)C(F)(F)F",
    "NC(N)=NC(N)=NC(N)=N",
    "ClC(Cl)(Cl)C(Cl)(Cl)C(Cl)(Cl)Cl",
    "C1CCC2CCCCC2C1",
];

const DECORATIONS: [&str; 8] = ["", "C", "O", "N", "CC", "F", "Cl", "OC"];

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_cell_groups == 0 || self.n_drug_groups == 0 || self.cells_per_group == 0 {
            return bad("group counts and cells per group must be positive".into());
        }
        let (lo, hi) = self.drugs_per_group.bounds();
        if lo == 0 || lo > hi || hi > 50 {
            return bad(format!("drugs per group [{lo}, {hi}] must satisfy 1 <= min <= max <= 50"));
        }
        if self.n_drug_groups > SCAFFOLDS.len() {
            return bad(format!("at most {} drug groups are supported", SCAFFOLDS.len()));
        }
        if !(self.feature_noise >= 0.0) || !self.feature_noise.is_finite() {
            return bad(format!("feature noise must be finite and >= 0, got {}", self.feature_noise));
        }
        if !(0.0..=1.0).contains(&self.planting_rate) {
            return bad(format!("planting rate must lie in [0, 1], got {}", self.planting_rate));
        }
        if self.rules.len() != self.n_cell_groups || self.rules.iter().any(|r| r.len() != self.n_drug_groups) {
            return bad(format!(
                "rule table must be {} x {}",
                self.n_cell_groups, self.n_drug_groups
            ));
        }
        if self.omics.expr + self.omics.mutation + self.omics.cnv == 0 {
            return bad("omics widths are all zero".into());
        }
        Ok(())
    }

    /// Whether the table has at least one sensitive and one resistant rule.
    pub fn has_both_rules(&self) -> bool {
        let flat = || self.rules.iter().flatten();
        flat().any(|&r| r == Rule::Sensitive) && flat().any(|&r| r == Rule::Resistant)
    }
}

/// Ground truth planted by the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub cell_groups: Vec<usize>,
    pub drug_groups: Vec<usize>,
    /// `(cell, drug, label)` for every observed planted response.
    pub responses: Vec<(usize, usize, ResponseLabel)>,
}

impl Planted {
    /// Within-group cell pairs and drug pairs (`a < b`), the similarity
    /// edges that justify the planted responses.
    pub fn support_pairs(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let pairs = |groups: &[usize]| {
            let mut out = Vec::new();
            for a in 0..groups.len() {
                for b in a + 1..groups.len() {
                    if groups[a] == groups[b] {
                        out.push((a, b));
                    }
                }
            }
            out
        };
        (pairs(&self.cell_groups), pairs(&self.drug_groups))
    }

    /// Writes `truth_responses.tsv`, `truth_support.tsv` and `groups.tsv`.
    pub fn write(&self, dataset: &Dataset, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut responses = String::from("cell_id\tdrug_id\tlabel\n");
        for &(c, d, label) in &self.responses {
            let label = match label {
                ResponseLabel::Sensitive => "sensitive",
                ResponseLabel::Resistant => "resistant",
            };
            writeln!(responses, "{}\t{}\t{label}", dataset.cell_ids[c], dataset.drug_ids[d]).unwrap();
        }
        let (cells, drugs) = self.support_pairs();
        let mut support = String::from("source\trelation\ttarget\n");
        for (a, b) in cells {
            writeln!(support, "{}\tcell_sim\t{}", dataset.cell_ids[a], dataset.cell_ids[b]).unwrap();
        }
        for (a, b) in drugs {
            writeln!(support, "{}\tdrug_sim\t{}", dataset.drug_ids[a], dataset.drug_ids[b]).unwrap();
        }
        let mut groups = String::from("node_id\ttype\tgroup\n");
        for (id, g) in dataset.cell_ids.iter().zip(&self.cell_groups) {
            writeln!(groups, "{id}\tcell\t{g}").unwrap();
        }
        for (id, g) in dataset.drug_ids.iter().zip(&self.drug_groups) {
            writeln!(groups, "{id}\tdrug\t{g}").unwrap();
        }
        let mut written = Vec::new();
        for (name, text) in [
            ("truth_responses.tsv", responses),
            ("truth_support.tsv", support),
            ("groups.tsv", groups),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Generates a dataset from `spec`; all randomness comes from the `synth`
/// stream of `seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(Dataset, Planted)> {
    spec.validate()?;
    let mut rng = rng::stream(seed, rng::SYNTH);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, spec.feature_noise).expect("noise checked");
    let flip = (spec.feature_noise / 2.0).min(0.5);

    let mut cell_ids = Vec::new();
    let mut profiles = Vec::new();
    let mut cell_groups = Vec::new();
    for g in 0..spec.n_cell_groups {
        let expr: Vec<f64> = (0..spec.omics.expr).map(|_| std_normal.sample(&mut rng)).collect();
        let cnv: Vec<f64> = (0..spec.omics.cnv).map(|_| std_normal.sample(&mut rng)).collect();
        let mutation: Vec<bool> = (0..spec.omics.mutation).map(|_| rng.random_bool(0.3)).collect();
        for k in 0..spec.cells_per_group {
            let jitter = |base: &[f64], rng: &mut rng::Rng| base.iter().map(|v| v + noise.sample(rng)).collect();
            let profile = OmicsProfile {
                expr: jitter(&expr, &mut rng),
                mutation: mutation
                    .iter()
                    .map(|&bit| f64::from(u8::from(bit ^ rng.random_bool(flip))))
                    .collect(),
                cnv: jitter(&cnv, &mut rng),
            };
            cell_ids.push(format!("CELL_G{g}_{k:02}"));
            profiles.push(profile);
            cell_groups.push(g);
        }
    }

    let (lo, hi) = spec.drugs_per_group.bounds();
    let featurizer = FeaturizerConfig::default();
    let mut drug_ids = Vec::new();
    let mut smiles = Vec::new();
    let mut molecules = Vec::new();
    let mut drug_groups = Vec::new();
    let singles: Vec<String> = DECORATIONS.iter().map(|d| d.to_string()).collect();
    let mut pairs: Vec<String> = DECORATIONS
        .iter()
        .flat_map(|a| DECORATIONS.iter().map(move |b| format!("{a}{b}")))
        .filter(|d| !singles.contains(d))
        .collect();
    pairs.sort();
    pairs.dedup();
    for h in 0..spec.n_drug_groups {
        let count = rng.random_range(lo..=hi);
        // Single-atom decorations first so small groups stay tight.
        let mut pool = singles.clone();
        pool.shuffle(&mut rng);
        let mut extra = pairs.clone();
        extra.shuffle(&mut rng);
        pool.extend(extra);
        for (k, deco) in pool.iter().take(count).enumerate() {
            let s = format!("{}{deco}", SCAFFOLDS[h]);
            molecules.push(parse_smiles(&s)?.with_features(&featurizer));
            smiles.push(s);
            drug_ids.push(format!("DRUG_G{h}_{k:02}"));
            drug_groups.push(h);
        }
    }

    let mut ic50 = Vec::new();
    let mut planted = Vec::new();
    for (c, &g) in cell_groups.iter().enumerate() {
        for (d, &h) in drug_groups.iter().enumerate() {
            let rule = spec.rules[g][h];
            let observed = rule != Rule::None && rng.random_bool(spec.planting_rate);
            let value = match (rule, observed) {
                (Rule::Sensitive, true) => {
                    planted.push((c, d, ResponseLabel::Sensitive));
                    rng.random_range(-5.0..-3.5)
                }
                (Rule::Resistant, true) => {
                    planted.push((c, d, ResponseLabel::Resistant));
                    rng.random_range(3.5..5.0)
                }
                _ => rng.random_range(-2.0..2.0),
            };
            ic50.push((c, d, value));
        }
    }

    let dataset = Dataset {
        dims: spec.omics,
        cell_ids,
        profiles,
        drug_ids,
        smiles,
        molecules,
        ic50,
        notes: Vec::new(),
    };
    let planted = Planted {
        cell_groups,
        drug_groups,
        responses: planted,
    };
    Ok((dataset, planted))
}

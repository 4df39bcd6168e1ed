//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::eval::{CvConfig, SimilarityScope};
use crate::explain::MaskConfig;
use crate::graph::Task;
use crate::model::{ModelConfig, TrainConfig};
use crate::{Error, Result};

use super::DataPaths;

/// Named starting points for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Published hyperparameters with the desk-scale epoch budget.
    Default,
    /// Published hyperparameters including the full 5000 epochs.
    Paper,
    /// Large batches, a higher learning rate and 32-d embeddings so a
    /// five-fold run on the synthetic benchmark takes seconds.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "default" => Ok(Preset::Default),
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Config(format!("unknown preset `{s}` (expected default, paper or desk)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub expr: Option<PathBuf>,
    pub mutation: Option<PathBuf>,
    pub cnv: Option<PathBuf>,
    pub drugs: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    pub out: PathBuf,

    pub batch_size: usize,
    pub lr: f64,
    pub embed_dim: usize,
    pub epochs: usize,
    pub omics_hidden: usize,
    pub neg_ratio: usize,
    pub decode_similarity: bool,

    pub phi_cell: f64,
    pub phi_drug: f64,
    pub sim_scope: SimilarityScope,

    pub task: Task,
    pub folds: usize,
    pub seed: u64,
    /// Seed of fold assignment and per-fold training; `seed` when unset.
    pub cv_seed: Option<u64>,
    pub threshold: f64,

    pub lambda_sparsity: f64,
    pub lambda_entropy: f64,
    pub tau_mask: f64,
    pub mask_iterations: usize,
    pub mask_lr: f64,
    pub k: usize,
    pub hops: usize,
    /// Recall denominator counted over the whole benchmark instead of per target.
    pub tg_global: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset(Preset::Default)
    }
}

/// Keys accepted in config files, in echo order.
pub const KEYS: &[&str] = &[
    "preset",
    "data_dir",
    "expr",
    "mutation",
    "cnv",
    "drugs",
    "responses",
    "out",
    "batch_size",
    "lr",
    "embed_dim",
    "epochs",
    "omics_hidden",
    "neg_ratio",
    "decode_similarity",
    "phi_cell",
    "phi_drug",
    "sim_scope",
    "task",
    "folds",
    "seed",
    "cv_seed",
    "threshold",
    "lambda_sparsity",
    "lambda_entropy",
    "tau_mask",
    "mask_iterations",
    "mask_lr",
    "k",
    "hops",
    "tg_global",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let train = TrainConfig::default();
        let model = ModelConfig::default();
        let mask = MaskConfig::default();
        let mut cfg = Self {
            data_dir: None,
            expr: None,
            mutation: None,
            cnv: None,
            drugs: None,
            responses: None,
            out: PathBuf::from("out"),
            batch_size: train.batch_size,
            lr: train.lr,
            embed_dim: model.embed_dim,
            epochs: train.epochs,
            omics_hidden: model.omics_hidden,
            neg_ratio: train.neg_ratio,
            decode_similarity: model.decode_similarity,
            phi_cell: 0.9,
            phi_drug: 0.88,
            sim_scope: SimilarityScope::Global,
            task: Task::A,
            folds: 5,
            seed: 0,
            cv_seed: None,
            threshold: 0.5,
            lambda_sparsity: mask.lambda_sparsity,
            lambda_entropy: mask.lambda_entropy,
            tau_mask: mask.tau,
            mask_iterations: mask.iterations,
            mask_lr: mask.lr,
            k: mask.k,
            hops: mask.hops,
            tg_global: false,
        };
        match preset {
            Preset::Default => {}
            Preset::Paper => cfg.epochs = 5000,
            Preset::Desk => {
                cfg.batch_size = 2048;
                cfg.lr = 0.01;
                cfg.embed_dim = 32;
            }
        }
        cfg
    }

    /// Parses `key = value` lines (`#` starts a comment). A `preset` line,
    /// wherever it appears, is applied before the other keys.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        Self::parse_with_preset(text, origin, None)
    }

    /// As [`RunConfig::parse`], with `preset` (when given) replacing the file's own.
    pub fn parse_with_preset(text: &str, origin: &Path, preset_override: Option<Preset>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut preset = Preset::Default;
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(origin, line_no, 1, "expected `key = value`"));
            };
            let key = key.trim();
            let column = raw.find(key).map_or(1, |c| c + 1);
            if !KEYS.contains(&key) {
                return Err(Error::format(origin, line_no, column, format!("unknown key `{key}`")));
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(Error::format(origin, line_no, column, format!("`{key}` already set on line {prev}")));
            }
            if key == "preset" {
                preset = value.parse().map_err(|e: Error| Error::format(origin, line_no, column, e.to_string()))?;
            } else {
                pairs.push((line_no, column, key.to_string(), value.trim().to_string()));
            }
        }
        let mut cfg = Self::preset(preset_override.unwrap_or(preset));
        for (line_no, column, key, value) in pairs {
            cfg.set(&key, &value).map_err(|e| Error::format(origin, line_no, column, e.to_string()))?;
        }
        cfg.validate().map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        Ok(cfg)
    }

    pub fn load(path: &Path, preset_override: Option<Preset>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with_preset(&text, path, preset_override)
    }

    /// Sets one key from its text form (used for files and CLI overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value.trim()));
        match key {
            "preset" => return Err(Error::Config("`preset` can only be set in a config file".into())),
            "data_dir" => self.data_dir = path(),
            "expr" => self.expr = path(),
            "mutation" => self.mutation = path(),
            "cnv" => self.cnv = path(),
            "drugs" => self.drugs = path(),
            "responses" => self.responses = path(),
            "out" => self.out = PathBuf::from(value.trim()),
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "omics_hidden" => self.omics_hidden = parse(key, value)?,
            "neg_ratio" => self.neg_ratio = parse(key, value)?,
            "decode_similarity" => self.decode_similarity = parse_bool(key, value)?,
            "phi_cell" => self.phi_cell = parse(key, value)?,
            "phi_drug" => self.phi_drug = parse(key, value)?,
            "sim_scope" => self.sim_scope = value.trim().parse()?,
            "task" => self.task = value.parse()?,
            "folds" => self.folds = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "cv_seed" => self.cv_seed = Some(parse(key, value)?),
            "threshold" => self.threshold = parse(key, value)?,
            "lambda_sparsity" => self.lambda_sparsity = parse(key, value)?,
            "lambda_entropy" => self.lambda_entropy = parse(key, value)?,
            "tau_mask" => self.tau_mask = parse(key, value)?,
            "mask_iterations" => self.mask_iterations = parse(key, value)?,
            "mask_lr" => self.mask_lr = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "hops" => self.hops = parse(key, value)?,
            "tg_global" => self.tg_global = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Checks every numeric key against its documented range.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        check(self.batch_size >= 1, "batch_size must be >= 1")?;
        check(self.lr > 0.0 && self.lr <= 1.0, "lr must lie in (0, 1]")?;
        check((1..=4096).contains(&self.embed_dim), "embed_dim must lie in [1, 4096]")?;
        check(self.epochs >= 1, "epochs must be >= 1")?;
        check(self.omics_hidden >= 1, "omics_hidden must be >= 1")?;
        check((1..=100).contains(&self.neg_ratio), "neg_ratio must lie in [1, 100]")?;
        check((-1.0..=1.0).contains(&self.phi_cell), "phi_cell must lie in [-1, 1]")?;
        check((-1.0..=1.0).contains(&self.phi_drug), "phi_drug must lie in [-1, 1]")?;
        check(self.folds >= 2, "folds must be >= 2")?;
        check((0.0..=1.0).contains(&self.threshold), "threshold must lie in [0, 1]")?;
        check(self.lambda_sparsity >= 0.0, "lambda_sparsity must be >= 0")?;
        check(self.lambda_entropy >= 0.0, "lambda_entropy must be >= 0")?;
        check((0.0..1.0).contains(&self.tau_mask), "tau_mask must lie in [0, 1)")?;
        check(self.mask_iterations >= 1, "mask_iterations must be >= 1")?;
        check(self.mask_lr > 0.0 && self.mask_lr <= 1.0, "mask_lr must lie in (0, 1]")?;
        check(self.k >= 1, "k must be >= 1")?;
        check((1..=2).contains(&self.hops), "hops must be 1 or 2")?;
        Ok(())
    }

    /// Input files: explicit paths win over `data_dir`.
    pub fn data_paths(&self) -> Result<DataPaths> {
        let base = self.data_dir.as_deref().map(DataPaths::in_dir);
        let pick = |explicit: &Option<PathBuf>, from_dir: Option<&PathBuf>, key: &str| -> Result<PathBuf> {
            explicit
                .clone()
                .or_else(|| from_dir.cloned())
                .ok_or_else(|| Error::Config(format!("no `{key}` path and no `data_dir`")))
        };
        Ok(DataPaths {
            expr: pick(&self.expr, base.as_ref().map(|b| &b.expr), "expr")?,
            mutation: pick(&self.mutation, base.as_ref().map(|b| &b.mutation), "mutation")?,
            cnv: pick(&self.cnv, base.as_ref().map(|b| &b.cnv), "cnv")?,
            drugs: pick(&self.drugs, base.as_ref().map(|b| &b.drugs), "drugs")?,
            responses: pick(&self.responses, base.as_ref().map(|b| &b.responses), "responses")?,
        })
    }

    /// Model hyperparameters; omics widths are filled in from the data.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            embed_dim: self.embed_dim,
            omics_hidden: self.omics_hidden,
            decode_similarity: self.decode_similarity,
            ..ModelConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            lr: self.lr,
            epochs: self.epochs,
            neg_ratio: self.neg_ratio,
            seed: self.seed,
        }
    }

    pub fn cv_config(&self, model: ModelConfig) -> CvConfig {
        CvConfig {
            model,
            train: self.train_config(),
            folds: self.folds,
            seed: self.cv_seed.unwrap_or(self.seed),
            threshold: self.threshold,
            similarity_scope: self.sim_scope,
        }
    }

    pub fn mask_config(&self) -> MaskConfig {
        MaskConfig {
            iterations: self.mask_iterations,
            lr: self.mask_lr,
            lambda_sparsity: self.lambda_sparsity,
            lambda_entropy: self.lambda_entropy,
            tau: self.tau_mask,
            k: self.k,
            hops: self.hops,
            seed: self.seed,
            ..MaskConfig::default()
        }
    }

    /// Every key with its effective value, for manifests and checkpoints.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("data_dir", path(&self.data_dir));
        put("expr", path(&self.expr));
        put("mutation", path(&self.mutation));
        put("cnv", path(&self.cnv));
        put("drugs", path(&self.drugs));
        put("responses", path(&self.responses));
        put("out", self.out.display().to_string());
        put("batch_size", self.batch_size.to_string());
        put("lr", self.lr.to_string());
        put("embed_dim", self.embed_dim.to_string());
        put("epochs", self.epochs.to_string());
        put("omics_hidden", self.omics_hidden.to_string());
        put("neg_ratio", self.neg_ratio.to_string());
        put("decode_similarity", self.decode_similarity.to_string());
        put("phi_cell", self.phi_cell.to_string());
        put("phi_drug", self.phi_drug.to_string());
        put("sim_scope", self.sim_scope.to_string());
        put("task", self.task.to_string());
        put("folds", self.folds.to_string());
        put("seed", self.seed.to_string());
        put("cv_seed", self.cv_seed.map_or(String::new(), |s| s.to_string()));
        put("threshold", self.threshold.to_string());
        put("lambda_sparsity", self.lambda_sparsity.to_string());
        put("lambda_entropy", self.lambda_entropy.to_string());
        put("tau_mask", self.tau_mask.to_string());
        put("mask_iterations", self.mask_iterations.to_string());
        put("mask_lr", self.mask_lr.to_string());
        put("k", self.k.to_string());
        put("hops", self.hops.to_string());
        put("tg_global", self.tg_global.to_string());
        m
    }
}

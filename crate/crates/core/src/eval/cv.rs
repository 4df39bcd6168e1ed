//! K-fold cross-validation over the cold-start tasks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, aupr, threshold_metrics};
use crate::graph::{split_tasks, Fold, RelationalGraph, Task, Triple};
use crate::model::{sample_negatives, train, MessageGraph, Model, ModelConfig, NodeInputs, TrainConfig, TrainReport};
use crate::rng;
use crate::{Error, Result};

/// Which similarity edges a fold's training graph keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityScope {
    Global,
    /// Drop similarity edges whose endpoints are both held out.
    TrainOnly,
}

impl std::fmt::Display for SimilarityScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Global => "global",
            Self::TrainOnly => "train_only",
        })
    }
}

impl std::str::FromStr for SimilarityScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Self::Global),
            "train_only" => Ok(Self::TrainOnly),
            _ => Err(Error::Config(format!("unknown similarity scope `{s}` (global, train_only)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub model: ModelConfig,
    /// The seed field is ignored; each fold derives its own.
    pub train: TrainConfig,
    pub folds: usize,
    pub seed: u64,
    pub threshold: f64,
    pub similarity_scope: SimilarityScope,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            folds: 5,
            seed: 0,
            threshold: 0.5,
            similarity_scope: SimilarityScope::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub aupr: f64,
    pub f1: f64,
    pub specificity: f64,
    pub recall: f64,
    pub precision: f64,
}

impl Metrics {
    const NAMES: [&'static str; 6] = ["auc", "aupr", "f1", "specificity", "recall", "precision"];

    fn values(&self) -> [f64; 6] {
        [self.auc, self.aupr, self.f1, self.specificity, self.recall, self.precision]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self {
            auc: v[0],
            aupr: v[1],
            f1: v[2],
            specificity: v[3],
            recall: v[4],
            precision: v[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub metrics: Metrics,
    pub test_positives: usize,
    pub test_negatives: usize,
    pub first_epoch_loss: f64,
    pub final_epoch_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub folds: Vec<FoldMetrics>,
    pub mean: Metrics,
    /// Population standard deviation across folds.
    pub std: Metrics,
    /// Fold with the highest AUC (first on ties).
    pub best_fold: usize,
    pub aupr_interpolation: String,
    pub config: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One row per fold plus `mean`, `std` and `best` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("task\tfold\t{}\n", Metrics::NAMES.join("\t"));
        let mut row = |label: &str, m: &Metrics| {
            let vals: Vec<String> = m.values().iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}\t{label}\t{}", self.task, vals.join("\t")).unwrap();
        };
        for f in &self.folds {
            row(&f.fold.to_string(), &f.metrics);
        }
        row("mean", &self.mean);
        row("std", &self.std);
        let best = self.folds.iter().find(|f| f.fold == self.best_fold).map(|f| f.metrics);
        if let Some(best) = best {
            row("best", &best);
        }
        out
    }
}

fn aggregate(folds: &[FoldMetrics]) -> (Metrics, Metrics) {
    let n = folds.len() as f64;
    let mut mean = [0.0; 6];
    for f in folds {
        for (m, v) in mean.iter_mut().zip(f.metrics.values()) {
            *m += v / n;
        }
    }
    let mut var = [0.0; 6];
    for f in folds {
        for ((s, v), m) in var.iter_mut().zip(f.metrics.values()).zip(mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    (Metrics::from_values(mean), Metrics::from_values(var.map(f64::sqrt)))
}

pub fn fold_seed(master: u64, fold: usize) -> u64 {
    rng::derive_seed(master, &format!("fold{fold}"))
}

/// The graph a fold trains on: all nodes and similarity edges, only the
/// fold's training responses.
pub fn fold_graph(graph: &RelationalGraph, fold: &Fold, scope: SimilarityScope) -> Result<RelationalGraph> {
    let mut g = graph.with_responses(&fold.train)?;
    if scope == SimilarityScope::TrainOnly {
        g.restrict_similarity(&fold.held_out);
    }
    Ok(g)
}

/// A trained fold: the model, its training graph and loss curve.
#[derive(Debug, Clone)]
pub struct FoldRun {
    pub fold: Fold,
    pub graph: RelationalGraph,
    pub model: Model,
    pub train_report: TrainReport,
}

pub fn train_fold(graph: &RelationalGraph, inputs: &NodeInputs, fold: &Fold, config: &CvConfig) -> Result<FoldRun> {
    let seed = fold_seed(config.seed, fold.index);
    let train_graph = fold_graph(graph, fold, config.similarity_scope)?;
    let mut model = Model::new(config.model.clone(), seed)?;
    let train_config = TrainConfig { seed, ..config.train };
    let report = train(&mut model, inputs, &train_graph, &fold.train, &fold.train_pool, &train_config)
        .map_err(|e| match e {
            Error::Numerical(m) => Error::Numerical(format!("fold {}: {m}", fold.index)),
            other => other,
        })?;
    Ok(FoldRun {
        fold: fold.clone(),
        graph: train_graph,
        model,
        train_report: report,
    })
}

/// Test positives plus an equal number of negatives from the fold's test pool.
pub fn evaluation_triples(fold: &Fold, master: u64) -> (Vec<Triple>, usize) {
    let mut rng = rng::stream(fold_seed(master, fold.index), "eval-negatives");
    let negatives = sample_negatives(&fold.test_pool, &fold.test, 1, &mut rng);
    let mut triples = fold.test.clone();
    triples.extend(negatives.triples);
    (triples, negatives.shortfall)
}

pub fn evaluate_fold(run: &FoldRun, inputs: &NodeInputs, config: &CvConfig) -> Result<(FoldMetrics, Vec<String>)> {
    let (triples, shortfall) = evaluation_triples(&run.fold, config.seed);
    let mut warnings = Vec::new();
    if shortfall > 0 {
        warnings.push(format!("fold {}: test negative pool short by {shortfall}", run.fold.index));
    }
    warnings.extend(run.train_report.warnings.iter().map(|w| format!("fold {}: {w}", run.fold.index)));
    let x = run.model.encoder_features(inputs)?;
    let z = run.model.embeddings_from(&x, &MessageGraph::new(&run.graph))?;
    let scores = triples
        .iter()
        .map(|&t| run.model.score(&z, t))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<bool> = triples.iter().map(|t| t.label).collect();
    let context = |e: Error| Error::Invalid(format!("fold {}: {e}", run.fold.index));
    let thr = threshold_metrics(&scores, &labels, config.threshold)?;
    let metrics = Metrics {
        auc: auc(&scores, &labels).map_err(context)?,
        aupr: aupr(&scores, &labels).map_err(context)?,
        f1: thr.f1,
        specificity: thr.specificity,
        recall: thr.recall,
        precision: thr.precision,
    };
    let losses = &run.train_report.epoch_losses;
    Ok((
        FoldMetrics {
            fold: run.fold.index,
            metrics,
            test_positives: labels.iter().filter(|&&l| l).count(),
            test_negatives: labels.iter().filter(|&&l| !l).count(),
            first_epoch_loss: losses.first().copied().unwrap_or(f64::NAN),
            final_epoch_loss: losses.last().copied().unwrap_or(f64::NAN),
        },
        warnings,
    ))
}

/// Cross-validates and also returns every trained fold.
pub fn run_cv_with_models(
    graph: &RelationalGraph,
    inputs: &NodeInputs,
    task: Task,
    config: &CvConfig,
    echo: BTreeMap<String, String>,
) -> Result<(EvalReport, Vec<FoldRun>)> {
    let folds = split_tasks(graph, task, config.folds, config.seed)?;
    let results: Vec<(FoldRun, FoldMetrics, Vec<String>)> = folds
        .par_iter()
        .map(|fold| {
            let run = train_fold(graph, inputs, fold, config)?;
            let (metrics, warnings) = evaluate_fold(&run, inputs, config)?;
            Ok((run, metrics, warnings))
        })
        .collect::<Result<_>>()?;
    let mut runs = Vec::new();
    let mut fold_metrics = Vec::new();
    let mut warnings = Vec::new();
    for (run, m, w) in results {
        runs.push(run);
        fold_metrics.push(m);
        warnings.extend(w);
    }
    let (mean, std) = aggregate(&fold_metrics);
    let best_fold = fold_metrics
        .iter()
        .fold(None::<&FoldMetrics>, |best, f| match best {
            Some(b) if b.metrics.auc >= f.metrics.auc => Some(b),
            _ => Some(f),
        })
        .map_or(0, |f| f.fold);
    let report = EvalReport {
        task,
        folds: fold_metrics,
        mean,
        std,
        best_fold,
        aupr_interpolation: "step".into(),
        config: echo,
        warnings,
    };
    Ok((report, runs))
}

pub fn run_cv(graph: &RelationalGraph, inputs: &NodeInputs, task: Task, config: &CvConfig) -> Result<EvalReport> {
    run_cv_with_models(graph, inputs, task, config, BTreeMap::new()).map(|(r, _)| r)
}

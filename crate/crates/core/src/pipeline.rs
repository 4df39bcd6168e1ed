//! The command pipeline shared by the CLI and the C API: every step reads a
//! [`RunConfig`], writes into its output directory and leaves a manifest.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bench::{benchmark, ground_truth, ground_truth_jsonl, BenchmarkTable};
use crate::eval::{fold_graph, run_cv_with_models, EvalReport, FoldRun};
use crate::explain::{explain_mask, explaine_scores, to_dot, ExplainContext, ExplanationRecord, ExplanationSubgraph, Method};
use crate::graph::{split_tasks, Fold, Relation, RelationalGraph, Triple};
use crate::io::{generate_synthetic, tsv, Dataset, Prepared, RunConfig, RunRecorder, SyntheticSpec};
use crate::model::{load_checkpoint, predict_all, save_checkpoint, Model, NodeInputs};
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";

/// A dataset loaded from the configured paths and assembled into a graph.
pub struct Workspace {
    pub dataset: Dataset,
    pub prepared: Prepared,
}

impl Workspace {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let dataset = Dataset::load(&cfg.data_paths()?)?;
        let prepared = dataset.prepare(&cfg.model_config(), cfg.seed, cfg.phi_cell, cfg.phi_drug)?;
        Ok(Self { dataset, prepared })
    }
}

fn hash_data(rec: &mut RunRecorder, cfg: &RunConfig) -> Result<()> {
    let paths = cfg.data_paths()?;
    rec.hash_inputs(paths.all())
}

/// Writes a synthetic dataset, its planted truth and the spec into `cfg.out`.
pub fn synth(cfg: &RunConfig, spec: &SyntheticSpec) -> Result<Dataset> {
    let mut rec = RunRecorder::start("synth", cfg)?;
    let (dataset, planted) = generate_synthetic(spec, cfg.seed)?;
    let paths = dataset.write(&cfg.out)?;
    for p in paths.all() {
        rec.record(p);
    }
    for p in planted.write(&dataset, &cfg.out)? {
        rec.record(&p);
    }
    rec.write("spec.json", (serde_json::to_string_pretty(spec)? + "\n").as_bytes())?;
    rec.finish()?;
    Ok(dataset)
}

/// Edge list with one line per canonical edge.
pub fn graph_tsv(graph: &RelationalGraph) -> String {
    let mut out = String::from("source\trelation\ttarget\n");
    for r in Relation::ALL.into_iter().filter(|r| !r.is_inverse()) {
        for &(s, o) in graph.edges(r) {
            if r.is_similarity() && s > o {
                continue;
            }
            writeln!(out, "{}\t{r}\t{}", graph.node_name(s), graph.node_name(o)).unwrap();
        }
    }
    out
}

/// Loads and assembles the inputs, writing the edge list and assembly summary.
pub fn ingest(cfg: &RunConfig) -> Result<Workspace> {
    let mut rec = RunRecorder::start("ingest", cfg)?;
    hash_data(&mut rec, cfg)?;
    let ws = Workspace::load(cfg)?;
    rec.write("graph.tsv", graph_tsv(&ws.prepared.graph).as_bytes())?;
    rec.write("assembly.json", (serde_json::to_string_pretty(&ws.prepared.assembly)? + "\n").as_bytes())?;
    if !ws.dataset.notes.is_empty() {
        rec.write("notes.txt", (ws.dataset.notes.join("\n") + "\n").as_bytes())?;
    }
    rec.finish()?;
    Ok(ws)
}

fn fold_checkpoint_name(fold: usize) -> String {
    format!("fold{fold}.ckpt")
}

/// Cross-validates on `cfg.task` without touching the filesystem.
pub fn cross_validate(cfg: &RunConfig, ws: &Workspace) -> Result<(EvalReport, Vec<FoldRun>)> {
    let cv = cfg.cv_config(ws.prepared.model.clone());
    run_cv_with_models(&ws.prepared.graph, &ws.prepared.inputs, cfg.task, &cv, cfg.echo())
}

fn write_training(rec: &mut RunRecorder, cfg: &RunConfig, report: &EvalReport, runs: &[FoldRun]) -> Result<()> {
    rec.write("eval_report.json", report.to_json()?.as_bytes())?;
    rec.write("eval_report.tsv", report.to_tsv().as_bytes())?;
    for run in runs {
        let mut echo = cfg.echo();
        echo.insert("fold".into(), run.fold.index.to_string());
        let path = rec.out_dir().join(fold_checkpoint_name(run.fold.index));
        save_checkpoint(&path, &run.model, &echo)?;
        rec.record(&path);
        if run.fold.index == report.best_fold {
            let best = rec.out_dir().join(CHECKPOINT_FILE);
            save_checkpoint(&best, &run.model, &echo)?;
            rec.record(&best);
        }
    }
    Ok(())
}

/// Cross-validates, writes the report and one checkpoint per fold;
/// `model.ckpt` is a copy of the best fold.
pub fn train(cfg: &RunConfig) -> Result<EvalReport> {
    let mut rec = RunRecorder::start("train", cfg)?;
    hash_data(&mut rec, cfg)?;
    let ws = Workspace::load(cfg)?;
    let (report, runs) = cross_validate(cfg, &ws)?;
    write_training(&mut rec, cfg, &report, &runs)?;
    rec.finish()?;
    Ok(report)
}

/// Keys a training grid may vary.
pub const GRID_KEYS: &[&str] = &["lr", "batch_size", "embed_dim", "epochs"];

/// Parses `key=v1,v2,...` axes into the full cartesian product of settings.
pub fn expand_grid(axes: &[String]) -> Result<Vec<Vec<(String, String)>>> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    let mut seen = Vec::new();
    for axis in axes {
        let (key, values) = axis
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid axis `{axis}` is not key=v1,v2")))?;
        let key = key.trim();
        if !GRID_KEYS.contains(&key) {
            return Err(Error::Config(format!("grid key `{key}` must be one of {}", GRID_KEYS.join(", "))));
        }
        if seen.contains(&key) {
            return Err(Error::Config(format!("grid key `{key}` given twice")));
        }
        seen.push(key);
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(Error::Config(format!("grid key `{key}` has no values")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.to_string(), v.to_string()));
                    c
                })
            })
            .collect();
    }
    Ok(combos)
}

/// Runs cross-validation for every grid point and keeps the outputs of the
/// point with the best mean AUC (first on ties).
pub fn train_grid(cfg: &RunConfig, axes: &[String]) -> Result<(Vec<(RunConfig, EvalReport)>, usize)> {
    let combos = expand_grid(axes)?;
    let mut rec = RunRecorder::start("train --grid", cfg)?;
    hash_data(&mut rec, cfg)?;
    let mut results: Vec<(RunConfig, EvalReport)> = Vec::new();
    let mut best: Option<(usize, Vec<FoldRun>)> = None;
    let mut table = String::from("lr\tbatch_size\tembed_dim\tepochs\tauc_mean\tauc_std\taupr_mean\taupr_std\n");
    for combo in &combos {
        let mut point = cfg.clone();
        for (k, v) in combo {
            point.set(k, v)?;
        }
        point.validate()?;
        let ws = Workspace::load(&point)?;
        let (report, runs) = cross_validate(&point, &ws)?;
        writeln!(
            table,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            point.lr, point.batch_size, point.embed_dim, point.epochs, report.mean.auc, report.std.auc, report.mean.aupr, report.std.aupr
        )
        .unwrap();
        let better = best.as_ref().is_none_or(|(i, _)| report.mean.auc > results[*i].1.mean.auc);
        if better {
            best = Some((results.len(), runs));
        }
        results.push((point, report));
    }
    rec.write("grid.tsv", table.as_bytes())?;
    let (index, runs) = best.ok_or_else(|| Error::Config("empty grid".into()))?;
    let (point, report) = &results[index];
    write_training(&mut rec, point, report, &runs)?;
    rec.finish()?;
    Ok((results, index))
}

/// A checkpointed model together with the graph it was trained on.
pub struct Trained {
    pub model: Model,
    pub graph: RelationalGraph,
    pub inputs: NodeInputs,
    /// The fold the checkpoint came from.
    pub fold: Option<Fold>,
    /// The configuration the graph was rebuilt with.
    pub config: RunConfig,
}

impl Trained {
    pub fn context(&self) -> Result<ExplainContext<'_>> {
        ExplainContext::new(&self.model, &self.inputs, &self.graph)
    }
}

/// Keys that fix the graph a checkpoint was trained on. They are taken
/// from the checkpoint, not from the current configuration.
const GRAPH_KEYS: &[&str] = &[
    "phi_cell",
    "phi_drug",
    "sim_scope",
    "task",
    "folds",
    "seed",
    "cv_seed",
    "embed_dim",
    "omics_hidden",
    "decode_similarity",
];

const PATH_KEYS: &[&str] = &["data_dir", "expr", "mutation", "cnv", "drugs", "responses"];

/// Restores a checkpoint and rebuilds its training graph from the data.
pub fn load_trained(cfg: &RunConfig, checkpoint: &Path) -> Result<Trained> {
    let ckpt = load_checkpoint(checkpoint)?;
    let mut graph_cfg = cfg.clone();
    for key in GRAPH_KEYS {
        match ckpt.echo.get(*key) {
            Some(v) if !v.is_empty() => graph_cfg.set(key, v)?,
            Some(_) if *key == "cv_seed" => graph_cfg.cv_seed = None,
            _ => {}
        }
    }
    let unset = PATH_KEYS.iter().all(|k| cfg.echo().get(*k).is_none_or(String::is_empty));
    if unset {
        for key in PATH_KEYS {
            if let Some(v) = ckpt.echo.get(*key).filter(|v| !v.is_empty()) {
                graph_cfg.set(key, v)?;
            }
        }
    }
    let ws = Workspace::load(&graph_cfg)?;
    let Prepared { graph, inputs, .. } = ws.prepared;
    let fold = match ckpt.echo.get("fold") {
        Some(f) => {
            let index: usize = f
                .parse()
                .map_err(|_| Error::format(checkpoint, 1, 1, format!("bad fold index `{f}`")))?;
            let cv = graph_cfg.cv_config(ckpt.model.config.clone());
            let mut folds = split_tasks(&graph, graph_cfg.task, cv.folds, cv.seed)?;
            if index >= folds.len() {
                return Err(Error::format(checkpoint, 1, 1, format!("fold {index} out of range")));
            }
            Some(folds.swap_remove(index))
        }
        None => None,
    };
    let graph = match &fold {
        Some(f) => fold_graph(&graph, f, graph_cfg.sim_scope)?,
        None => graph,
    };
    ckpt.model.check_inputs(&inputs, &graph)?;
    Ok(Trained {
        model: ckpt.model,
        graph,
        inputs,
        fold,
        config: graph_cfg,
    })
}

/// Ranks every unobserved (cell, drug) pair under both response relations.
pub fn predictions_tsv(trained: &Trained) -> Result<String> {
    let g = &trained.graph;
    let pairs: Vec<(usize, usize)> = (0..g.n_cells)
        .flat_map(|c| (g.n_cells..g.node_count()).map(move |d| (c, d)))
        .filter(|&(c, d)| !g.has_response(c, d))
        .collect();
    let rankings = predict_all(&trained.model, &trained.inputs, g, &pairs)?;
    let mut out = String::from("response\trank\tcell\tdrug\tscore\n");
    for ranking in &rankings {
        for (rank, p) in ranking.pairs.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}",
                ranking.relation,
                rank + 1,
                g.node_name(p.cell),
                g.node_name(p.drug),
                p.score
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn predict(cfg: &RunConfig, checkpoint: &Path) -> Result<PathBuf> {
    let mut rec = RunRecorder::start("predict", cfg)?;
    rec.hash_inputs([checkpoint])?;
    let trained = load_trained(cfg, checkpoint)?;
    let path = rec.write(PREDICTIONS_FILE, predictions_tsv(&trained)?.as_bytes())?;
    rec.finish()?;
    Ok(path)
}

/// Parses `CELL,REL,DRUG` by node names.
pub fn parse_triple(graph: &RelationalGraph, text: &str) -> Result<Triple> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [cell, rel, drug] = parts[..] else {
        return Err(Error::Invalid(format!("triple `{text}` is not CELL,REL,DRUG")));
    };
    let r: Relation = rel.parse()?;
    if !r.is_response() || r.is_inverse() {
        return Err(Error::Invalid(format!("`{rel}` is not sensitive or resistant")));
    }
    let node = |name: &str| graph.node_by_name(name).ok_or_else(|| Error::Invalid(format!("unknown node `{name}`")));
    let (s, o) = (node(cell)?, node(drug)?);
    if !graph.type_compatible(s, r, o) {
        return Err(Error::Invalid(format!("`{text}` is not a (cell, relation, drug) triple")));
    }
    Ok(Triple::positive(s, r, o))
}

fn file_stem(graph: &RelationalGraph, t: Triple, method: Method) -> String {
    let clean = |s: &str| s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect::<String>();
    format!("{}_{}_{}.{method}", clean(graph.node_name(t.s)), t.r, clean(graph.node_name(t.o)))
}

/// Explains one triple and writes its JSON and DOT exports.
pub fn explain(cfg: &RunConfig, checkpoint: &Path, triple: &str, method: Method) -> Result<(ExplanationSubgraph, ExplanationRecord)> {
    let mut rec = RunRecorder::start("explain", cfg)?;
    rec.hash_inputs([checkpoint])?;
    let trained = load_trained(cfg, checkpoint)?;
    let ctx = trained.context()?;
    let target = parse_triple(&trained.graph, triple)?;
    let mask = cfg.mask_config();
    let sub = match method {
        Method::Mask => explain_mask(&ctx, target, &mask)?,
        Method::Explaine => explaine_scores(&ctx, target, cfg.hops)?,
        Method::Deletion => crate::bench::explain(&ctx, Method::Deletion, target, &mask)?,
    };
    let stem = file_stem(&trained.graph, target, method);
    let record = ExplanationRecord::new(&trained.graph, &sub);
    let json = serde_json::to_string_pretty(&record)? + "\n";
    rec.write(&format!("explanations/{stem}.json"), json.as_bytes())?;
    rec.write(&format!("explanations/{stem}.dot"), to_dot(&trained.graph, &sub).as_bytes())?;
    rec.finish()?;
    Ok((sub, record))
}

/// Ground truths for every observed response (or the given triples) on the
/// full assembled graph.
pub fn ground_truth_command(cfg: &RunConfig, triples: &[String]) -> Result<usize> {
    let mut rec = RunRecorder::start("ground-truth", cfg)?;
    hash_data(&mut rec, cfg)?;
    let ws = Workspace::load(cfg)?;
    let graph = &ws.prepared.graph;
    let targets = if triples.is_empty() {
        graph.response_triples()
    } else {
        triples.iter().map(|t| parse_triple(graph, t)).collect::<Result<_>>()?
    };
    let gts = targets.iter().map(|&t| ground_truth(graph, t)).collect::<Result<Vec<_>>>()?;
    rec.write("ground_truth.jsonl", ground_truth_jsonl(graph, &gts)?.as_bytes())?;
    rec.finish()?;
    Ok(gts.len())
}

/// Held-out positives of the checkpoint's fold that the model predicts positive.
pub fn explanation_targets(trained: &Trained) -> Result<Vec<Triple>> {
    let fold = trained
        .fold
        .as_ref()
        .ok_or_else(|| Error::Invalid("checkpoint has no fold; cannot pick held-out targets".into()))?;
    let ctx = trained.context()?;
    let mut out = Vec::new();
    for &t in &fold.test {
        if ctx.score(t)? >= crate::explain::DECISION_THRESHOLD {
            out.push(t);
        }
    }
    Ok(out)
}

/// Scores both explainers against the ground truth on the fold's held-out
/// positives and writes the Table-3 style TSV plus every explanation.
pub fn eval_explain(cfg: &RunConfig, checkpoint: &Path, max_targets: Option<usize>) -> Result<BenchmarkTable> {
    let mut rec = RunRecorder::start("eval-explain", cfg)?;
    rec.hash_inputs([checkpoint])?;
    let trained = load_trained(cfg, checkpoint)?;
    let mut targets = explanation_targets(&trained)?;
    if let Some(n) = max_targets {
        targets.truncate(n);
    }
    let ctx = trained.context()?;
    let (table, explanations) = benchmark(&ctx, &[Method::Mask, Method::Explaine], &targets, &cfg.mask_config(), cfg.tg_global)?;
    let gts = targets.iter().map(|&t| ground_truth(&trained.graph, t)).collect::<Result<Vec<_>>>()?;
    rec.write("benchmark.tsv", table.to_tsv().as_bytes())?;
    rec.write("ground_truth.jsonl", ground_truth_jsonl(&trained.graph, &gts)?.as_bytes())?;
    let mut lines = String::new();
    for sub in explanations.iter().flatten() {
        lines.push_str(&serde_json::to_string(&ExplanationRecord::new(&trained.graph, sub))?);
        lines.push('\n');
    }
    rec.write("explanations.jsonl", lines.as_bytes())?;
    rec.finish()?;
    Ok(table)
}

/// Reads explanation records from a pretty JSON file or JSON lines.
pub fn read_explanations(path: &Path) -> Result<Vec<ExplanationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(one) = serde_json::from_str::<ExplanationRecord>(&text) {
        return Ok(vec![one]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::format(path, i + 1, e.column(), e.to_string())))
        .collect()
}

/// Merges ranked predictions with explanations into one table ordered like
/// the paper's case-study table: the top `top` pairs per response.
pub fn report_tsv(predictions: &Path, explanations: &[PathBuf], top: usize) -> Result<String> {
    let table = tsv::read_table(predictions)?;
    tsv::expect_header(predictions, &table, &["response", "rank", "cell", "drug", "score"])?;
    let mut evidence: HashMap<(String, String, String), Vec<String>> = HashMap::new();
    for path in explanations {
        for rec in read_explanations(path)? {
            let edges = rec
                .edges
                .iter()
                .map(|e| format!("{} {} {} ({:.3})", e.source, e.relation, e.target, e.weight))
                .collect::<Vec<_>>()
                .join("; ");
            evidence
                .entry((rec.relation, rec.cell, rec.drug))
                .or_default()
                .push(format!("{}: {edges}", rec.method));
        }
    }
    let mut by_response: BTreeMap<String, Vec<(usize, &[String])>> = BTreeMap::new();
    for (line, fields) in &table.rows {
        let rank = fields[1]
            .parse::<usize>()
            .map_err(|_| Error::format(predictions, *line, tsv::column_of(fields, 1), "rank is not an integer"))?;
        tsv::parse_f64(predictions, *line, fields, 4)?;
        by_response.entry(fields[0].clone()).or_default().push((rank, fields));
    }
    let mut out = String::from("Response\tRank\tCell line\tDrug\tScore\tExplanation\n");
    for (response, mut rows) in by_response.into_iter().rev() {
        rows.sort_by_key(|r| r.0);
        for (rank, f) in rows.into_iter().take(top) {
            let key = (response.clone(), f[2].clone(), f[3].clone());
            let why = evidence.get(&key).map_or(String::new(), |v| v.join(" | "));
            writeln!(out, "{response}\t{rank}\t{}\t{}\t{}\t{why}", f[2], f[3], f[4]).unwrap();
        }
    }
    Ok(out)
}

pub fn report(cfg: &RunConfig, predictions: &Path, explanations: &[PathBuf], top: usize) -> Result<PathBuf> {
    let mut rec = RunRecorder::start("report", cfg)?;
    rec.hash_inputs(std::iter::once(predictions).chain(explanations.iter().map(PathBuf::as_path)))?;
    let text = report_tsv(predictions, explanations, top)?;
    let path = rec.write("report.tsv", text.as_bytes())?;
    rec.finish()?;
    Ok(path)
}

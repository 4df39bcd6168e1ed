use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drexplainer::explain::Method;
use drexplainer::io::{Preset, RunConfig, SyntheticSpec};
use drexplainer::pipeline::{self, CHECKPOINT_FILE, PREDICTIONS_FILE};
use drexplainer::{Error, Result};

/// Drug response prediction and explanation on a directed cell-line/drug graph.
#[derive(Parser)]
#[command(name = "drexplainer", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Starting values before the config file: default, paper or desk.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding expr.tsv, mut.tsv, cnv.tsv, drugs.tsv and responses.tsv.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Any config key, as KEY=VALUE; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and assemble the input files into a graph.
    Ingest,
    /// Cross-validate on one task and save checkpoints.
    Train {
        #[arg(long)]
        task: Option<String>,
        /// Grid axis as KEY=V1,V2 over lr, batch_size, embed_dim or epochs; repeatable.
        #[arg(long)]
        grid: Vec<String>,
    },
    /// Rank all unobserved cell/drug pairs.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Explain one predicted response.
    Explain {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// CELL,REL,DRUG with REL sensitive or resistant.
        #[arg(long)]
        triple: String,
        #[arg(long, default_value = "mask")]
        method: Method,
        #[arg(long)]
        hops: Option<usize>,
    },
    /// Build similarity-derived ground-truth explanations.
    GroundTruth {
        /// Restrict to these CELL,REL,DRUG triples; repeatable.
        #[arg(long)]
        triple: Vec<String>,
    },
    /// Score both explainers against the ground truth on held-out responses.
    EvalExplain {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        max_targets: Option<usize>,
    },
    /// Generate a planted synthetic dataset.
    Synth {
        /// JSON synthetic spec; the built-in default when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Merge predictions and explanations into a ranked table.
    Report {
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Explanation JSON or JSON-lines files; repeatable.
        #[arg(long)]
        explanations: Vec<PathBuf>,
        /// Rows per response.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

fn config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path, common.preset)?,
        None => RunConfig::preset(common.preset.unwrap_or(Preset::Default)),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(dir) = &common.data_dir {
        cfg.data_dir = Some(dir.clone());
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn checkpoint(cfg: &RunConfig, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.out.join(CHECKPOINT_FILE))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = config(&cli.common)?;
    match cli.command {
        Command::Ingest => {
            let ws = pipeline::ingest(&cfg)?;
            let g = &ws.prepared.graph;
            println!("{} cells, {} drugs, {} edges", g.n_cells, g.node_count() - g.n_cells, g.edge_count());
        }
        Command::Train { task, grid } => {
            if let Some(t) = task {
                cfg.set("task", &t)?;
            }
            if grid.is_empty() {
                let report = pipeline::train(&cfg)?;
                print!("{}", report.to_tsv());
            } else {
                let (results, best) = pipeline::train_grid(&cfg, &grid)?;
                for (i, (p, r)) in results.iter().enumerate() {
                    let mark = if i == best { " *" } else { "" };
                    println!(
                        "lr={} batch_size={} embed_dim={} epochs={}  auc {:.4}  aupr {:.4}{mark}",
                        p.lr, p.batch_size, p.embed_dim, p.epochs, r.mean.auc, r.mean.aupr
                    );
                }
            }
        }
        Command::Predict { checkpoint: ck } => {
            let path = pipeline::predict(&cfg, &checkpoint(&cfg, &ck))?;
            println!("{}", path.display());
        }
        Command::Explain {
            checkpoint: ck,
            triple,
            method,
            hops,
        } => {
            if let Some(h) = hops {
                cfg.set("hops", &h.to_string())?;
                cfg.validate()?;
            }
            let ck = checkpoint(&cfg, &ck);
            let (_, record) = pipeline::explain(&cfg, &ck, &triple, method)?;
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            for e in &record.edges {
                println!("{}\t{}\t{}\t{:.6}", e.source, e.relation, e.target, e.weight);
            }
        }
        Command::GroundTruth { triple } => {
            let n = pipeline::ground_truth_command(&cfg, &triple)?;
            println!("{n} targets");
        }
        Command::EvalExplain { checkpoint: ck, max_targets } => {
            let table = pipeline::eval_explain(&cfg, &checkpoint(&cfg, &ck), max_targets)?;
            print!("{}", table.to_tsv());
        }
        Command::Synth { spec } => {
            let spec = match spec {
                Some(path) => read_spec(&path)?,
                None => SyntheticSpec::default(),
            };
            let ds = pipeline::synth(&cfg, &spec)?;
            println!("{} cells, {} drugs, {} responses", ds.cell_ids.len(), ds.drug_ids.len(), ds.ic50.len());
        }
        Command::Report {
            predictions,
            explanations,
            top,
        } => {
            let predictions = predictions.unwrap_or_else(|| cfg.out.join(PREDICTIONS_FILE));
            let path = pipeline::report(&cfg, &predictions, &explanations, top)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: SyntheticSpec =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.column(), e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("DREXPLAIN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("DREXPLAIN_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

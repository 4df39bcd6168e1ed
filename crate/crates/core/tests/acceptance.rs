//! End-to-end acceptance run: one line per criterion, non-zero exit if a
//! criterion outside the documented gaps fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use drexplainer::bench::{benchmark, evaluate_at_k, Denominator, GroundTruthSet};
use drexplainer::eval::{auc, aupr, run_cv, run_cv_with_models, FoldRun};
use drexplainer::explain::{
    computational_neighborhood, deletion_oracle, explain_mask, explaine_scores, to_json, ExplainContext,
    ExplanationSubgraph, MaskConfig, Method, RankedEdge,
};
use drexplainer::graph::{Relation, Task, Triple};
use drexplainer::io::{generate_synthetic, GroupSize, Preset, RunConfig, SyntheticSpec};
use drexplainer::model::{NodeInputs, Normalization};
use drexplainer::pipeline;
use drexplainer::smiles::parse_smiles;

/// Criteria that do not hold with the current explainer; see the README.
const KNOWN_GAPS: [usize; 2] = [6, 7];

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(Preset::Desk);
    cfg.seed = seed;
    cfg
}

/// Task A fold-0 model of one seed with its node inputs.
struct SeedRun {
    inputs: NodeInputs,
    run: FoldRun,
}

impl SeedRun {
    fn ctx(&self) -> ExplainContext<'_> {
        ExplainContext::new(&self.run.model, &self.inputs, &self.run.graph).unwrap()
    }

    /// Held-out positives the model predicts positive.
    fn targets(&self) -> Vec<Triple> {
        let ctx = self.ctx();
        self.run.fold.test.iter().copied().filter(|&t| ctx.score(t).unwrap() >= 0.5).collect()
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let ops = common::per_op_errors();
    let (worst_name, worst) = ops.iter().fold(("", 0.0f64), |acc, &(n, e)| if e > acc.1 { (n, e) } else { acc });
    let model = SEEDS.iter().map(|&s| common::full_model_error(s)).fold(0.0f64, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && model < 1e-3 && secs < 120.0,
        format!("{} ops, worst {worst_name} {worst:.1e}; full model {model:.1e}; {secs:.1}s", ops.len()),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let instances = common::metric_instances();
    for (s, l) in &instances {
        worst = worst.max((auc(s, l).unwrap() - common::auc_oracle(s, l)).abs());
        worst = worst.max((aupr(s, l).unwrap() - common::aupr_oracle(s, l)).abs());
    }
    // Ranking hit, miss, hit, miss, miss against 4 relevant edges.
    let t = Triple::positive(0, Relation::Sensitive, 4);
    let relevant = [
        Triple::positive(1, Relation::Sensitive, 4),
        Triple::positive(0, Relation::CellSim, 1),
        Triple::positive(0, Relation::Sensitive, 5),
        Triple::positive(4, Relation::DrugSim, 5),
    ];
    let miss = |k: usize| Triple::positive(2, Relation::Resistant, 3 + k);
    let ranked = [relevant[0], miss(0), relevant[1], miss(1), miss(2)];
    let gt = GroundTruthSet {
        target: t,
        entries: vec![drexplainer::bench::GroundTruthEntry { pattern: drexplainer::bench::Pattern::A, edges: relevant.to_vec() }],
    };
    let e = subgraph(t, &ranked);
    let hand = [(1, 1.0, 0.25, 0.4), (3, 2.0 / 3.0, 0.5, 4.0 / 7.0), (5, 0.4, 0.5, 4.0 / 9.0)];
    let exact = hand.iter().all(|&(k, p, r, f)| {
        let m = evaluate_at_k(&e, &gt, k, Denominator::PerTarget).unwrap().unwrap();
        m.precision == p && m.recall == r && m.f1 == f
    });
    outcome(
        worst <= 1e-12 && exact,
        format!("{} instances, max deviation {worst:.1e}; hand cases exact: {exact}", instances.len()),
    )
}

fn subgraph(target: Triple, ranked: &[Triple]) -> ExplanationSubgraph {
    let edges: Vec<RankedEdge> = ranked
        .iter()
        .enumerate()
        .map(|(i, &edge)| RankedEdge { edge, weight: 1.0 - i as f64 / 10.0, gradient: None })
        .collect();
    ExplanationSubgraph { target, method: Method::Mask, hops: 1, candidates: edges.clone(), edges, warnings: vec![] }
}

fn criterion_3() -> (Outcome, Vec<SeedRun>) {
    let mut runs = Vec::new();
    let mut main = String::new();
    let mut main_pass = false;
    let mut ordered = 0;
    let mut rows = Vec::new();
    for &seed in &SEEDS {
        let cfg = desk(seed);
        let (ds, _) = generate_synthetic(&SyntheticSpec::default(), seed).unwrap();
        let prep = ds.prepare(&cfg.model_config(), seed, cfg.phi_cell, cfg.phi_drug).unwrap();
        let cv = cfg.cv_config(prep.model.clone());
        let start = Instant::now();
        let (report, mut folds) = run_cv_with_models(&prep.graph, &prep.inputs, Task::A, &cv, BTreeMap::new()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        if seed == SEEDS[0] {
            main_pass = report.mean.auc >= 0.95 && report.mean.aupr >= 0.90 && secs < 600.0;
            main = format!("seed {seed}: AUC {:.4} AUPR {:.4} in {secs:.0}s", report.mean.auc, report.mean.aupr);
        }
        let mut by_task = vec![report.mean.auc];
        for task in [Task::B, Task::C, Task::D] {
            by_task.push(run_cv(&prep.graph, &prep.inputs, task, &cv).unwrap().mean.auc);
        }
        let (a, b, c, d) = (by_task[0], by_task[1], by_task[2], by_task[3]);
        if a >= c && c >= b && b >= d {
            ordered += 1;
        }
        rows.push(format!("{a:.3}/{b:.3}/{c:.3}/{d:.3}"));
        runs.push(SeedRun { inputs: prep.inputs, run: folds.swap_remove(0) });
    }
    let detail = format!("{main}; A>=C>=B>=D in {ordered}/5 seeds (A/B/C/D AUC {})", rows.join(" "));
    (outcome(main_pass && ordered >= 4, detail), runs)
}

fn criterion_4() -> Outcome {
    let (checked, mismatches) = common::ground_truth_mismatches();
    outcome(mismatches == 0, format!("{checked} targets on 200 random graphs, {mismatches} mismatches"))
}

fn criterion_5(runs: &[SeedRun]) -> Outcome {
    let (mut kept, mut total) = (0, 0);
    for sr in runs {
        let ctx = sr.ctx();
        let cfg = MaskConfig { seed: sr.run.model.seed, ..MaskConfig::default() };
        for t in sr.targets().into_iter().take(20) {
            let e = explain_mask(&ctx, t, &cfg).unwrap();
            let top: Vec<Triple> = e.top_k(cfg.k).iter().map(|c| c.edge).collect();
            let mut g = ctx.graph.clone();
            for edge in computational_neighborhood(ctx.graph, t, cfg.hops) {
                if !top.contains(&edge) {
                    g.remove_canonical(edge);
                }
            }
            total += 1;
            if ctx.score_on(&g, t).unwrap() >= 0.5 {
                kept += 1;
            }
        }
    }
    let rate = kept as f64 / total as f64;
    outcome(rate >= 0.9 && total > 0, format!("label kept for {kept}/{total} explained test triples ({:.1}%)", 100.0 * rate))
}

fn criterion_6(runs: &[SeedRun]) -> Outcome {
    // Small groups keep 1-hop neighborhoods under 12 edges.
    let spec = SyntheticSpec { cells_per_group: 3, drugs_per_group: GroupSize::Fixed(2), ..SyntheticSpec::default() };
    let (mut agree, mut cases) = (0, 0);
    for &seed in &SEEDS {
        let cfg = desk(seed);
        let (ds, _) = generate_synthetic(&spec, seed).unwrap();
        let prep = ds.prepare(&cfg.model_config(), seed, cfg.phi_cell, cfg.phi_drug).unwrap();
        let cv = cfg.cv_config(prep.model.clone());
        let (_, folds) = run_cv_with_models(&prep.graph, &prep.inputs, Task::A, &cv, BTreeMap::new()).unwrap();
        for run in &folds {
            let ctx = ExplainContext::new(&run.model, &prep.inputs, &run.graph).unwrap();
            for &t in &run.fold.test {
                let hood = computational_neighborhood(&run.graph, t, 1);
                if hood.is_empty() || hood.len() > 12 || ctx.score(t).unwrap() < 0.5 {
                    continue;
                }
                let oracle = deletion_oracle(&ctx, t, &hood).unwrap();
                let mask = explain_mask(&ctx, t, &MaskConfig { seed, ..MaskConfig::default() }).unwrap();
                cases += 1;
                agree += usize::from(oracle.candidates[0].edge == mask.candidates[0].edge);
            }
        }
    }
    let rate = agree as f64 / cases.max(1) as f64;

    // Gradient explainer against adjacency finite differences on trained models.
    let mut worst: f64 = 0.0;
    for sr in runs.iter().take(2) {
        let ctx = sr.ctx();
        for t in sr.targets().into_iter().take(5) {
            let e = explaine_scores(&ctx, t, 2).unwrap();
            let edges: Vec<Triple> = e.candidates.iter().map(|c| c.edge).collect();
            let analytic: Vec<f64> = e.candidates.iter().map(|c| c.gradient.unwrap()).collect();
            let h = 1e-5;
            let numeric: Vec<f64> = (0..edges.len())
                .map(|i| {
                    let mut w = vec![1.0; edges.len()];
                    w[i] = 1.0 + h;
                    let up = ctx.score_weighted(t, &edges, &w, Normalization::Fixed).unwrap();
                    w[i] = 1.0 - h;
                    let down = ctx.score_weighted(t, &edges, &w, Normalization::Fixed).unwrap();
                    (up - down) / (2.0 * h)
                })
                .collect();
            let a = ndarray::Array2::from_shape_vec((edges.len(), 1), analytic).unwrap();
            let n = ndarray::Array2::from_shape_vec((edges.len(), 1), numeric).unwrap();
            worst = worst.max(common::relative_error(&a, &n));
        }
    }
    outcome(
        rate >= 0.7 && cases > 0 && worst < 1e-3,
        format!("mask top-1 = oracle top-1 in {agree}/{cases} ({:.1}%); ExplaiNE vs finite differences {worst:.1e}", 100.0 * rate),
    )
}

fn criterion_7(runs: &[SeedRun]) -> Outcome {
    let mut wins = 0;
    let mut rows = Vec::new();
    let mut enough = true;
    for sr in runs {
        let ctx = sr.ctx();
        // The first 60 held-out positives; the criterion asks for at least 50.
        let targets: Vec<Triple> = sr.targets().into_iter().take(60).collect();
        let cfg = MaskConfig { seed: sr.run.model.seed, ..MaskConfig::default() };
        let (table, _) = benchmark(&ctx, &[Method::Mask, Method::Explaine], &targets, &cfg, false).unwrap();
        let (mask, grad) = (table.row(Method::Mask).unwrap(), table.row(Method::Explaine).unwrap());
        enough &= mask.evaluated >= 50;
        if mask.f1 >= grad.f1 {
            wins += 1;
        }
        rows.push(format!("{:.3}/{:.3} (n={})", mask.f1, grad.f1, mask.evaluated));
    }
    outcome(
        wins >= 4 && enough,
        format!("mask f1 >= ExplaiNE f1 in {wins}/5 seeds; mask/ExplaiNE f1@5: {}", rows.join(" ")),
    )
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    for (name, smiles, atoms, bonds) in common::SMILES_CORPUS {
        match parse_smiles(smiles) {
            Ok(m) if m.atoms.len() == atoms && m.bonds.len() == bonds => {}
            _ => bad.push(name.to_string()),
        }
    }
    for (smiles, class) in common::MALFORMED_CORPUS {
        match parse_smiles(smiles) {
            Err(e) if common::error_class(&e) == class => {}
            _ => bad.push(smiles.to_string()),
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} valid and {} malformed inputs; failures: {bad:?}", common::SMILES_CORPUS.len(), common::MALFORMED_CORPUS.len()),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Preset::Desk);
    cfg.seed = 11;
    cfg.epochs = 100;
    cfg.folds = 3;
    cfg.mask_iterations = 100;
    let once = |cfg: &mut RunConfig| -> (Vec<u8>, String, String) {
        cfg.out = dir.path().join("data");
        pipeline::synth(cfg, &SyntheticSpec::default()).unwrap();
        cfg.data_dir = Some(cfg.out.clone());
        cfg.out = dir.path().join("run");
        pipeline::train(cfg).unwrap();
        let report = std::fs::read(cfg.out.join("eval_report.json")).unwrap();
        let trained = pipeline::load_trained(cfg, &cfg.out.join(pipeline::CHECKPOINT_FILE)).unwrap();
        let targets = pipeline::explanation_targets(&trained).unwrap();
        let ctx = trained.context().unwrap();
        let json = |m| to_json(&trained.graph, &drexplainer::bench::explain(&ctx, m, targets[0], &cfg.mask_config()).unwrap()).unwrap();
        (report, json(Method::Mask), json(Method::Explaine))
    };
    let first = once(&mut cfg.clone());
    let second = once(&mut cfg.clone());
    let same = first == second;
    outcome(same, format!("EvalReport and explanation JSON byte-identical across reruns: {same}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        let status = if o.pass { "PASS" } else if KNOWN_GAPS.contains(&n) { "FAIL (known gap)" } else { "FAIL" };
        println!("criterion {n}: {status} - {}", o.detail);
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    let (c3, runs) = criterion_3();
    report(3, c3);
    report(4, criterion_4());
    report(5, criterion_5(&runs));
    report(6, criterion_6(&runs));
    report(7, criterion_7(&runs));
    report(8, criterion_8());
    report(9, criterion_9());
    println!("acceptance finished in {:.0}s", start.elapsed().as_secs_f64());
    let unexpected: Vec<usize> = results.iter().filter(|(n, o)| !o.pass && !KNOWN_GAPS.contains(n)).map(|(n, _)| *n).collect();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}

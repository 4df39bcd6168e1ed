//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use drexplainer::autograd::{Matrix, Tape, Var};
use drexplainer::bench::Pattern;
use drexplainer::encoders::{OmicsDims, OmicsProfile};
use drexplainer::graph::{Relation, RelationalGraph, Triple};
use drexplainer::model::{ModelConfig, NodeInputs};
use drexplainer::smiles::{parse_smiles, FeaturizerConfig, MolecularGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tiny_dims() -> OmicsDims {
    OmicsDims { expr: 3, mutation: 2, cnv: 2 }
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        omics: tiny_dims(),
        omics_hidden: 4,
        embed_dim: 4,
        ..ModelConfig::default()
    }
}

/// Three cells (0..3) and three drugs (3..6) with both response types and
/// both similarity relations present.
pub fn six_node_fixture() -> (RelationalGraph, NodeInputs) {
    let cells: Vec<String> = (0..3).map(|i| format!("c{i}")).collect();
    let drugs: Vec<String> = (0..3).map(|i| format!("d{i}")).collect();
    let mut g = RelationalGraph::empty(cells, drugs);
    for (r, s, o) in [
        (Relation::Sensitive, 0, 3),
        (Relation::Resistant, 1, 3),
        (Relation::Sensitive, 2, 4),
        (Relation::Sensitive, 1, 5),
        (Relation::CellSim, 0, 1),
        (Relation::CellSim, 1, 0),
        (Relation::DrugSim, 3, 4),
        (Relation::DrugSim, 4, 3),
    ] {
        g.insert_edge(r, s, o).unwrap();
    }
    g.rebuild_inverses();
    let profiles: Vec<OmicsProfile> = (0..3)
        .map(|i| OmicsProfile {
            expr: vec![0.3 * i as f64, 1.0 - 0.2 * i as f64, 0.5],
            mutation: vec![(i % 2) as f64, 1.0],
            cnv: vec![0.1 * i as f64 - 0.1, 0.4],
        })
        .collect();
    let cfg = FeaturizerConfig::default();
    let mols: Vec<MolecularGraph> = ["CCO", "c1ccccc1N", "CC(=O)O"]
        .iter()
        .map(|s| parse_smiles(s).unwrap().with_features(&cfg))
        .collect();
    (g, NodeInputs::new(tiny_dims(), &profiles, &mols).unwrap())
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Largest norm-wise relative error between the tape gradient and central
/// differences for `f`, reduced to a scalar through a fixed random projection.
pub fn op_gradcheck(inputs: &[Matrix], seed: u64, f: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let mut r = rng(seed);
    let probe = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|m| tape.constant(m.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.shape(out)
    };
    let weights = random_matrix(probe.0, probe.1, &mut r);
    let eval = |values: &[Matrix], grads: bool| -> (f64, Vec<Matrix>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values
            .iter()
            .map(|m| if grads { tape.param(m.clone()) } else { tape.constant(m.clone()) })
            .collect();
        let out = f(&mut tape, &vars);
        let w = tape.constant(weights.clone());
        let prod = tape.hadamard(out, w).unwrap();
        let loss = tape.sum_all(prod);
        let value = tape.scalar(loss);
        if !grads {
            return (value, Vec::new());
        }
        tape.backward(loss).unwrap();
        let g = vars
            .iter()
            .map(|&v| tape.grad(v).cloned().unwrap_or_else(|| Matrix::zeros(tape.shape(v))))
            .collect();
        (value, g)
    };
    let (_, analytic) = eval(inputs, true);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut values = inputs.to_vec();
    for k in 0..values.len() {
        let mut numeric = Matrix::zeros(values[k].dim());
        for idx in ndarray::indices(values[k].dim()) {
            let orig = values[k][idx];
            values[k][idx] = orig + h;
            let up = eval(&values, false).0;
            values[k][idx] = orig - h;
            let down = eval(&values, false).0;
            values[k][idx] = orig;
            numeric[idx] = (up - down) / (2.0 * h);
        }
        worst = worst.max(relative_error(&analytic[k], &numeric));
    }
    worst
}

pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    let norm = |m: &Matrix| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(&(a - b));
    let scale = norm(a) + norm(b);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Step-interpolated area: for every distinct threshold, from high to low,
/// recall gained times the precision of everything scoring at or above it.
pub fn aupr_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for t in thresholds {
        let above: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = above.iter().filter(|&&i| labels[i]).count() as f64;
        let recall = tp / pos;
        area += (recall - prev_recall) * tp / above.len() as f64;
        prev_recall = recall;
    }
    area
}

/// A random graph of at most `max_nodes` nodes with every relation present
/// at some density.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> RelationalGraph {
    let n_cells = rng.random_range(1..max_nodes);
    let n_drugs = rng.random_range(1..=(max_nodes - n_cells));
    let mut g = RelationalGraph::empty(
        (0..n_cells).map(|i| format!("c{i}")).collect(),
        (0..n_drugs).map(|i| format!("d{i}")).collect(),
    );
    let density: f64 = rng.random_range(0.1..0.8);
    for c in 0..n_cells {
        for d in n_cells..n_cells + n_drugs {
            let u: f64 = rng.random();
            if u < density / 2.0 {
                g.insert_edge(Relation::Sensitive, c, d).unwrap();
            } else if u < density {
                g.insert_edge(Relation::Resistant, c, d).unwrap();
            }
        }
    }
    for (range, r) in [(0..n_cells, Relation::CellSim), (n_cells..n_cells + n_drugs, Relation::DrugSim)] {
        for a in range.clone() {
            for b in range.clone().filter(|&b| b > a) {
                if rng.random::<f64>() < density {
                    g.insert_edge(r, a, b).unwrap();
                    g.insert_edge(r, b, a).unwrap();
                }
            }
        }
    }
    g.rebuild_inverses();
    g
}

/// Ground-truth edge groups found by scanning every node combination
/// against dense adjacency matrices.
pub fn ground_truth_oracle(g: &RelationalGraph, target: Triple) -> BTreeSet<(Pattern, Vec<Triple>)> {
    let (c1, r, d6) = (target.s, target.r, target.o);
    let resp = g.adjacency(r);
    let csim = g.adjacency(Relation::CellSim);
    let dsim = g.adjacency(Relation::DrugSim);
    let sim = |rel: Relation, a: usize, b: usize| Triple::positive(a.min(b), rel, a.max(b));
    let cells = 0..g.n_cells;
    let drugs = g.n_cells..g.node_count();
    let mut out = BTreeSet::new();
    for c2 in cells.clone() {
        for d4 in drugs.clone() {
            if csim[[c1, c2]] == 1.0 && dsim[[d6, d4]] == 1.0 && resp[[c2, d4]] == 1.0 {
                out.insert((
                    Pattern::A,
                    vec![Triple::positive(c2, r, d4), sim(Relation::CellSim, c1, c2), sim(Relation::DrugSim, d6, d4)],
                ));
            }
        }
        if csim[[c1, c2]] == 1.0 && resp[[c2, d6]] == 1.0 {
            out.insert((Pattern::B, vec![Triple::positive(c2, r, d6), sim(Relation::CellSim, c1, c2)]));
        }
    }
    for d4 in drugs {
        if dsim[[d6, d4]] == 1.0 && resp[[c1, d4]] == 1.0 {
            out.insert((Pattern::C, vec![Triple::positive(c1, r, d4), sim(Relation::DrugSim, d6, d4)]));
        }
    }
    out
}

/// Hand-counted heavy-atom and bond totals (ring closures count as bonds).
pub const SMILES_CORPUS: [(&str, &str, usize, usize); 10] = [
    ("methane", "C", 1, 0),
    ("ethanol", "CCO", 3, 2),
    ("acetic acid", "CC(=O)O", 4, 3),
    ("benzene", "c1ccccc1", 6, 6),
    ("pyridine", "c1ccncc1", 6, 6),
    ("naphthalene", "c1ccc2ccccc2c1", 10, 11),
    ("aspirin", "CC(=O)OC1=CC=CC=C1C(=O)O", 13, 13),
    ("caffeine", "CN1C=NC2=C1C(=O)N(C(=O)N2C)C", 14, 15),
    ("5-fluorouracil", "FC1=CNC(=O)NC1=O", 9, 9),
    ("etoposide fragment", "COc1cc(cc(OC)c1O)C1c2cc3OCOc3cc2CCC1", 24, 27),
];

/// Malformed inputs and the error class each must produce.
pub const MALFORMED_CORPUS: [(&str, &str); 6] = [
    ("C1CC", "UnclosedRing"),
    ("C(C", "UnbalancedParenthesis"),
    ("CXC", "UnknownElement"),
    ("CC=", "DanglingBond"),
    ("C()C", "EmptyBranch"),
    ("C[C", "MalformedBracket"),
];

pub fn error_class(e: &drexplainer::smiles::SmilesError) -> String {
    let debug = format!("{e:?}");
    debug.split(['(', ' ', '{']).next().unwrap().to_string()
}

/// Every differentiable tape op with its worst gradient error on random inputs.
pub fn per_op_errors() -> Vec<(&'static str, f64)> {
    use std::sync::Arc;
    let mut r = rng(11);
    let a = random_matrix(4, 3, &mut r);
    let b = random_matrix(3, 5, &mut r);
    let c = random_matrix(4, 3, &mut r);
    let row = random_matrix(1, 3, &mut r);
    let col = random_matrix(4, 1, &mut r);
    let pos_col = col.mapv(|v| v.abs() + 0.5);
    // Keep kinks out of reach of the finite-difference step.
    let away = a.mapv(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
    let probs = a.mapv(|v| 0.2 + 0.6 * (v + 1.0) / 2.0);
    let labels = Matrix::from_shape_fn((4, 3), |(i, j)| ((i + j) % 2) as f64);
    let idx: Arc<[usize]> = Arc::from(vec![2, 0, 2, 3, 1]);
    let src: Arc<[usize]> = Arc::from(vec![0, 1, 3, 3, 2, 0]);
    let dst: Arc<[usize]> = Arc::from(vec![1, 1, 0, 2, 4, 4]);
    let ew = random_matrix(6, 1, &mut r);

    let mut out: Vec<(&'static str, f64)> = Vec::new();
    let mut check = |name: &'static str, inputs: Vec<Matrix>, f: &dyn Fn(&mut Tape, &[Var]) -> Var| {
        out.push((name, op_gradcheck(&inputs, 5, f)));
    };
    check("matmul", vec![a.clone(), b.clone()], &|t, v| t.matmul(v[0], v[1]).unwrap());
    check("add", vec![a.clone(), c.clone()], &|t, v| t.add(v[0], v[1]).unwrap());
    check("sub", vec![a.clone(), c.clone()], &|t, v| t.sub(v[0], v[1]).unwrap());
    check("hadamard", vec![a.clone(), c.clone()], &|t, v| t.hadamard(v[0], v[1]).unwrap());
    check("add_row", vec![a.clone(), row.clone()], &|t, v| t.add_row(v[0], v[1]).unwrap());
    check("mul_col", vec![a.clone(), col.clone()], &|t, v| t.mul_col(v[0], v[1]).unwrap());
    check("div_col", vec![a.clone(), pos_col.clone()], &|t, v| t.div_col(v[0], v[1]).unwrap());
    check("concat_cols", vec![a.clone(), col.clone()], &|t, v| t.concat_cols(&[v[0], v[1]]).unwrap());
    check("concat_rows", vec![a.clone(), row.clone()], &|t, v| t.concat_rows(&[v[0], v[1]]).unwrap());
    check("row_gather", vec![a.clone()], &|t, v| t.row_gather(v[0], idx.clone()).unwrap());
    check("row_scatter_add", vec![b.t().to_owned()], &|t, v| t.row_scatter_add(v[0], idx.clone(), 6).unwrap());
    check("edge_aggregate", vec![a.clone(), ew.clone()], &|t, v| {
        t.edge_aggregate(v[0], src.clone(), dst.clone(), v[1], 5).unwrap()
    });
    check("scale", vec![a.clone()], &|t, v| t.scale(v[0], -1.7));
    check("add_scalar", vec![a.clone()], &|t, v| t.add_scalar(v[0], 0.3));
    check("sigmoid", vec![a.clone()], &|t, v| t.sigmoid(v[0]));
    check("tanh", vec![a.clone()], &|t, v| t.tanh(v[0]));
    check("relu", vec![away.clone()], &|t, v| t.relu(v[0]));
    check("max_scalar", vec![away.clone()], &|t, v| t.max_scalar(v[0], 0.0));
    check("mean_rows", vec![a.clone()], &|t, v| t.mean_rows(v[0]).unwrap());
    check("sum_cols", vec![a.clone()], &|t, v| t.sum_cols(v[0]));
    check("sum_all", vec![a.clone()], &|t, v| t.sum_all(v[0]));
    check("bce_loss", vec![probs.clone()], &|t, v| t.bce_loss(v[0], labels.clone()).unwrap());
    check("binary_entropy", vec![probs.clone()], &|t, v| t.binary_entropy(v[0]));
    out
}

/// Relative error of the full encode/propagate/decode/BCE gradient on the
/// six-node fixture, worst over all parameter tensors.
pub fn full_model_error(seed: u64) -> f64 {
    use drexplainer::model::{MessageGraph, Model};
    let (g, inputs) = six_node_fixture();
    let mg = MessageGraph::new(&g);
    let model = Model::new(tiny_config(), seed).unwrap();
    let triples = vec![
        Triple::positive(0, Relation::Sensitive, 3),
        Triple::positive(1, Relation::Resistant, 3),
        Triple::negative(0, Relation::Sensitive, 5),
        Triple::negative(2, Relation::Resistant, 3),
    ];
    let labels = Matrix::from_shape_fn((4, 1), |(i, _)| f64::from(u8::from(triples[i].label)));
    let loss_of = |store: &drexplainer::params::ParamStore, grads: bool| {
        let mut tape = Tape::new();
        let p = store.bind(&mut tape, grads);
        let x = model.encode(&mut tape, &p, &inputs).unwrap();
        let z = model.propagate(&mut tape, &p, x, &mg, None).unwrap();
        let s = model.score_triples(&mut tape, &p, z, &triples).unwrap();
        let loss = tape.bce_loss(s, labels.clone()).unwrap();
        let value = tape.scalar(loss);
        let g = grads.then(|| {
            tape.backward(loss).unwrap();
            p.vars().iter().map(|&v| tape.grad(v).unwrap().clone()).collect::<Vec<_>>()
        });
        (value, g)
    };
    let analytic = loss_of(&model.store, true).1.unwrap();
    let h = 1e-5;
    let mut store = model.store.clone();
    let ids: Vec<_> = store.ids().collect();
    let mut worst: f64 = 0.0;
    for (k, id) in ids.into_iter().enumerate() {
        let shape = store.get(id).dim();
        let mut numeric = Matrix::zeros(shape);
        for idx in ndarray::indices(shape) {
            let orig = store.get(id)[idx];
            store.get_mut(id)[idx] = orig + h;
            let up = loss_of(&store, false).0;
            store.get_mut(id)[idx] = orig - h;
            let down = loss_of(&store, false).0;
            store.get_mut(id)[idx] = orig;
            numeric[idx] = (up - down) / (2.0 * h);
        }
        worst = worst.max(relative_error(&analytic[k], &numeric));
    }
    worst
}

/// 1000 instances with heavy ties (scores on a coarse grid) and varied sizes.
pub fn metric_instances() -> Vec<(Vec<f64>, Vec<bool>)> {
    let mut r = rng(2024);
    let mut out = Vec::new();
    while out.len() < 1000 {
        let n = r.random_range(2..60);
        let grid = *[3u32, 10, 1000].get(out.len() % 3).unwrap();
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..grid)) / f64::from(grid)).collect();
        let labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
            out.push((scores, labels));
        }
    }
    out
}

/// Every forward response triple (observed or not) on 200 random graphs.
pub fn ground_truth_mismatches() -> (usize, usize) {
    let mut r = rng(77);
    let (mut checked, mut mismatches) = (0, 0);
    for _ in 0..200 {
        let g = random_graph(&mut r, 15);
        for c in 0..g.n_cells {
            for d in g.n_cells..g.node_count() {
                for rel in [Relation::Sensitive, Relation::Resistant] {
                    let t = Triple::positive(c, rel, d);
                    let got: BTreeSet<_> = drexplainer::bench::ground_truth(&g, t)
                        .unwrap()
                        .entries
                        .into_iter()
                        .map(|e| (e.pattern, e.edges))
                        .collect();
                    checked += 1;
                    if got != ground_truth_oracle(&g, t) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    (checked, mismatches)
}


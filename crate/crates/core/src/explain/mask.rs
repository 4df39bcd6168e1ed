use serde::{Deserialize, Serialize};

use super::{computational_neighborhood, rank, ExplainContext, ExplanationSubgraph, Method, RankedEdge, DECISION_THRESHOLD};
use crate::autograd::{Adam, Matrix, Tape};
use crate::graph::Triple;
use crate::model::Normalization;
use crate::rng;
use crate::{Error, Result};
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    pub iterations: usize,
    pub lr: f64,
    pub lambda_sparsity: f64,
    pub lambda_entropy: f64,
    /// Edges with mask probability above this are kept.
    pub tau: f64,
    /// Minimum explanation size when too few edges pass `tau`.
    pub k: usize,
    pub hops: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            lr: 0.01,
            lambda_sparsity: 0.005,
            lambda_entropy: 0.1,
            tau: 0.5,
            k: 5,
            hops: 1,
            init_std: 0.1,
            seed: 0,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("mask iterations must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("mask lr must be positive");
        }
        if !(self.lambda_sparsity >= 0.0 && self.lambda_entropy >= 0.0) {
            return bad("mask regularizers must be non-negative");
        }
        if !(0.0..1.0).contains(&self.tau) {
            return bad("tau_mask must lie in [0, 1)");
        }
        if self.k == 0 || self.hops == 0 {
            return bad("k and hops must be at least 1");
        }
        if !(self.init_std >= 0.0) {
            return bad("mask init std must be non-negative");
        }
        Ok(())
    }
}

/// Number of trailing iterations inspected for a rising loss.
const CONVERGENCE_WINDOW: usize = 50;

/// Learns a soft mask over the target's neighborhood that keeps the
/// prediction while staying sparse and near-binary.
pub fn explain_mask(ctx: &ExplainContext<'_>, target: Triple, cfg: &MaskConfig) -> Result<ExplanationSubgraph> {
    cfg.validate()?;
    ctx.check_target(target)?;
    let target = Triple::positive(target.s, target.r, target.o);
    let base = ctx.score(target)?;
    if base < DECISION_THRESHOLD {
        return Err(Error::Invalid(format!(
            "target ({}, {}, {}) is predicted negative (p = {base:.4}); only predicted links are explained",
            ctx.graph.node_name(target.s),
            target.r,
            ctx.graph.node_name(target.o)
        )));
    }
    let edges = computational_neighborhood(ctx.graph, target, cfg.hops);
    let mut warnings = Vec::new();
    if edges.is_empty() {
        warnings.push("empty neighborhood".to_string());
        return Ok(ExplanationSubgraph {
            target,
            method: Method::Mask,
            hops: cfg.hops,
            edges: Vec::new(),
            candidates: Vec::new(),
            warnings,
        });
    }
    let plan = ctx.plan(&edges)?;

    let name = format!("mask/{}/{}/{}", target.s, target.r.id(), target.o);
    let mut rng = rng::stream(rng::derive_seed(cfg.seed, &name), rng::MASK);
    let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut logits = Matrix::from_shape_simple_fn((edges.len(), 1), || normal.sample(&mut rng));

    let mut adam = Adam::new(cfg.lr);
    let mut losses = Vec::with_capacity(cfg.iterations);
    let mut best = (f64::INFINITY, logits.clone());
    for it in 0..cfg.iterations {
        let mut tape = Tape::new();
        let m = tape.param(logits.clone());
        let mask = tape.sigmoid(m);
        let (p, _) = ctx.weighted_score(&mut tape, &plan, mask, target, Normalization::Weighted)?;
        let fit = tape.bce_loss(p, Matrix::ones((1, 1)))?;
        let size = tape.sum_all(mask);
        let size = tape.scale(size, cfg.lambda_sparsity);
        let entropy = tape.binary_entropy(mask);
        let entropy = tape.scale(entropy, cfg.lambda_entropy);
        let loss = tape.add(fit, size)?;
        let loss = tape.add(loss, entropy)?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Numerical(format!("mask loss is {value} at iteration {it}")));
        }
        losses.push(value);
        if value < best.0 {
            best = (value, logits.clone());
        }
        if it + 1 == cfg.iterations {
            break;
        }
        tape.backward(loss)?;
        let grad = tape.grad(m).cloned().unwrap_or_else(|| Matrix::zeros(logits.dim()));
        adam.step(&mut [&mut logits], &[&grad])?;
    }

    let last = losses.len() - 1;
    if last >= CONVERGENCE_WINDOW && losses[last] > losses[last - CONVERGENCE_WINDOW] {
        warnings.push(format!(
            "mask loss rose over the final {CONVERGENCE_WINDOW} iterations ({:.6} -> {:.6}); using the best iterate",
            losses[last - CONVERGENCE_WINDOW],
            losses[last]
        ));
        logits = best.1;
    }

    let candidates = rank(
        edges
            .iter()
            .zip(logits.iter())
            .map(|(&edge, &m)| RankedEdge {
                edge,
                weight: 1.0 / (1.0 + (-m).exp()),
                gradient: None,
            })
            .collect(),
    );
    let selected = select(&candidates, cfg.tau, cfg.k);
    Ok(ExplanationSubgraph {
        target,
        method: Method::Mask,
        hops: cfg.hops,
        edges: selected,
        candidates,
        warnings,
    })
}

/// Edges above `tau`, or the top `k` when fewer than `k` pass.
pub(crate) fn select(ranked: &[RankedEdge], tau: f64, k: usize) -> Vec<RankedEdge> {
    let passing = ranked.iter().take_while(|e| e.weight > tau).count();
    let n = if passing < k { k.min(ranked.len()) } else { passing };
    ranked[..n].to_vec()
}

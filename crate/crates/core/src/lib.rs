//! Drug response prediction over a directed cell-line/drug network.
//!
//! The pipeline: SMILES and multi-omics inputs are encoded into node
//! features ([`encoders`]), assembled into a multi-relational graph
//! ([`graph`]), propagated through a two-layer directed relational GCN and
//! decoded with DistMult ([`model`]). Predictions are explained by a learned
//! edge mask or by adjacency gradients ([`explain`]) and the explanations are
//! scored against similarity-derived ground truths ([`bench`]).

pub mod autograd;
pub mod bench;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod explain;
pub mod graph;
pub mod io;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod smiles;

pub use error::{Error, Result};

//! File formats, dataset loading and the synthetic benchmark generator.

mod config;
mod dataset;
mod manifest;
mod synth;
pub mod tsv;

pub use config::{Preset, RunConfig, KEYS};
pub use dataset::{DataPaths, Dataset, Prepared};
pub use manifest::{sha256_file, InputDigest, Manifest, OutputLock, RunRecorder, LOCK_FILE, MANIFEST_FILE};
pub use synth::{default_rules, generate_synthetic, GroupSize, Planted, Rule, SyntheticSpec};

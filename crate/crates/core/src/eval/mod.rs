//! Prediction metrics and the cross-validation harness.

mod cv;
mod metrics;

pub use cv::{
    evaluate_fold, evaluation_triples, fold_graph, fold_seed, run_cv, run_cv_with_models, train_fold, CvConfig,
    EvalReport, FoldMetrics, FoldRun, Metrics, SimilarityScope,
};
pub use metrics::{aupr, auc, from_counts, threshold_metrics, ThresholdMetrics};

//! Experiment assembly: architectures, inputs, training, evaluation and metrics.

pub mod dataset;
pub mod metrics;
pub mod model;
pub mod report;
pub mod run;
pub mod train;

pub use dataset::{build_features, deep_features, traditional_features, FeatureTable, Labels};
pub use metrics::{
    average_ranks, interpret_correlation, kendall_tau, pearson, spearman, CorrelationStrength,
};
pub use model::{build_model, variant_specs, ModelGraph, ModelVariant};
pub use report::RunManifest;
pub use run::{run_evaluation, run_training, RunInputs, TrainOutcome};
pub use train::{
    dataset_loss, evaluate, predict, predict_many, train, EvalReport, LearningCurve, TrainConfig,
};

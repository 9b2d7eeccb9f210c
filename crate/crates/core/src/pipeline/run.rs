//! End-to-end train and evaluate runs, shared by the command-line tool and tests.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::features::{EmbeddingStore, Thumbnails};
use crate::scoring::{ScaleParams, ScoreParams};
use crate::splitter::Split;

use super::dataset::{build_features, Labels};
use super::model::{build_model, ModelGraph, ModelVariant};
use super::report::RunManifest;
use super::train::{evaluate, train, EvalReport, LearningCurve, TrainConfig};

pub const FINAL_ACTIVATION_NOTE: &str =
    "sigmoid (a softmax over a single output is constant, so it is not used)";

/// Everything a run reads besides its hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct RunInputs<'a> {
    pub corpus: &'a Corpus,
    pub split: &'a Split,
    pub embeddings: Option<&'a EmbeddingStore>,
    pub thumbnails: Option<&'a Thumbnails>,
    pub score_params: ScoreParams,
    /// Label scaling; fitted on the training side when absent.
    pub scale: Option<ScaleParams>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelGraph,
    pub curve: LearningCurve,
    /// `None` when the split has no test side.
    pub report: Option<EvalReport>,
    pub manifest: RunManifest,
}

fn push_inputs(m: &mut RunManifest, inputs: &RunInputs<'_>, scale: ScaleParams) {
    let split = inputs.split;
    m.push("vote_bound", inputs.score_params.vote_bound)
        .push("community_default", inputs.score_params.community_default)
        .push("scale_min", scale.min_score)
        .push("scale_max", scale.max_score)
        .push(
            "scale_source",
            if inputs.scale.is_some() {
                "configured"
            } else {
                "fitted_on_train"
            },
        )
        .push("split_seed", split.seed)
        .push("target_train_fraction", split.target_train_fraction)
        .push("achieved_train_fraction", split.achieved_train_fraction())
        .push("train_animes", split.train.len())
        .push("test_animes", split.test.len());
}

fn push_report(m: &mut RunManifest, report: &EvalReport) {
    m.push("test_samples", report.samples)
        .push("mse", report.mse);
    for (name, value) in [
        ("pearson", report.pearson),
        ("spearman", report.spearman),
        ("kendall_tau", report.kendall_tau),
    ] {
        match value {
            Some(r) => m.push(name, r),
            None => m.push(name, "undefined"),
        };
    }
}

/// Builds the variant from `config.seed`, trains it and evaluates it on the test side.
pub fn run_training(
    variant: ModelVariant,
    inputs: &RunInputs<'_>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let labels = Labels::from_corpus(
        inputs.corpus,
        inputs.split,
        &inputs.score_params,
        inputs.scale,
    )?;
    let features = build_features(
        variant,
        inputs.corpus,
        inputs.split,
        inputs.embeddings,
        inputs.thumbnails,
    )?;
    let mut model = build_model(variant, config.seed)?;
    let curve = train(&mut model, inputs.split, &features, &labels, config)?;
    let test: Vec<u64> = inputs.split.test.iter().copied().collect();
    let report = if test.is_empty() {
        None
    } else {
        Some(evaluate(&model, &test, &features, &labels)?)
    };

    let mut m = RunManifest::new();
    m.push("command", "train")
        .push("variant", variant)
        .push("seed", config.seed)
        .push("batch_size", config.batch_size)
        .push("epochs", config.epochs)
        .push("learning_rate", config.optimizer.learning_rate)
        .push("beta1", config.optimizer.beta1)
        .push("beta2", config.optimizer.beta2)
        .push("epsilon", config.optimizer.epsilon)
        .push("weight_decay", config.optimizer.weight_decay);
    push_inputs(&mut m, inputs, labels.scale());
    m.push("parameters", model.parameter_count())
        .push("final_activation", FINAL_ACTIVATION_NOTE)
        .push("architecture", model.descriptor().trim_end());
    if let (Some(tr), Some(te)) = (curve.train_loss.last(), curve.test_loss.last()) {
        m.push("final_train_loss", tr).push("final_test_loss", te);
    }
    if let Some(r) = &report {
        push_report(&mut m, r);
    }
    Ok(TrainOutcome {
        model,
        curve,
        report,
        manifest: m,
    })
}

/// Evaluates a trained model on the test side of `inputs.split`.
pub fn run_evaluation(
    model: &ModelGraph,
    inputs: &RunInputs<'_>,
) -> Result<(EvalReport, RunManifest)> {
    let variant = model.variant();
    let labels = Labels::from_corpus(
        inputs.corpus,
        inputs.split,
        &inputs.score_params,
        inputs.scale,
    )?;
    let features = build_features(
        variant,
        inputs.corpus,
        inputs.split,
        inputs.embeddings,
        inputs.thumbnails,
    )?;
    let test: Vec<u64> = inputs.split.test.iter().copied().collect();
    let report = evaluate(model, &test, &features, &labels)?;
    let mut m = RunManifest::new();
    m.push("command", "evaluate").push("variant", variant);
    push_inputs(&mut m, inputs, labels.scale());
    m.push("final_activation", FINAL_ACTIVATION_NOTE);
    push_report(&mut m, &report);
    Ok((report, m))
}

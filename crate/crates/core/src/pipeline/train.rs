//! Mini-batch training, prediction and evaluation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{mse_grad, mse_loss, AdamW, AdamWConfig, Mode, Tensor};
use crate::splitter::Split;

use super::dataset::{FeatureTable, Labels};
use super::metrics::{interpret_correlation, kendall_tau, pearson, spearman};
use super::model::ModelGraph;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BATCH_SIZE: usize = 16;

/// Rows per forward pass when only predictions are needed.
const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: 5,
            optimizer: AdamWConfig::default(),
        }
    }
}

/// Per-epoch losses, both measured in eval mode over the whole side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub train_loss: Vec<f64>,
    /// NaN when the split has no test side.
    pub test_loss: Vec<f64>,
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    /// `epoch,train_loss,test_loss` with 1-based epochs and 16 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_loss\n");
        for (i, (tr, te)) in self.train_loss.iter().zip(&self.test_loss).enumerate() {
            out.push_str(&format!("{},{:.15e},{:.15e}\n", i + 1, tr, te));
        }
        out
    }
}

fn check_coverage(ids: &[u64], features: &FeatureTable, labels: &Labels) -> Result<()> {
    for &id in ids {
        if !features.contains(id) {
            return Err(Error::MissingFeatures { anime_id: id });
        }
        labels.raw(id)?;
    }
    Ok(())
}

/// Eval-mode predictions (scaled space) for `ids`, in order.
pub fn predict_many(model: &ModelGraph, features: &FeatureTable, ids: &[u64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ids.len());
    for chunk in ids.chunks(EVAL_CHUNK) {
        let inputs = features.batch(chunk)?;
        out.extend(model.infer(&inputs)?.into_data());
    }
    Ok(out)
}

/// Eval-mode prediction for one anime; a sigmoid output in `(0, 1)`.
pub fn predict(model: &ModelGraph, features: &FeatureTable, anime_id: u64) -> Result<f64> {
    Ok(predict_many(model, features, &[anime_id])?[0])
}

/// Eval-mode MSE in scaled space; NaN for an empty set.
pub fn dataset_loss(
    model: &ModelGraph,
    features: &FeatureTable,
    labels: &Labels,
    ids: &[u64],
) -> Result<f64> {
    if ids.is_empty() {
        return Ok(f64::NAN);
    }
    let pred = Tensor::matrix(ids.len(), 1, predict_many(model, features, ids)?)?;
    mse_loss(&pred, &labels.target(ids)?)
}

/// Trains in place with AdamW on MSE. Each epoch reshuffles the training side with a
/// generator seeded from `config.seed` (which also drives dropout) and keeps the last
/// partial batch. Zero epochs leave the parameters untouched.
pub fn train(
    model: &mut ModelGraph,
    split: &Split,
    features: &FeatureTable,
    labels: &Labels,
    config: &TrainConfig,
) -> Result<LearningCurve> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let mut order: Vec<u64> = split.train.iter().copied().collect();
    let test: Vec<u64> = split.test.iter().copied().collect();
    check_coverage(&order, features, labels)?;
    check_coverage(&test, features, labels)?;
    let train_ids = order.clone();

    // Stream 0 of the same seed is used for initialization by `build_model`.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut optimizer = AdamW::new(config.optimizer);
    let mut curve = LearningCurve::default();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let inputs = features.batch(batch)?;
            let target = labels.target(batch)?;
            model.zero_grad();
            let pred = model.forward(&inputs, Mode::Train, &mut rng)?;
            let grad = mse_grad(&pred, &target)?;
            model.backward(&grad)?;
            optimizer.step(&mut model.param_slots())?;
        }
        curve
            .train_loss
            .push(dataset_loss(model, features, labels, &train_ids)?);
        curve
            .test_loss
            .push(dataset_loss(model, features, labels, &test)?);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    /// MSE of scaled predictions against scaled labels.
    pub mse: f64,
    /// `None` when the coefficient is undefined, e.g. for a constant predictor.
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub kendall_tau: Option<f64>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples={}", self.samples)?;
        writeln!(f, "mse={}", self.mse)?;
        for (name, value) in [
            ("pearson", self.pearson),
            ("spearman", self.spearman),
            ("kendall_tau", self.kendall_tau),
        ] {
            match value {
                Some(r) => writeln!(
                    f,
                    "{name}={r}\n{name}_strength={}",
                    interpret_correlation(r)
                )?,
                None => writeln!(f, "{name}=undefined")?,
            }
        }
        Ok(())
    }
}

/// Scores the model on `ids`. Correlations compare unscaled predictions with raw
/// golden scores.
pub fn evaluate(
    model: &ModelGraph,
    ids: &[u64],
    features: &FeatureTable,
    labels: &Labels,
) -> Result<EvalReport> {
    if ids.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    check_coverage(ids, features, labels)?;
    let pred = predict_many(model, features, ids)?;
    let mse = mse_loss(
        &Tensor::matrix(ids.len(), 1, pred.clone())?,
        &labels.target(ids)?,
    )?;
    let scale = labels.scale();
    let pred_raw: Vec<f64> = pred.iter().map(|&p| scale.unscale(p)).collect();
    let truth = ids
        .iter()
        .map(|&id| labels.raw(id))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        samples: ids.len(),
        mse,
        pearson: pearson(&pred_raw, &truth).ok(),
        spearman: spearman(&pred_raw, &truth).ok(),
        kendall_tau: kendall_tau(&pred_raw, &truth).ok(),
    })
}

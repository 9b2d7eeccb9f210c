//! Anime popularity regression: golden labels from vote statistics, leakage-free
//! splits, multimodal feature assembly, from-scratch MLP training and evaluation.

pub mod corpus;
pub mod error;
pub mod features;
pub mod nn;
pub mod pipeline;
pub mod scoring;
pub mod splitter;
pub mod synthetic;

pub use corpus::{clean, compute_stats, parse_corpus, Anime, Character, CleanConfig, Corpus};
pub use error::{Error, ErrorCategory, Result};
pub use features::{EmbeddingKind, EmbeddingRecord, EmbeddingStore, Thumbnails};
pub use pipeline::{build_model, EvalReport, LearningCurve, ModelGraph, ModelVariant, TrainConfig};
pub use scoring::{fit_scale, weighted_score, ScaleParams, ScoreParams};
pub use splitter::{build_clusters, split, verify_no_leakage, Split};

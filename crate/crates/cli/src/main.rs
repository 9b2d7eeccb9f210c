//! `anipop`: ingest, inspect, split, train and evaluate from the command line.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anipop_core::corpus::{
    clean, compute_stats, parse_corpus, CleanConfig, DEFAULT_MIN_SYNOPSIS_WORDS,
};
use anipop_core::features::{EmbeddingStore, Thumbnails};
use anipop_core::nn::{AdamWConfig, Checkpoint};
use anipop_core::pipeline::{
    run_evaluation, run_training, ModelGraph, ModelVariant, RunInputs, RunManifest, TrainConfig,
};
use anipop_core::scoring::{ScaleParams, ScoreParams, DEFAULT_COMMUNITY_SCORE, DEFAULT_VOTE_BOUND};
use anipop_core::splitter::{
    build_clusters, load_manifest, save_manifest, split, verify_no_leakage, DEFAULT_TRAIN_FRACTION,
};
use anipop_core::{Error, ErrorCategory, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "anipop",
    version,
    about = "Anime popularity regression pipeline"
)]
struct Cli {
    /// key = value file supplying defaults for any flag below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for splitting, initialization, shuffling and dropout [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for generated files [default: .]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and clean a raw corpus, writing the cleaned corpus
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Cleaned corpus path [default: <out-dir>/corpus.clean.jsonl]
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        min_synopsis_words: Option<usize>,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Print word-count and score statistics of a corpus
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Cluster animes by shared characters and split the clusters into train and test
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// Target fraction of animes on the training side [default: 0.815]
        #[arg(long)]
        fraction: Option<f64>,
        /// Split manifest path [default: <out-dir>/split.jsonl]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train one model variant and write its checkpoint, learning curve and manifest
    Train {
        /// One of full, synopsis, char-desc, portrait, traditional
        #[arg(long)]
        variant: ModelVariant,
        #[command(flatten)]
        data: DataArgs,
        /// [default: 30 for traditional, 5 otherwise]
        #[arg(long)]
        epochs: Option<usize>,
        /// [default: 16]
        #[arg(long)]
        batch_size: Option<usize>,
        /// AdamW step size [default: 0.05]
        #[arg(long)]
        learning_rate: Option<f64>,
        /// [default: 0.9]
        #[arg(long)]
        beta1: Option<f64>,
        /// [default: 0.999]
        #[arg(long)]
        beta2: Option<f64>,
        /// [default: 1e-8]
        #[arg(long)]
        epsilon: Option<f64>,
        /// [default: 0.01]
        #[arg(long)]
        weight_decay: Option<f64>,
    },
    /// Evaluate a checkpoint on the test side of a split
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Check an embedding file and report per-kind counts
    ValidateEmbeddings { path: PathBuf },
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Vote count at which a title's own mean and the community default weigh equally [default: 50]
    #[arg(long)]
    vote_bound: Option<u32>,
    /// Community default score [default: 6.605]
    #[arg(long)]
    community_default: Option<f64>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Cleaned corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Split manifest written by `split`
    #[arg(long)]
    split: PathBuf,
    /// Embedding file; required by every variant except `traditional`
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Thumbnail file for the `traditional` variant; missing portraits contribute zeros
    #[arg(long)]
    thumbnails: Option<PathBuf>,
    /// Fixed label scale minimum; by default the scale is fitted on the training side
    #[arg(long, requires = "scale_max")]
    scale_min: Option<f64>,
    #[arg(long, requires = "scale_min")]
    scale_max: Option<f64>,
    #[command(flatten)]
    score: ScoreArgs,
}

struct Context {
    file: ConfigFile,
    seed: u64,
    out_dir: PathBuf,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let seed = file.resolve(cli.seed, "seed", DEFAULT_SEED)?;
        let out_dir = file.resolve(cli.out_dir.clone(), "out_dir", PathBuf::from("."))?;
        fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        Ok(Self {
            file,
            seed,
            out_dir,
        })
    }

    fn score_params(&self, args: &ScoreArgs) -> Result<ScoreParams> {
        ScoreParams::new(
            self.file
                .resolve(args.vote_bound, "vote_bound", DEFAULT_VOTE_BOUND)?,
            self.file.resolve(
                args.community_default,
                "community_default",
                DEFAULT_COMMUNITY_SCORE,
            )?,
        )
    }

    fn scale(&self, args: &DataArgs) -> Result<Option<ScaleParams>> {
        let min = self.file.resolve_opt(args.scale_min, "scale_min")?;
        let max = self.file.resolve_opt(args.scale_max, "scale_max")?;
        match (min, max) {
            (None, None) => Ok(None),
            (Some(lo), Some(hi)) => ScaleParams::new(lo, hi).map(Some),
            _ => Err(Error::Config(
                "scale_min and scale_max must be given together".into(),
            )),
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loaded inputs shared by `train` and `evaluate`.
struct LoadedData {
    corpus: anipop_core::Corpus,
    split: anipop_core::Split,
    embeddings: Option<EmbeddingStore>,
    thumbnails: Option<Thumbnails>,
    score_params: ScoreParams,
    scale: Option<ScaleParams>,
}

/// Loads a split manifest and rejects it if the two sides share a character, which a
/// hand-edited manifest or one written for another corpus could do.
fn checked_split(path: &Path, corpus: &anipop_core::Corpus) -> Result<anipop_core::Split> {
    let split = load_manifest(path)?.split;
    let characters = verify_no_leakage(&split, corpus);
    if characters.is_empty() {
        Ok(split)
    } else {
        Err(Error::LeakySplit { characters })
    }
}

impl LoadedData {
    fn load(ctx: &Context, args: &DataArgs) -> Result<Self> {
        let corpus = parse_corpus(&args.corpus)?;
        Ok(Self {
            split: checked_split(&args.split, &corpus)?,
            corpus,
            embeddings: args
                .embeddings
                .as_deref()
                .map(EmbeddingStore::load)
                .transpose()?,
            thumbnails: args
                .thumbnails
                .as_deref()
                .map(Thumbnails::load)
                .transpose()?,
            score_params: ctx.score_params(&args.score)?,
            scale: ctx.scale(args)?,
        })
    }

    fn inputs(&self) -> RunInputs<'_> {
        RunInputs {
            corpus: &self.corpus,
            split: &self.split,
            embeddings: self.embeddings.as_ref(),
            thumbnails: self.thumbnails.as_ref(),
            score_params: self.score_params,
            scale: self.scale,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli)?;
    match cli.command {
        Command::Ingest {
            corpus,
            output,
            min_synopsis_words,
            score,
        } => {
            let config = CleanConfig {
                min_synopsis_words: ctx.file.resolve(
                    min_synopsis_words,
                    "min_synopsis_words",
                    DEFAULT_MIN_SYNOPSIS_WORDS,
                )?,
                score_params: ctx.score_params(&score)?,
                ..CleanConfig::default()
            };
            let raw = parse_corpus(&corpus)?;
            let (cleaned, report) = clean(&raw, &config);
            let output = output.unwrap_or_else(|| ctx.out_dir.join("corpus.clean.jsonl"));
            cleaned.write(&output)?;
            let mut m = RunManifest::new();
            m.push("command", "ingest")
                .push("input", corpus.display())
                .push("output", output.display())
                .push("min_synopsis_words", config.min_synopsis_words)
                .push("vote_bound", config.score_params.vote_bound)
                .push("community_default", config.score_params.community_default)
                .push("animes_in", raw.len())
                .push("animes_out", cleaned.len())
                .push("characters_in", raw.characters().len())
                .push("characters_out", cleaned.characters().len());
            write_file(&ctx.out_dir.join("ingest.manifest.txt"), m.to_string())?;
            print!("{report}");
            println!("kept {} of {} animes", cleaned.len(), raw.len());
        }
        Command::Stats { corpus } => {
            print!("{}", compute_stats(&parse_corpus(&corpus)?));
        }
        Command::Split {
            corpus,
            fraction,
            output,
        } => {
            let fraction = ctx
                .file
                .resolve(fraction, "fraction", DEFAULT_TRAIN_FRACTION)?;
            let corpus = parse_corpus(&corpus)?;
            let clusters = build_clusters(&corpus);
            let s = split(&clusters, fraction, ctx.seed)?;
            let leaks = verify_no_leakage(&s, &corpus);
            assert!(
                leaks.is_empty(),
                "cluster split leaked characters {leaks:?}"
            );
            let output = output.unwrap_or_else(|| ctx.out_dir.join("split.jsonl"));
            save_manifest(&output, &s, &clusters)?;
            println!(
                "clusters={} train={} test={} achieved_train_fraction={}",
                clusters.cluster_count(),
                s.train.len(),
                s.test.len(),
                s.achieved_train_fraction()
            );
        }
        Command::Train {
            variant,
            data,
            epochs,
            batch_size,
            learning_rate,
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } => {
            let d = AdamWConfig::default();
            let f = &ctx.file;
            let config = TrainConfig {
                seed: ctx.seed,
                epochs: f.resolve(epochs, "epochs", variant.default_epochs())?,
                batch_size: f.resolve(
                    batch_size,
                    "batch_size",
                    TrainConfig::default().batch_size,
                )?,
                optimizer: AdamWConfig {
                    learning_rate: f.resolve(learning_rate, "learning_rate", d.learning_rate)?,
                    beta1: f.resolve(beta1, "beta1", d.beta1)?,
                    beta2: f.resolve(beta2, "beta2", d.beta2)?,
                    epsilon: f.resolve(epsilon, "epsilon", d.epsilon)?,
                    weight_decay: f.resolve(weight_decay, "weight_decay", d.weight_decay)?,
                },
            };
            if config.epochs == 0 || config.batch_size == 0 {
                return Err(Error::Config(
                    "epochs and batch_size must be at least 1".into(),
                ));
            }
            let loaded = LoadedData::load(&ctx, &data)?;
            let outcome = run_training(variant, &loaded.inputs(), &config)?;
            let stem = ctx.out_dir.join(variant.name());
            outcome
                .model
                .to_checkpoint()
                .save(&stem.with_extension("ckpt"))?;
            write_file(&stem.with_extension("curve.csv"), outcome.curve.to_csv())?;
            write_file(
                &stem.with_extension("manifest.txt"),
                outcome.manifest.to_string(),
            )?;
            if let Some(report) = &outcome.report {
                write_file(&stem.with_extension("eval.txt"), report.to_string())?;
            }
            print!("{}", outcome.manifest);
        }
        Command::Evaluate { checkpoint, data } => {
            let model = ModelGraph::from_checkpoint(&Checkpoint::load(&checkpoint)?)?;
            let loaded = LoadedData::load(&ctx, &data)?;
            let (report, manifest) = run_evaluation(&model, &loaded.inputs())?;
            let stem = ctx.out_dir.join(model.variant().name());
            write_file(&stem.with_extension("eval.txt"), report.to_string())?;
            write_file(
                &stem.with_extension("eval.manifest.txt"),
                manifest.to_string(),
            )?;
            print!("{report}");
        }
        Command::ValidateEmbeddings { path } => {
            print!("{}", EmbeddingStore::load(&path)?.report());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.class_name());
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => 2,
                ErrorCategory::Data => 3,
                ErrorCategory::Numeric => 4,
            })
        }
    }
}

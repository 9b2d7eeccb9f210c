use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad invocation or configuration.
    Usage,
    /// Malformed, inconsistent or missing input data.
    Data,
    /// A numeric computation could not produce a defined result.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("anime {anime_id} references undefined character {character_id}")]
    DanglingReference { anime_id: u64, character_id: u64 },

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },

    #[error("score is undefined without votes")]
    UndefinedScore,

    #[error("degenerate scale: all scores equal {value}")]
    DegenerateScale { value: f64 },

    #[error("infeasible split: {message}")]
    InfeasibleSplit { message: String },

    #[error("split leaks {} shared characters across sides, e.g. character {}", .characters.len(), .characters[0])]
    LeakySplit { characters: Vec<u64> },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("truncated file: {context}")]
    Truncated { context: String },

    #[error("dimension mismatch for {kind}: expected {expected}, found {found}")]
    DimensionMismatch {
        kind: String,
        expected: usize,
        found: usize,
    },

    #[error("{0} trailing bytes after last record")]
    TrailingData(usize),

    #[error("unknown embedding kind tag {0}")]
    UnknownKind(u8),

    #[error("empty vocabulary: no terms in any document")]
    EmptyVocabulary,

    #[error("missing embedding for anime {anime_id}, kind {kind}")]
    MissingEmbedding { anime_id: u64, kind: String },

    #[error("missing features for anime {anime_id}")]
    MissingFeatures { anime_id: u64 },

    #[error("anime {anime_id} has no golden score")]
    MissingLabel { anime_id: u64 },

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },

    #[error("backward called without a recorded forward pass")]
    BackwardBeforeForward,

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("checkpoint spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("empty test set")]
    EmptyTestSet,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable class name printed by the CLI on failure.
    pub fn class_name(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::DanglingReference { .. } => "DanglingReference",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::UndefinedScore => "UndefinedScore",
            Error::DegenerateScale { .. } => "DegenerateScale",
            Error::InfeasibleSplit { .. } => "InfeasibleSplit",
            Error::LeakySplit { .. } => "LeakySplit",
            Error::BadMagic { .. } => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::Truncated { .. } => "Truncated",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TrailingData(_) => "TrailingData",
            Error::UnknownKind(_) => "UnknownKind",
            Error::EmptyVocabulary => "EmptyVocabulary",
            Error::MissingEmbedding { .. } => "MissingEmbedding",
            Error::MissingFeatures { .. } => "MissingFeatures",
            Error::MissingLabel { .. } => "MissingLabel",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::BackwardBeforeForward => "BackwardBeforeForward",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::SpecMismatch(_) => "SpecMismatch",
            Error::UndefinedCorrelation(_) => "UndefinedCorrelation",
            Error::EmptyTestSet => "EmptyTestSet",
            Error::Config(_) => "ConfigError",
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Usage,
            Error::UndefinedScore
            | Error::DegenerateScale { .. }
            | Error::NonFinite { .. }
            | Error::UndefinedCorrelation(_) => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}

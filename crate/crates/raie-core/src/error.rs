//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KmeansError {
    #[error("no input vectors")]
    EmptyInput,
    #[error("k={k} exceeds the number of distinct vectors ({distinct})")]
    KTooLarge { k: usize, distinct: usize },
    #[error("vector dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum EditError {
    #[error("region set has no regions")]
    EmptyRegionSet,
    #[error("no members to compute a radius from")]
    EmptyMembers,
    #[error("probabilities do not form a distribution (sum={sum})")]
    InvalidDistribution { sum: f64 },
    #[error("EMA center update is degenerate (norm {norm:.3e} below 1e-9)")]
    DegenerateCenter { norm: f64 },
    #[error("vector dimension {got} does not match region dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown region id {0}")]
    UnknownRegion(u64),
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
    #[error("invalid edit config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("snapshot truncated or corrupt: {0}")]
    Corrupt(&'static str),
    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("dimension mismatch inside snapshot (expected {expected}, got {got})")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("history is empty")]
    EmptyHistory,
    #[error("window is empty")]
    EmptyWindow,
    #[error("hidden state collapsed to zero norm")]
    ZeroHidden,
    #[error("item index {index} out of range for vocabulary of size {vocab}")]
    ItemOutOfRange { index: usize, vocab: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("backbone is already frozen")]
    AlreadyFrozen,
    #[error("backbone must be frozen before adapter training")]
    NotFrozen,
    #[error("frozen backbone parameters changed during adapter training")]
    FrozenViolation,
    #[error("region has no training examples")]
    EmptyRegionData,
    #[error("k={k} exceeds vocabulary size {vocab}")]
    KExceedsVocab { k: usize, vocab: usize },
    #[error("invalid vocabulary file: {0}")]
    InvalidVocab(String),
    #[error("text does not match the prompt template")]
    PromptMismatch,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("cannot read input: {0}")]
    UnreadableInput(String),
    #[error("unknown input format `{0}`")]
    UnknownFormat(String),
    #[error("no events")]
    EmptyEvents,
    #[error("invalid quantiles q_s={q_s}, q_f={q_f}")]
    InvalidQuantiles { q_s: f64, q_f: f64 },
    #[error("malformed example line {line}: {reason}")]
    MalformedExample { line: usize, reason: String },
    #[error("cannot write output: {0}")]
    UnwritableOutput(String),
}

/// Drift-simulator errors.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("assignment/label length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed label file line {line}: {reason}")]
    MalformedLabel { line: usize, reason: String },
}

/// Orchestrator errors: mostly component errors surfaced as-is, plus
/// the few failure modes the experiment layer itself introduces.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no setup-phase examples")]
    NoSetupExamples,
    #[error("forgetting report needs a pre-finetune baseline")]
    MissingBaseline,
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("unknown arm `{0}`")]
    UnknownArm(String),
}

/// Key-value configuration file errors.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Unreadable(String),
    #[error("config line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("duplicate config key `{0}`")]
    DuplicateKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
}

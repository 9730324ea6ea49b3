//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the differentiable tensor engine.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("tensor shape {shape:?} does not match data length {len}")]
    BadTensor { shape: Vec<usize>, len: usize },

    #[error("{kernel}: incompatible shapes: {detail}")]
    ShapeMismatch { kernel: &'static str, detail: String },

    #[error("unknown kernel tag `{0}`")]
    UnknownKernel(String),

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("backward called twice without resetting gradients")]
    BackwardRepeated,

    #[error("variable does not belong to this tape")]
    ForeignVar,

    #[error("non-finite value encountered {0}")]
    NonFinite(String),

    #[error("optimizer state out of sync with `{name}`: {detail}")]
    StateShape { name: String, detail: String },

    #[error("no parameter named `{0}`")]
    UnknownParam(String),
}

/// Errors raised while loading examples, parses, or embeddings.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: malformed example record: {detail}")]
    MalformedRecord { path: String, line: usize, detail: String },

    #[error("{path}:{line}: unknown label `{label}` (expected positive, neutral or negative)")]
    UnknownLabel { path: String, line: usize, label: String },

    #[error("{path}:{line}: aspect span {start}+{len} falls outside sentence of {tokens} tokens")]
    SpanOutOfRange { path: String, line: usize, start: usize, len: usize, tokens: usize },

    #[error("{path}: sentence block {block}: {detail}")]
    ConlluBlock { path: String, block: usize, detail: String },

    #[error("{path}: example {index} has {tokens} tokens but parse block {index} has {nodes} nodes")]
    ParseAlignment { path: String, index: usize, tokens: usize, nodes: usize },

    #[error("{path}: example count {examples} does not match parse block count {blocks}")]
    ParseCount { path: String, examples: usize, blocks: usize },

    #[error("{path}:{line}: embedding row for `{token}` has {got} values, expected {expected}")]
    EmbeddingDim { path: String, line: usize, token: String, got: usize, expected: usize },

    #[error("{path}:{line}: unreadable float `{value}`")]
    BadFloat { path: String, line: usize, value: String },

    #[error("{path}: file is empty")]
    EmptyFile { path: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised by dependency-graph statistics and adjacency construction.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot build dependency statistics from an empty corpus")]
    EmptyCorpus,

    #[error("relation label `{0}` collides with a reserved serialization key")]
    ReservedLabel(String),

    #[error("malformed statistics table: {0}")]
    BadTable(String),
}

/// Errors raised while assembling or running the model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("head count {heads} does not divide model width {d_model}")]
    HeadSplit { heads: usize, d_model: usize },

    #[error("positional encoding requires an even width, got {0}")]
    OddWidth(usize),

    #[error("aspect span {start}+{len} falls outside sentence of {tokens} tokens")]
    BadSpan { start: usize, len: usize, tokens: usize },

    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Errors raised by training, evaluation, and checkpointing.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("label index {0} out of range (expected 0..3)")]
    LabelRange(usize),

    #[error("metrics require at least one prediction")]
    EmptyEval,

    #[error("non-finite loss at epoch {epoch}, batch {batch}; parameter norms: {norms}")]
    NonFiniteLoss { epoch: usize, batch: usize, norms: String },

    #[error("checkpoint {path}: {detail}")]
    BadCheckpoint { path: String, detail: String },

    #[error("checkpoint {path}: format version {got}, this build reads version {expected}")]
    CheckpointVersion { path: String, got: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Top-level error for the crate's public entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code contract: 2 usage, 3 data, 4 non-finite loss,
    /// 5 checkpoint version mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Train(TrainError::NonFiniteLoss { .. }) => 4,
            Error::Train(TrainError::CheckpointVersion { .. }) => 5,
            _ => 3,
        }
    }
}

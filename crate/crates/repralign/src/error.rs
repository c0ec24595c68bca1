use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("label id {label} at row {row} is outside the vocabulary of size {vocab_len}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        vocab_len: usize,
    },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("subsample size {size} outside valid range 2..={n}")]
    SizeOutOfRange { size: usize, n: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dendrogram does not match dataset: {0}")]
    MismatchedDendrogram(String),

    #[error("partition does not match dataset: {0}")]
    MismatchedPartition(String),

    #[error("k = {k} outside valid range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("k = {0} too small for Davies-Bouldin (need k >= 2)")]
    KTooSmall(usize),

    #[error("oracle restricted to n <= {limit}, got n = {n}")]
    TooLargeForOracle { n: usize, limit: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("cross-validation fold lacks both classes even after resampling (n = {n}, folds = {folds})")]
    FoldTooSmall { n: usize, folds: usize },

    #[error("degenerate draw: sample of size {size} contains a single class after retry")]
    DegenerateDraw { size: usize },

    #[error("no runs supplied")]
    EmptyRuns,

    #[error("need at least 3 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("zero variance in {0} input")]
    ZeroVariance(&'static str),

    #[error("duplicate cell for representation '{rep}', dataset '{dataset}', metric '{metric}'")]
    DuplicateCell {
        rep: String,
        dataset: String,
        metric: String,
    },

    #[error("empty vocabulary: no term reaches min_count = {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("missing field '{field}' on line {line}")]
    MissingField { field: String, line: usize },

    #[error("invalid JSON on line {line}: {reason}")]
    BadJson { line: usize, reason: String },

    #[error("empty file: {0}")]
    EmptyFile(String),

    #[error("row count mismatch: matrix has {matrix_rows} rows, labels file has {label_rows}")]
    RowCountMismatch {
        matrix_rows: usize,
        label_rows: usize,
    },

    #[error("format error at offset {offset}: {reason}")]
    FormatError { offset: usize, reason: String },

    #[error("artifact version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

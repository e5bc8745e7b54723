use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected {expected} comma-separated fields, found {found}")]
    MalformedLine {
        line: usize,
        expected: String,
        found: usize,
    },
    #[error("input contains no records")]
    EmptyInput,
    #[error("row {row}, column {column}: cannot parse {text:?} as a finite number")]
    NumericParseError {
        row: usize,
        column: String,
        text: String,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("stratum for label {label} has {size} records, at least {needed} required")]
    StratumTooSmall { label: u8, size: usize, needed: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("requested {k} components but at most {max} are available")]
    RankError { k: usize, max: usize },
    #[error("eigensolver did not converge within {iterations} iterations")]
    ConvergenceError { iterations: usize },
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    NonFiniteLoss { epoch: usize },
    #[error("labels contain a single class; both normal and attack records are required")]
    SingleClassInput,
    #[error("cannot compute accuracy over zero records")]
    EmptyEvaluation,
    #[error("comparison rows mix feature modes")]
    MixedFeatureModes,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid artifact: {0}")]
    InvalidArtifact(String),
    #[error("not a model artifact (bad magic bytes)")]
    BadMagic,
    #[error("unsupported artifact format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

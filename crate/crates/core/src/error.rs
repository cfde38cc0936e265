use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variant names are part of the CLI contract: they are printed verbatim in
/// the single-line error message, see [`Error::name`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("layer shapes sum to {from_layers} parameters but param_count is {declared} (model `{model}`)")]
    MismatchedParamCount {
        model: String,
        declared: u64,
        from_layers: u64,
    },
    #[error("{what} must be positive")]
    NonPositiveCount { what: String },
    #[error("model name `{0}` appears more than once")]
    DuplicateModelName(String),
    #[error("probability row {row} {reason}")]
    InvalidProbabilityRow { row: usize, reason: String },
    #[error("{file}:{line}: {reason}")]
    BadProbabilityRow {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("accuracies sum to zero")]
    AllZeroAccuracies,
    #[error("accuracy traces have unequal epoch counts ({0} vs {1})")]
    UnequalEpochCounts(usize, usize),
    #[error("model `{model}` has no {source_name} accuracy trace")]
    MissingAccuracySource { model: String, source_name: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("all ensemble weights are zero")]
    AllZeroWeights,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("all pairs are equal, no test possible")]
    AllPairsEqual,
    #[error("class {class} has {count} samples, at least 3 are required")]
    SmallClass { class: usize, count: usize },
    #[error("bad split fractions: {0}")]
    BadFractions(String),
    #[error("no manifest.json in {0}")]
    MissingManifest(PathBuf),
    #[error("unsupported schema_version {0}")]
    SchemaVersionUnsupported(u64),
    #[error("{file}: {rows} rows, expected {expected}")]
    RowCountMismatch {
        file: PathBuf,
        rows: usize,
        expected: usize,
    },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}: {message}")]
    Parse { file: PathBuf, message: String },
    #[error("at least 2 models are required, got {0}")]
    TooFewModels(usize),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The variant name, used as the machine-parseable error tag.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MismatchedParamCount { .. } => "MismatchedParamCount",
            Error::NonPositiveCount { .. } => "NonPositiveCount",
            Error::DuplicateModelName(_) => "DuplicateModelName",
            Error::InvalidProbabilityRow { .. } => "BadProbabilityRow",
            Error::BadProbabilityRow { .. } => "BadProbabilityRow",
            Error::AllZeroAccuracies => "AllZeroAccuracies",
            Error::UnequalEpochCounts(..) => "UnequalEpochCounts",
            Error::MissingAccuracySource { .. } => "MissingAccuracySource",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::AllZeroWeights => "AllZeroWeights",
            Error::InvalidWeights(_) => "InvalidWeights",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::LabelOutOfRange { .. } => "LabelOutOfRange",
            Error::EmptyMatrix => "EmptyMatrix",
            Error::AllPairsEqual => "AllPairsEqual",
            Error::SmallClass { .. } => "SmallClass",
            Error::BadFractions(_) => "BadFractions",
            Error::MissingManifest(_) => "MissingManifest",
            Error::SchemaVersionUnsupported(_) => "SchemaVersionUnsupported",
            Error::RowCountMismatch { .. } => "RowCountMismatch",
            Error::MissingFile(_) => "MissingFile",
            Error::Parse { .. } => "ParseError",
            Error::TooFewModels(_) => "TooFewModels",
            Error::UnknownModel(_) => "UnknownModel",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

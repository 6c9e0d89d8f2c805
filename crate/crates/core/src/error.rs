use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty vocabulary: no term survived filtering")]
    EmptyVocabulary,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: term `{0}` is not in the vocabulary")]
    UnknownTerm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid k = {k} for {n} documents")]
    InvalidK { k: usize, n: usize },

    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,

    #[error("cluster {0} has no seed")]
    MissingSeed(usize),

    #[error("requested {requested} pairs but only {available} exist")]
    TooManyPairs { requested: usize, available: usize },

    #[error("constraint endpoints must differ (got {0} twice)")]
    SelfConstraint(usize),

    #[error("inconsistent constraints: cannot-link ({a}, {b}) contradicts must-link chain {}", format_chain(.chain))]
    Inconsistent { a: usize, b: usize, chain: Vec<usize> },

    #[error("pair ({0}, {1}) is already constrained")]
    DuplicatePair(usize, usize),

    #[error("empty constraint set")]
    EmptyConstraints,

    #[error("empty contingency table")]
    EmptyTable,

    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cluster id spaces differ: {0} vs {1}")]
    IdSpaceMismatch(usize, usize),

    #[error("category `{0}` has no representative seed")]
    SeedCoverage(String),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("corpus `{0}` not found")]
    CorpusNotFound(String),

    #[error("no constraint at index {0}")]
    UnknownConstraint(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, used by the service's error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyVocabulary => "empty_vocabulary",
            Error::EmptyCorpus => "empty_corpus",
            Error::DuplicateDocument(_) => "duplicate_document",
            Error::UnknownDocument(_) => "unknown_document",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnknownTerm(_) => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidK { .. } => "invalid_k",
            Error::ZeroVector => "zero_vector",
            Error::MissingSeed(_) => "missing_seed",
            Error::TooManyPairs { .. } => "too_many_pairs",
            Error::SelfConstraint(_) => "self_constraint",
            Error::Inconsistent { .. } => "inconsistent_constraints",
            Error::DuplicatePair(..) => "duplicate_pair",
            Error::EmptyConstraints => "empty_constraints",
            Error::EmptyTable => "empty_table",
            Error::DegenerateSegment => "degenerate_segment",
            Error::InsufficientData(_) => "insufficient_data",
            Error::IdSpaceMismatch(..) => "id_space_mismatch",
            Error::SeedCoverage(_) => "seed_coverage",
            Error::UnknownSession(_) => "unknown_session",
            Error::CorpusNotFound(_) => "corpus_not_found",
            Error::UnknownConstraint(_) => "unknown_constraint",
            Error::Parse { .. } => "parse_error",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn format_chain(chain: &[usize]) -> String {
    chain
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("–")
}

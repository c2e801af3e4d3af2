use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown label {label:?} in {context}")]
    UnknownLabel { label: String, context: String },
    #[error("non-finite value in {0}")]
    NonFiniteValue(String),
    #[error("duplicate class id {0:?}")]
    DuplicateClassId(String),
    #[error("invalid class split: {0}")]
    InvalidSplit(String),
    #[error("mask selects no attributes")]
    EmptyMask,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("too few classes: {n} classes cannot fill {k} folds")]
    TooFewClasses { n: usize, k: usize },
    #[error("fold count {0} is degenerate (need at least 2)")]
    DegenerateK(usize),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("class {0:?} has no training instances")]
    EmptyClass(String),
    #[error("singular Sylvester pencil: eigenvalue sum {sum:e} at ({row}, {col}) with non-negligible right-hand side")]
    SingularPencil { row: usize, col: usize, sum: f64 },
    #[error("matrix {0} is not symmetric")]
    NonSymmetricInput(&'static str),
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("ranking needs at least two classes")]
    SingleClass,
    #[error("diversity needs at least two individuals")]
    TooFewIndividuals,
    #[error("{n} attributes exceed the exhaustive-search limit of {max}")]
    TooManyAttributes { n: usize, max: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("reports come from different bundles ({0} vs {1})")]
    BundleMismatch(String, String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SingularPencil { .. } | Error::NonSymmetricInput(_) => ErrorClass::Numerical,
            Error::InvalidConfig(_)
            | Error::InvalidSpec(_)
            | Error::DegenerateK(_)
            | Error::TooFewClasses { .. }
            | Error::TooManyAttributes { .. } => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}

use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants are grouped by the exit-code class the CLI maps them to:
/// malformed input, violated hypotheses of a construction, and internal
/// invariant failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed complex: {0}")]
    MalformedComplex(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("malformed hierarchy: {0}")]
    MalformedHierarchy(String),
    #[error("malformed configuration: {0}")]
    MalformedConfig(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("group registry invariant `{invariant}` violated: {detail}")]
    GroupInvariant { invariant: &'static str, detail: String },
    #[error("classification failure: {0}")]
    Classification(String),
    #[error("slender group `{group}` classified {class}; slender groups act only elliptically, linearly or dihedrally")]
    SlenderConsistency { group: String, class: String },
    #[error("hypothesis of {construction} violated: {detail}")]
    Hypothesis { construction: &'static str, detail: String },
    #[error("precondition of {op} violated: {detail}")]
    Precondition { op: &'static str, detail: String },
    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant { invariant: &'static str, detail: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

impl Error {
    pub fn hypothesis(construction: &'static str, detail: impl Into<String>) -> Self {
        Error::Hypothesis { construction, detail: detail.into() }
    }

    pub fn precondition(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition { op, detail: detail.into() }
    }

    pub fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { invariant, detail: detail.into() }
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MalformedComplex(_)
            | Error::MalformedTree(_)
            | Error::MalformedHierarchy(_)
            | Error::MalformedConfig(_)
            | Error::UnknownGroup(_)
            | Error::GroupInvariant { .. }
            | Error::Parse { .. } => 2,
            Error::Hypothesis { .. }
            | Error::Precondition { .. }
            | Error::Classification(_)
            | Error::SlenderConsistency { .. } => 1,
            Error::Invariant { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

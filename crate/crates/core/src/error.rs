use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One schema violation, located by a JSON-pointer-style path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaIssue {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "{at}: {}", self.message)
    }
}

fn join_issues(issues: &[SchemaIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("remote model unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("remote model rejected candidate {candidate:?}")]
    CandidateRejected { candidate: String },
    #[error("remote protocol error: {0}")]
    RemoteProtocol(String),
    #[error("backend does not support {0}")]
    BackendUnsupported(String),

    #[error("invalid candidate set: {0}")]
    InvalidCandidates(String),
    #[error("candidate sets differ between distributions")]
    CandidateMismatch,
    #[error("unknown candidate set {0:?}")]
    UnknownCandidateSet(String),
    #[error("negative weight {weight} for ({feature:?}, {completion:?})")]
    NegativeWeight {
        feature: String,
        completion: String,
        weight: f64,
    },
    #[error("table file line {line}: {message}")]
    TableFormat { line: usize, message: String },

    #[error("record time {got} precedes last record time {last}")]
    TimeRegression { last: u64, got: u64 },
    #[error("workspace invariant violated: {0}")]
    Workspace(String),
    #[error("invalid decision logic: {0}")]
    InvalidLogic(String),

    #[error("no transition rule matched at tick {tick}")]
    RuleGap { tick: u64 },
    #[error("duplicate actor id {0:?}")]
    DuplicateId(String),
    #[error("unknown actor {0:?}")]
    UnknownActor(String),

    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("epsilon-similar matching needs a probe model")]
    SimilarityBackendMissing,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema errors: {}", join_issues(.0))]
    Schema(Vec<SchemaIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::RemoteUnavailable(_)
                | Error::CandidateRejected { .. }
                | Error::RemoteProtocol(_)
                | Error::BackendUnsupported(_)
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Schema(_))
    }
}

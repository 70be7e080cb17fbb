use std::fmt;
use std::path::PathBuf;

/// Pipeline stage an error surfaced from, used to label errors coming out of
/// [`run_audit`](crate::report::run_audit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Corpus,
    Protorole,
    Stats,
    Bias,
    Lexical,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Corpus => "corpus",
            Stage::Protorole => "protorole",
            Stage::Stats => "stats",
            Stage::Bias => "bias",
            Stage::Lexical => "lexical",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: unknown label {value:?}")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("{path}: zero well-formed records")]
    NoRecords { path: PathBuf },

    #[error("rules line {line}: {message}")]
    RuleSyntax { line: usize, message: String },

    #[error("invalid rule set: {0}")]
    InvalidRules(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("contingency table needs at least two non-empty roles, found {0}")]
    TooFewRoles(usize),

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid synthetic spec: {0}")]
    Synth(String),

    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage tag if this error came out of the audit pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Innermost error, with any stage wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

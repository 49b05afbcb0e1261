use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("malformed assertion at line {line}: {reason}")]
    MalformedLine { line: u64, reason: String },

    #[error("knowledge base is empty after filtering ({lines} lines read)")]
    EmptyKb { lines: u64 },

    #[error("invalid {kind} handle {id} (have {len})")]
    InvalidHandle {
        kind: &'static str,
        id: u32,
        len: usize,
    },

    #[error("corrupt kb cache: {0}")]
    CorruptCache(String),

    #[error("incompatible kb cache: file has format version {found}, this build reads version {expected}")]
    IncompatibleCache { found: u32, expected: u32 },

    #[error("subgraph {0} is not a two-hop chain of this knowledge base")]
    InconsistentSubgraph(String),

    #[error("logical form #{0} selects S4, which needs an exact-mode partition")]
    RequiresExactMode(u8),

    #[error("no lexicon entry for relation {0:?} and fallback is disabled")]
    MissingLexiconEntry(String),

    #[error("lexicon parse error at line {line}, column {column}: {message}")]
    LexiconParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid lexicon entry for {relation:?}: {reason}")]
    InvalidLexiconEntry { relation: String, reason: String },

    #[error("logical form #{0} has no wrong answers for this subgraph")]
    NoDistractor(u8),

    #[error("need {needed} distinct wrong answers but only {available} exist")]
    InsufficientPool { needed: usize, available: u64 },

    #[error("logical form #{0} has an empty answer set for this subgraph")]
    InvalidForm(u8),

    #[error("no question could be generated: {0}")]
    EmptyDataset(String),

    #[error("gave up after {attempted} subgraph draws with only {emitted} questions emitted")]
    SkipBudgetExhausted { attempted: u64, emitted: u64 },

    #[error("write failed after {written} records: {source}")]
    PartialWrite {
        written: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("while generating from {context}: {source}")]
    Generation {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("attribute name must be non-empty")]
    EmptyColumn,
    #[error("attribute {0} appears more than once")]
    DuplicateAttribute(String),
    #[error("{prefix} is not a prefix of {order}")]
    NotAPrefix { order: String, prefix: String },
}

/// A schema or reference problem in a catalog or query, with the path of
/// the offending element (e.g. `relations[2].clustering[0]`).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PrefixError {
    #[error("vertex {vertex}: permutation {perm} does not match attribute set {set}")]
    InvalidAssignment {
        vertex: usize,
        perm: String,
        set: String,
    },
    #[error("edges do not form a path over vertices in index order")]
    NotAPath,
    #[error("edges do not form a binary tree rooted at vertex 0")]
    NotABinaryTree,
    #[error("edges do not form a tree: {0}")]
    NotATree(String),
    #[error("benefit function must satisfy f(0) = 0 and be non-decreasing")]
    InvalidBenefitFn,
    #[error("search space of {0} assignments exceeds the brute-force limit")]
    TooLarge(u128),
}

#[derive(Debug, Error)]
pub enum SortError {
    #[error("input is not ordered on the known prefix at record {position}")]
    InputNotSorted { position: u64 },
    #[error("invalid sort specification: {0}")]
    InvalidSpec(String),
    #[error("record {position} has {found} key columns, expected {expected}")]
    KeyArity {
        position: u64,
        expected: usize,
        found: usize,
    },
    #[error("spill I/O failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Prefix(#[from] PrefixError),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("search space of {0} orders exceeds the enumeration limit")]
    TooLarge(u128),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

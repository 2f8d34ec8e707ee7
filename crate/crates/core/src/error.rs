use thiserror::Error;

use crate::model::{Tid, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("relation `{relation}` has no attribute `{attribute}`")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("tuple identifier `{0}` is used more than once")]
    DuplicateTid(Tid),
    #[error("unknown tuple identifier `{0}`")]
    UnknownTid(Tid),
    #[error("relation `{relation}` expects {expected} values, got {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("matching function for domain `{domain}` is not a semilattice: {detail}")]
    SemilatticeViolation { domain: String, detail: String },
    #[error("matching function for domain `{domain}` is undefined on ({left}, {right})")]
    UndefinedMatch {
        domain: String,
        left: Value,
        right: Value,
    },
    #[error("closure of domain `{domain}` under its matching function exceeds {limit} values")]
    ClosureTooLarge { domain: String, limit: usize },
}

/// Errors from the MD front end. Line and column are 1-based.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MdError {
    #[error("{line}:{column}: parse error: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: md `{md}`: {message}")]
    Validation {
        md: String,
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChaseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("chase exceeded the step limit of {0}")]
    StepLimitExceeded(usize),
    #[error("step is not applicable: {0}")]
    NotApplicable(String),
    #[error("exhaustive chase is limited to {bound} tuples, instance has {tuples}")]
    TooLarge { tuples: usize, bound: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatalogError {
    #[error("{line}:{column}: parse error: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("program is not stratifiable: negative dependency inside cycle {}", .cycle.join(" -> "))]
    NotStratifiable { cycle: Vec<String> },
    #[error("unsafe rule `{rule}`: variable {var} is not bound by a positive body literal")]
    Unsafe { rule: String, var: String },
    #[error("rule `{rule}`: built-in `{literal}` is called with an unbound argument")]
    UnboundBuiltin { rule: String, literal: String },
    #[error("clause `{0}` is not a Datalog rule (disjunctive head or constraint)")]
    NotDatalog(String),
    #[error("predicate `{0}` is reserved for a built-in")]
    ReservedPredicate(String),
    #[error("predicate `{pred}` is used with arities {first} and {second}")]
    ArityClash {
        pred: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("{line}:{column}: parse error: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("query `{query}`: head variable {var} does not occur in the body")]
    UnsafeHead { query: String, var: String },
    #[error("query `{query}`: {message}")]
    Invalid { query: String, message: String },
    #[error("certain answers need at least one clean instance")]
    EmptyCleanSet,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodegenError {
    #[error("input is not in a single-clean-instance class (verdict {0}); the residual program would be unsound")]
    NotSci(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
}

/// Failures while reading input files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: ModelError,
    },
    #[error("{path}:{source}")]
    Md {
        path: String,
        #[source]
        source: MdError,
    },
    #[error("{path}:{source}")]
    Query {
        path: String,
        #[source]
        source: QueryError,
    },
}

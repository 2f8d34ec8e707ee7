//! Entity resolution with matching dependencies.
//!
//! The crate enforces (relational) matching dependencies on relational
//! instances. It enumerates the clean instances reachable by the chase,
//! decides membership in the single-clean-instance classes, emits the general
//! disjunctive cleaning program as answer-set-programming text, and compiles
//! single-clean-instance cases to a stratified Datalog program that the
//! built-in bottom-up engine evaluates.

pub mod chase;
pub mod classify;
pub mod codegen;
pub mod datalog;
pub mod error;
pub mod io;
pub mod md;
pub mod model;
mod problem;
pub mod query;
mod syntax;

#[cfg(test)]
mod testkit;

pub use problem::{active_values, Problem};
pub use error::{ChaseError, CodegenError, DatalogError, LoadError, MdError, ModelError, QueryError};

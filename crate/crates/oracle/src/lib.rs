//! Exhaustive axiomatic model for small litmus programs, used to check the
//! operational engine from the outside.
//!
//! [`enumerate_consistent`] lists every consistent execution of a program;
//! [`lift_trace`] turns an engine trace into the executions it stands for;
//! [`check_consistent`] is the consistency predicate both rely on. Executions
//! are compared through [`canonicalize`].

pub mod axioms;
pub mod canon;
pub mod enumerate;
pub mod graphcheck;
pub mod lift;
pub mod model;
pub mod races;
pub mod rel;
pub mod report;

pub use axioms::{check_consistent, happens_before, Violation};
pub use canon::{canonicalize, Canon};
pub use enumerate::{enumerate_consistent, DEFAULT_BOUND};
pub use lift::{lift_first, lift_trace, DEFAULT_EXTENSION_BUDGET};
pub use model::{EvId, Execution, Kind, OEvent};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("program exceeds the bound of {bound} atomic events")]
    BudgetExceeded { bound: usize },
    #[error("too many interpreter states")]
    StateCapExceeded,
    #[error("more than {budget} mo extensions")]
    ExtensionBudgetExceeded { budget: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot lift trace: {0}")]
    BadTrace(String),
}

//! Randomized testing and race detection for a small C/C++11-style
//! concurrent language.
//!
//! An execution keeps happens-before as clock vectors and modification order
//! as a constraint graph whose nodes also carry clock vectors, so choosing
//! which store a load reads never requires backtracking.

pub mod clocks;
pub mod explorer;
pub mod hb;
pub mod lang;
pub mod mograph;
pub mod prune;
pub mod race;
mod rfselect;
pub mod rng;
pub mod trace;

pub use clocks::{ClockVector, Seq, Tid};
pub use explorer::{explore, explore_exhaustive, run_many, ExploreConfig, Plugin, Summary};
pub use lang::{parse_program, LangError, Program};
pub use prune::{PruneConfig, PruneMode};
pub use trace::Trace;

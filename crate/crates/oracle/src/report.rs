//! Counterexample reports for engine/oracle mismatches.

use std::fmt::Write;

use wmm_core::lang::Program;
use wmm_core::trace::Trace;

use crate::canon::{canonicalize, Canon};
use crate::model::Execution;

/// The execution in `pool` closest to `x`.
pub fn nearest<'a>(x: &Execution, pool: &'a [Execution]) -> Option<&'a Execution> {
    let cx = canonicalize(x);
    pool.iter().min_by_key(|y| cx.distance(&canonicalize(y)))
}

/// Program text, engine trace (if any), the offending execution, and the
/// nearest execution from the other side.
pub fn counterexample(
    prog: &Program,
    reason: &str,
    trace: Option<&Trace>,
    offending: &Execution,
    pool: &[Execution],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# mismatch: {reason}");
    out.push_str("# program\n");
    out.push_str(&prog.to_string());
    if let Some(t) = trace {
        out.push_str("# engine trace\n");
        out.push_str(&t.dump());
    }
    out.push_str("# execution\n");
    out.push_str(&offending.render());
    if let Some(n) = nearest(offending, pool) {
        out.push_str("# nearest\n");
        out.push_str(&n.render());
    }
    out
}

/// Canonical-set difference, in sorted order.
pub fn missing<'a>(want: &'a [(Canon, Execution)], have: &[(Canon, Execution)]) -> Vec<&'a Execution> {
    want.iter()
        .filter(|(c, _)| have.binary_search_by(|(h, _)| h.cmp(c)).is_err())
        .map(|(_, x)| x)
        .collect()
}

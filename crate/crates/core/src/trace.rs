//! Events and the record of one execution.
//!
//! Structured dump format, one record per line:
//!
//! ```text
//! #wmm-trace v1
//! event seq=1 tid=0 kind=init loc=x mo=relaxed value=0 rf=-
//! event seq=5 tid=2 kind=rmw loc=x mo=rel_acq value=2 read=1 rf=4
//! event seq=6 tid=1 kind=fork loc=- mo=- value=3 rf=-
//! final r1=1 r2=0
//! assert tid=2 stmt=7:3
//! race RACE write-write z (2@3 4:5) (3@4 9:5)
//! deadlock
//! error <message>
//! ```
//!
//! `value` is the stored value for stores, RMWs and init, the loaded value
//! for loads, and the child thread id for fork and join.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::clocks::{ClockVector, Seq, Tid};
use crate::lang::{MemOrder, Span};
use crate::race::{AccessKind, RaceReport};

pub const TRACE_HEADER: &str = "#wmm-trace v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Init,
    Load,
    Store,
    Rmw,
    Fence,
    Fork,
    Join,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Init => "init",
            EventKind::Load => "load",
            EventKind::Store => "store",
            EventKind::Rmw => "rmw",
            EventKind::Fence => "fence",
            EventKind::Fork => "fork",
            EventKind::Join => "join",
        }
    }

    pub fn is_write(self) -> bool {
        matches!(self, EventKind::Init | EventKind::Store | EventKind::Rmw)
    }

    pub fn is_read(self) -> bool {
        matches!(self, EventKind::Load | EventKind::Rmw)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub seq: Seq,
    pub tid: Tid,
    pub kind: EventKind,
    /// Index into the trace's location table.
    pub loc: Option<u32>,
    pub mo: Option<MemOrder>,
    pub value: i64,
    /// Loaded value of an RMW.
    pub read: Option<i64>,
    pub rf: Option<Seq>,
    /// Child thread of a fork or join.
    pub child: Option<Tid>,
    pub stmt: Span,
    /// Store synthesized from an aliased non-atomic write.
    pub promoted: bool,
}

impl Event {
    pub fn is_sc(&self) -> bool {
        self.mo == Some(MemOrder::SeqCst)
    }
}

/// A non-atomic access to a shared cell, positioned after the thread's event
/// `after` (or at thread start).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaAccess {
    pub tid: Tid,
    pub after: Option<Seq>,
    pub kind: AccessKind,
    pub loc: String,
    pub stmt: Span,
    /// The thread's clock at the access.
    pub clock: ClockVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssertFailure {
    pub tid: Tid,
    pub stmt: Span,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PruneStats {
    pub passes: u64,
    pub stores: u64,
    pub loads: u64,
    pub fences: u64,
}

impl PruneStats {
    pub fn add(&mut self, o: &PruneStats) {
        self.passes += o.passes;
        self.stores += o.stores;
        self.loads += o.loads;
        self.fences += o.fences;
    }
}

/// Prefix of errors caused by the program itself rather than the engine.
pub const PROGRAM_ERROR: &str = "program error: ";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub loc_names: Vec<String>,
    pub events: Vec<Event>,
    /// mo constraints `(a, b)` meaning a is mo-before b, as added to the
    /// mo-graph (after rmw redirection); rmw pairs are in `rmw_pairs`.
    pub constraints: Vec<(Seq, Seq)>,
    pub rmw_pairs: Vec<(Seq, Seq)>,
    /// Thread path (fork ordinals from main) per tid; tid 0 is empty.
    pub thread_paths: Vec<Vec<u32>>,
    pub na_accesses: Vec<NaAccess>,
    pub outcome: Vec<(String, i64)>,
    pub asserts: Vec<AssertFailure>,
    pub races: Vec<RaceReport>,
    pub deadlock: bool,
    pub error: Option<String>,
    pub prune: PruneStats,
}

impl Trace {
    pub fn event(&self, seq: Seq) -> &Event {
        &self.events[(seq - 1) as usize]
    }

    pub fn loc_name(&self, loc: u32) -> &str {
        &self.loc_names[loc as usize]
    }

    /// An error not attributable to the program.
    pub fn internal_error(&self) -> Option<&str> {
        self.error.as_deref().filter(|e| !e.starts_with(PROGRAM_ERROR))
    }

    pub fn has_findings(&self) -> bool {
        !self.asserts.is_empty() || !self.races.is_empty()
    }

    pub fn outcome_map(&self) -> BTreeMap<String, i64> {
        self.outcome.iter().cloned().collect()
    }

    pub fn event_line(&self, e: &Event) -> String {
        let loc = e.loc.map(|l| self.loc_name(l).to_string()).unwrap_or_else(|| "-".into());
        let mo = e.mo.map(|m| m.name()).unwrap_or("-");
        let value = match e.child {
            Some(c) => c as i64,
            None => e.value,
        };
        let mut s = format!(
            "event seq={} tid={} kind={} loc={} mo={} value={}",
            e.seq,
            e.tid,
            e.kind.name(),
            loc,
            mo,
            value
        );
        if let Some(r) = e.read {
            let _ = write!(s, " read={r}");
        }
        match e.rf {
            Some(rf) => {
                let _ = write!(s, " rf={rf}");
            }
            None => s.push_str(" rf=-"),
        }
        if e.promoted {
            s.push_str(" promoted=1");
        }
        s
    }

    pub fn outcome_line(&self) -> String {
        let mut s = String::from("final");
        for (k, v) in &self.outcome {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    /// Line-delimited structured dump.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&self.event_line(e));
            out.push('\n');
        }
        out.push_str(&self.outcome_line());
        out.push('\n');
        for a in &self.asserts {
            let _ = writeln!(out, "assert tid={} stmt={}", a.tid, a.stmt);
        }
        for r in &self.races {
            let _ = writeln!(out, "race {r}");
        }
        if self.deadlock {
            out.push_str("deadlock\n");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error {e}");
        }
        out
    }
}

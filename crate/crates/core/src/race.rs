//! Epoch-based race detection over non-atomic cells.
//!
//! Every shared cell owns one 64-bit shadow word:
//!
//! ```text
//! bits  0..=24  last write clock + 1 (0 = never written)
//! bits 25..=30  last write tid
//! bits 31..=55  last read clock + 1 (0 = no read recorded)
//! bits 56..=61  last read tid
//! bit  62       last store to the cell came from an atomic access
//! bit  63       expanded: bits 0..=62 index the expanded-record table
//! ```
//!
//! A cell is expanded when a clock or tid does not fit, or when a second
//! reader unordered with the recorded one shows up. An access by thread `t`
//! at epoch `e` means "after `t`'s event `e`"; a prior access `(u, e)` is
//! ordered before the current one when `u == t` or `e < C_t(u)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::clocks::{ClockVector, Seq, Tid};
use crate::lang::Span;

const CLOCK_BITS: u32 = 25;
const TID_BITS: u32 = 6;
const CLOCK_MASK: u64 = (1 << CLOCK_BITS) - 1;
const TID_MASK: u64 = (1 << TID_BITS) - 1;
const W_CLOCK_SHIFT: u32 = 0;
const W_TID_SHIFT: u32 = 25;
const R_CLOCK_SHIFT: u32 = 31;
const R_TID_SHIFT: u32 = 56;
pub const ATOMIC_BIT: u64 = 1 << 62;
pub const EXPANDED_BIT: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RaceKind {
    WriteWrite,
    ReadWrite,
    WriteRead,
}

impl RaceKind {
    pub fn name(self) -> &'static str {
        match self {
            RaceKind::WriteWrite => "write-write",
            RaceKind::ReadWrite => "read-write",
            RaceKind::WriteRead => "write-read",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// One side of a race: thread, epoch and statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessSite {
    pub tid: Tid,
    pub epoch: Seq,
    pub stmt: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RaceReport {
    pub kind: RaceKind,
    pub loc: String,
    pub first: AccessSite,
    pub second: AccessSite,
}

impl RaceReport {
    /// Static identity used to report each race once.
    pub fn key(&self) -> (RaceKind, Span, Span) {
        (self.kind, self.first.stmt, self.second.stmt)
    }
}

impl fmt::Display for RaceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RACE {} {} ({}@{} {}) ({}@{} {})",
            self.kind.name(),
            self.loc,
            self.first.tid,
            self.first.epoch,
            self.first.stmt,
            self.second.tid,
            self.second.epoch,
            self.second.stmt
        )
    }
}

/// Decoded compact shadow word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Compact {
    pub write: Option<(Tid, Seq)>,
    pub read: Option<(Tid, Seq)>,
    pub atomic: bool,
}

impl Compact {
    pub fn fits(tid: Tid, epoch: Seq) -> bool {
        (tid as u64) <= TID_MASK && epoch < CLOCK_MASK
    }

    pub fn encode(&self) -> Option<u64> {
        let mut w = 0u64;
        if let Some((t, e)) = self.write {
            if !Compact::fits(t, e) {
                return None;
            }
            w |= (e + 1) << W_CLOCK_SHIFT | (t as u64) << W_TID_SHIFT;
        }
        if let Some((t, e)) = self.read {
            if !Compact::fits(t, e) {
                return None;
            }
            w |= (e + 1) << R_CLOCK_SHIFT | (t as u64) << R_TID_SHIFT;
        }
        if self.atomic {
            w |= ATOMIC_BIT;
        }
        Some(w)
    }

    pub fn decode(w: u64) -> Compact {
        debug_assert!(w & EXPANDED_BIT == 0);
        let wc = (w >> W_CLOCK_SHIFT) & CLOCK_MASK;
        let rc = (w >> R_CLOCK_SHIFT) & CLOCK_MASK;
        Compact {
            write: (wc != 0).then(|| (((w >> W_TID_SHIFT) & TID_MASK) as Tid, wc - 1)),
            read: (rc != 0).then(|| (((w >> R_TID_SHIFT) & TID_MASK) as Tid, rc - 1)),
            atomic: w & ATOMIC_BIT != 0,
        }
    }
}

/// Full record used once a cell outgrows the compact word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expanded {
    pub write: Option<(Tid, Seq)>,
    pub reads: BTreeMap<Tid, Seq>,
    pub atomic: bool,
}

#[derive(Clone, Debug, Default)]
struct Sites {
    write: Option<AccessSite>,
    reads: BTreeMap<Tid, AccessSite>,
}

#[derive(Clone, Debug, Default)]
pub struct RaceDetector {
    words: BTreeMap<String, u64>,
    expanded: Vec<Expanded>,
    /// Statement provenance for report rendering only; verdicts come from the
    /// shadow words.
    sites: BTreeMap<String, Sites>,
}

fn ordered(prior: (Tid, Seq), tid: Tid, c: &ClockVector) -> bool {
    prior.0 == tid || prior.1 < c.get(prior.0)
}

impl RaceDetector {
    pub fn new() -> RaceDetector {
        RaceDetector::default()
    }

    pub fn shadow_word(&self, loc: &str) -> u64 {
        self.words.get(loc).copied().unwrap_or(0)
    }

    pub fn is_expanded(&self, loc: &str) -> bool {
        self.shadow_word(loc) & EXPANDED_BIT != 0
    }

    fn load(&self, loc: &str) -> Expanded {
        let w = self.shadow_word(loc);
        if w & EXPANDED_BIT != 0 {
            return self.expanded[(w & !EXPANDED_BIT) as usize].clone();
        }
        let c = Compact::decode(w);
        Expanded {
            write: c.write,
            reads: c.read.into_iter().collect(),
            atomic: c.atomic,
        }
    }

    fn store(&mut self, loc: &str, rec: Expanded) {
        let w = self.shadow_word(loc);
        if w & EXPANDED_BIT != 0 {
            self.expanded[(w & !EXPANDED_BIT) as usize] = rec;
            return;
        }
        if rec.reads.len() <= 1 {
            let compact = Compact {
                write: rec.write,
                read: rec.reads.iter().next().map(|(&t, &e)| (t, e)),
                atomic: rec.atomic,
            };
            if let Some(w) = compact.encode() {
                self.words.insert(loc.to_string(), w);
                return;
            }
        }
        self.expanded.push(rec);
        self.words
            .insert(loc.to_string(), EXPANDED_BIT | (self.expanded.len() - 1) as u64);
    }

    fn site(&self, loc: &str, tid: Tid, write: bool) -> Option<AccessSite> {
        let s = self.sites.get(loc)?;
        if write {
            s.write
        } else {
            s.reads.get(&tid).copied()
        }
    }

    /// Checks a non-atomic access by `tid` (thread clock `c`, epoch `epoch`)
    /// and updates the cell. Returns every race the access completes.
    pub fn access(
        &mut self,
        loc: &str,
        kind: AccessKind,
        tid: Tid,
        c: &ClockVector,
        epoch: Seq,
        stmt: Span,
    ) -> Vec<RaceReport> {
        let mut rec = self.load(loc);
        let me = AccessSite { tid, epoch, stmt };
        let mut out = Vec::new();
        let report = |kind: RaceKind, first: Option<AccessSite>, out: &mut Vec<RaceReport>, prior: (Tid, Seq)| {
            let first = first.unwrap_or(AccessSite {
                tid: prior.0,
                epoch: prior.1,
                stmt: Span::default(),
            });
            out.push(RaceReport {
                kind,
                loc: loc.to_string(),
                first,
                second: me,
            });
        };
        if let Some(w) = rec.write {
            if !ordered(w, tid, c) {
                let kind = match kind {
                    AccessKind::Write => RaceKind::WriteWrite,
                    AccessKind::Read => RaceKind::WriteRead,
                };
                report(kind, self.site(loc, w.0, true), &mut out, w);
            }
        }
        match kind {
            AccessKind::Write => {
                for (&rt, &re) in &rec.reads {
                    if !ordered((rt, re), tid, c) {
                        report(RaceKind::ReadWrite, self.site(loc, rt, false), &mut out, (rt, re));
                    }
                }
                rec.write = Some((tid, epoch));
                rec.reads.clear();
                rec.atomic = false;
                let s = self.sites.entry(loc.to_string()).or_default();
                s.write = Some(me);
                s.reads.clear();
            }
            AccessKind::Read => {
                // Readers ordered before this one are subsumed by it.
                rec.reads.retain(|&rt, &mut re| !ordered((rt, re), tid, c));
                rec.reads.insert(tid, epoch);
                self.sites.entry(loc.to_string()).or_default().reads.insert(tid, me);
            }
        }
        self.store(loc, rec);
        out
    }

    /// An atomic store reached this cell through an alias.
    pub fn note_atomic_write(&mut self, loc: &str) {
        let mut rec = self.load(loc);
        rec.atomic = true;
        self.store(loc, rec);
    }

    pub fn atomic_flag(&self, loc: &str) -> bool {
        self.shadow_word(loc) & ATOMIC_BIT != 0 || self.load(loc).atomic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(p: &[(Tid, Seq)]) -> ClockVector {
        ClockVector::from_pairs(p)
    }

    #[test]
    fn compact_round_trip() {
        let c = Compact {
            write: Some((3, 17)),
            read: Some((63, CLOCK_MASK - 1)),
            atomic: true,
        };
        let w = c.encode().unwrap();
        assert_eq!(w & EXPANDED_BIT, 0);
        assert_eq!(Compact::decode(w), c);
        assert!(Compact {
            write: Some((64, 1)),
            ..Default::default()
        }
        .encode()
        .is_none());
        assert!(Compact {
            write: Some((1, CLOCK_MASK)),
            ..Default::default()
        }
        .encode()
        .is_none());
    }

    #[test]
    fn unordered_writes_race() {
        let mut d = RaceDetector::new();
        let s1 = Span { line: 1, col: 1 };
        let s2 = Span { line: 2, col: 1 };
        assert!(d.access("z", AccessKind::Write, 2, &cv(&[(2, 3)]), 3, s1).is_empty());
        let r = d.access("z", AccessKind::Write, 3, &cv(&[(3, 4)]), 4, s2);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, RaceKind::WriteWrite);
        assert_eq!(r[0].to_string(), "RACE write-write z (2@3 1:1) (3@4 2:1)");
    }

    #[test]
    fn same_thread_never_races() {
        let mut d = RaceDetector::new();
        let s = Span::default();
        d.access("z", AccessKind::Write, 2, &cv(&[(2, 3)]), 3, s);
        assert!(d.access("z", AccessKind::Read, 2, &cv(&[(2, 3)]), 3, s).is_empty());
    }

    #[test]
    fn epoch_after_event_is_strict() {
        // writer 2 writes after its event 5; reader knowing 2:5 is not ordered
        let mut d = RaceDetector::new();
        let s = Span::default();
        d.access("z", AccessKind::Write, 2, &cv(&[(2, 5)]), 5, s);
        assert_eq!(d.access("z", AccessKind::Read, 3, &cv(&[(2, 5), (3, 6)]), 6, s).len(), 1);
        assert!(d.access("z", AccessKind::Read, 4, &cv(&[(2, 7), (4, 8)]), 8, s).is_empty());
    }

    #[test]
    fn concurrent_readers_expand() {
        let mut d = RaceDetector::new();
        let s = Span::default();
        d.access("z", AccessKind::Read, 2, &cv(&[(2, 3)]), 3, s);
        assert!(!d.is_expanded("z"));
        d.access("z", AccessKind::Read, 3, &cv(&[(3, 4)]), 4, s);
        assert!(d.is_expanded("z"));
        let r = d.access("z", AccessKind::Write, 4, &cv(&[(3, 9), (4, 5)]), 5, s);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, RaceKind::ReadWrite);
        assert_eq!(r[0].first.tid, 2);
    }

    #[test]
    fn atomic_flag() {
        let mut d = RaceDetector::new();
        d.note_atomic_write("d");
        assert!(d.atomic_flag("d"));
        d.access("d", AccessKind::Write, 1, &ClockVector::new(), 0, Span::default());
        assert!(!d.atomic_flag("d"));
    }
}

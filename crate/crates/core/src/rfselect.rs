//! May-read-from sets and prior sets.
//!
//! `X hb L` for an already committed `X` and a current (uncommitted) event of
//! a thread with clock `c` is `X.seq <= c(X.tid)`. The sc order is the
//! execution order of sc events, which coincides with sequence numbers.

use std::collections::BTreeSet;

use crate::clocks::{ClockVector, Seq, Tid};
use crate::explorer::ExecState;
use crate::lang::MemOrder;
use crate::mograph::Loc;
use crate::trace::EventKind;

impl ExecState<'_> {
    pub(crate) fn hb_cur(&self, x: Seq, c: &ClockVector) -> bool {
        let e = self.ev(x);
        e.seq <= c.get(e.tid)
    }

    /// `x` happens-before the committed event `y`.
    pub(crate) fn hb_ev(&self, x: Seq, y: Seq) -> bool {
        x != y && self.hb_cur(x, &self.clocks[(y - 1) as usize])
    }

    fn is_write(&self, x: Seq) -> bool {
        self.ev(x).kind.is_write()
    }

    fn is_sc_write(&self, x: Seq) -> bool {
        let e = self.ev(x);
        e.kind.is_write() && e.is_sc()
    }

    pub(crate) fn get_write(&self, x: Seq) -> Seq {
        let e = self.ev(x);
        match e.kind {
            EventKind::Load => e.rf.expect("load without rf"),
            _ => x,
        }
    }

    /// Latest sc store/RMW to `loc` committed so far.
    pub fn last_sc_store(&self, loc: Loc) -> Option<Seq> {
        self.hist[loc as usize].all().filter(|&x| self.is_sc_write(x)).max()
    }

    pub fn last_sc_fence(&self, tid: Tid) -> Option<Seq> {
        self.sc_fences.get(&tid).and_then(|v| v.last().copied())
    }

    /// Last sc fence of `t` that is sc-before `f`.
    fn sc_fence_before(&self, t: Tid, f: Option<Seq>) -> Option<Seq> {
        let f = f?;
        self.sc_fences.get(&t)?.iter().rev().find(|&&x| x < f).copied()
    }

    /// Candidate stores for a load or RMW by `tid` (clock `c`), in
    /// descending sequence order.
    pub fn may_read_from(&self, tid: Tid, loc: Loc, mo: MemOrder, is_rmw: bool, c: &ClockVector) -> Vec<Seq> {
        let _ = tid;
        let last_sc = if mo.is_seq_cst() { self.last_sc_store(loc) } else { None };
        let mut ret = Vec::new();
        for list in self.hist[loc as usize].per_thread.values() {
            let stores: Vec<Seq> = list.iter().copied().filter(|&x| self.is_write(x)).collect();
            // A store hb the load is only visible if no later store of the
            // same thread is also hb the load.
            let last_hb = stores.iter().rev().find(|&&x| self.hb_cur(x, c)).copied();
            for x in stores {
                if self.hb_cur(x, c) && Some(x) != last_hb {
                    continue;
                }
                if let Some(s) = last_sc {
                    if (self.is_sc_write(x) && x < s) || self.hb_ev(x, s) {
                        continue;
                    }
                }
                if is_rmw && self.read_by_rmw.contains(&x) {
                    continue;
                }
                ret.push(x);
            }
        }
        ret.sort_unstable_by(|a, b| b.cmp(a));
        debug_assert!(!ret.is_empty(), "empty may-read-from set");
        ret
    }

    /// Per-thread latest of the S1..S4 candidates, shared by both prior sets.
    fn prior_elements(&self, tid: Tid, loc: Loc, is_sc: bool, c: &ClockVector) -> Vec<Seq> {
        let own_fence = self.last_sc_fence(tid);
        let mut out = Vec::new();
        for (&t, list) in &self.hist[loc as usize].per_thread {
            let ft = self.last_sc_fence(t);
            let fb = self.sc_fence_before(t, own_fence);
            let last_store_before =
                |f: Seq| list.iter().rev().copied().find(|&x| x < f && self.is_write(x));
            let s1 = if is_sc { ft.and_then(last_store_before) } else { None };
            let s2 = own_fence.and_then(|f| list.iter().rev().copied().find(|&x| x < f && self.is_sc_write(x)));
            let s3 = fb.and_then(last_store_before);
            let s4 = list.iter().rev().copied().find(|&x| self.hb_cur(x, c));
            if let Some(m) = [s1, s2, s3, s4].into_iter().flatten().max() {
                out.push(self.get_write(m));
            }
        }
        out
    }

    /// Stores that must be mo-before a new store (or the store half of an
    /// RMW) by `tid` with clock `c`.
    pub fn write_prior_set(&self, tid: Tid, loc: Loc, mo: MemOrder, c: &ClockVector) -> Vec<Seq> {
        let mut set = BTreeSet::new();
        if mo.is_seq_cst() {
            set.extend(self.last_sc_store(loc));
        }
        set.extend(self.prior_elements(tid, loc, mo.is_seq_cst(), c));
        set.into_iter().collect()
    }

    /// Stores that must be mo-before `s` if the load reads from it, or `None`
    /// when one of them is already reachable from `s`.
    pub fn read_prior_set(&self, tid: Tid, loc: Loc, mo: MemOrder, c: &ClockVector, s: Seq) -> Option<Vec<Seq>> {
        let set: BTreeSet<Seq> = self
            .prior_elements(tid, loc, mo.is_seq_cst(), c)
            .into_iter()
            .filter(|&a| a != s)
            .collect();
        if set.iter().any(|&e| self.mograph.reachable(s, e)) {
            return None;
        }
        Some(set.into_iter().collect())
    }
}

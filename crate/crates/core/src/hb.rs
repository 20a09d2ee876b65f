//! Happens-before bookkeeping: per-thread clocks, fence clocks and the
//! reads-from clock carried by every store.

use crate::clocks::{ClockVector, Seq, Tid};
use crate::lang::MemOrder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadHB {
    pub tid: Tid,
    pub c: ClockVector,
    pub frel: ClockVector,
    pub facq: ClockVector,
    /// Last event of this thread.
    pub lsb: Option<Seq>,
    /// Fork event that created this thread.
    pub lasw: Option<Seq>,
}

impl ThreadHB {
    pub fn new(tid: Tid, c: ClockVector) -> ThreadHB {
        ThreadHB {
            tid,
            c,
            frel: ClockVector::new(),
            facq: ClockVector::new(),
            lsb: None,
            lasw: None,
        }
    }

    /// Child state at a Fork performed by `self` (whose clock already covers
    /// the fork event).
    pub fn fork_child(&self, child: Tid) -> ThreadHB {
        let mut t = ThreadHB::new(child, self.c.clone());
        t.lasw = self.lsb;
        t
    }

    /// Moves this thread's own slot to the event's sequence number.
    pub fn advance(&mut self, seq: Seq) {
        debug_assert!(seq > self.c.get(self.tid), "thread clock must increase");
        self.c.set(self.tid, seq);
        self.lsb = Some(seq);
    }

    /// Reads-from clock of a plain store.
    pub fn on_store(&self, mo: MemOrder) -> ClockVector {
        if mo.is_release() {
            self.c.clone()
        } else {
            self.frel.clone()
        }
    }

    pub fn on_load(&mut self, mo: MemOrder, rf: &ClockVector) {
        if mo.is_acquire() {
            self.c.union_with(rf);
        } else {
            self.facq.union_with(rf);
        }
    }

    /// Load half followed by the store half; the result extends any release
    /// sequence the source store belongs to.
    pub fn on_rmw(&mut self, mo: MemOrder, rf: &ClockVector) -> ClockVector {
        self.on_load(mo, rf);
        let base = if mo.is_release() { &self.c } else { &self.frel };
        base.union(rf)
    }

    pub fn on_fence(&mut self, mo: MemOrder) {
        // Acquire half first so a release half publishes what it acquired.
        if mo.is_acquire() {
            let facq = self.facq.clone();
            self.c.union_with(&facq);
        }
        if mo.is_release() {
            self.frel = self.c.clone();
        }
    }

    /// Parent side of a Join at event `seq` (already advanced).
    pub fn on_join(&mut self, child: &ThreadHB) {
        self.c.union_with(&child.c);
    }
}

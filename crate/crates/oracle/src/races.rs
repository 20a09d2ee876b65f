//! Happens-before between non-atomic accesses of a trace, computed from the
//! lifted execution rather than from clock vectors.

use wmm_core::race::AccessKind;
use wmm_core::trace::{NaAccess, Trace};

use crate::axioms::happens_before;
use crate::lift::lift_first;
use crate::model::{EvId, Kind};
use crate::rel::Rel;
use crate::OracleError;

pub struct NaOrder {
    hb: Rel,
    /// Per access: the thread event just before it and just after it.
    around: Vec<(usize, usize)>,
    /// Per access: thread path and position among that thread's accesses.
    order: Vec<(Vec<u32>, usize)>,
}

impl NaOrder {
    pub fn new(t: &Trace) -> Result<NaOrder, OracleError> {
        // hb does not depend on which mo extension is picked for traces the
        // engine produces (release sequences follow rf chains of RMWs)
        let x = lift_first(t)?;
        let hb = happens_before(&x);
        let find = |id: EvId| x.index_of(&id).unwrap();
        let mut around = Vec::new();
        let mut order = Vec::new();
        let mut count: std::collections::BTreeMap<Vec<u32>, usize> = Default::default();
        for a in &t.na_accesses {
            let path = t.thread_paths[a.tid as usize].clone();
            // position of `after` within its thread (0 = start marker)
            let prev_idx = match a.after {
                None => 0,
                Some(s) => t
                    .events
                    .iter()
                    .filter(|e| e.tid == a.tid && e.seq <= s)
                    .count() as u32,
            };
            let prev = find(EvId::Thread(path.clone(), prev_idx));
            let next = find(EvId::Thread(path.clone(), prev_idx + 1));
            debug_assert!(x.events[next].kind != Kind::Start);
            around.push((prev, next));
            let c = count.entry(path.clone()).or_default();
            order.push((path, *c));
            *c += 1;
        }
        Ok(NaOrder { hb, around, order })
    }

    /// Whether access `i` happens before access `j`.
    pub fn hb(&self, i: usize, j: usize) -> bool {
        if self.order[i].0 == self.order[j].0 {
            return self.order[i].1 < self.order[j].1;
        }
        let next_i = self.around[i].1;
        let prev_j = self.around[j].0;
        next_i == prev_j || self.hb.get(next_i, prev_j)
    }

    pub fn ordered(&self, i: usize, j: usize) -> bool {
        self.hb(i, j) || self.hb(j, i)
    }
}

/// Conflicting pairs of non-atomic accesses (same cell, at least one write,
/// different threads) not ordered by hb, as indices into `na_accesses`.
pub fn unordered_conflicts(t: &Trace) -> Result<Vec<(usize, usize)>, OracleError> {
    let o = NaOrder::new(t)?;
    let acc: &[NaAccess] = &t.na_accesses;
    let mut out = Vec::new();
    for i in 0..acc.len() {
        for j in i + 1..acc.len() {
            let (a, b) = (&acc[i], &acc[j]);
            if a.loc != b.loc || a.tid == b.tid {
                continue;
            }
            if a.kind == AccessKind::Read && b.kind == AccessKind::Read {
                continue;
            }
            if !o.ordered(i, j) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

//! Consistency predicate of the restricted axiomatic model.
//!
//! Implemented axioms, checked in this order (the first failure is reported):
//!
//! 1. well-formedness: every read has one rf source, a write to the same
//!    location with the value read; mo orders exactly the writes of each
//!    location; sc orders exactly the seq_cst events;
//! 2. RMW atomicity: an RMW immediately follows its rf source in mo;
//! 3. hb is acyclic, where hb = (sb ∪ asw ∪ sw ∪ init)+ and init events
//!    happen before every thread event;
//! 4. visibility: no read reads from a write it happens before;
//! 5. coherence: CoWW, CoRR, CoRW, CoWR;
//! 6. sc is consistent with hb and with mo on seq_cst writes;
//! 7. a seq_cst read of `m` reads the last seq_cst write to `m` before it in
//!    sc, or a non-seq_cst write that does not happen before that write;
//! 8. fence rules for reads: with `A` a write and `B` a read of the same
//!    location, `B` reads `A` or an mo-later write whenever
//!    (a) `A` is seq_cst, `A` sc `X`, `X` an sc fence sequenced before `B`;
//!    (b) `A` sb `X` for an sc fence `X`, `X` sc `B`, `B` seq_cst;
//!    (c) `A` sb `X`, `Y` sb `B`, `X` sc `Y` for sc fences `X`, `Y`;
//! 9. the same three patterns with `B` a write force `A` mo-before `B`;
//!    the write-write fencing variants follow the prior-set reading and are
//!    the interpretation-dependent part of this list;
//! 10. sb ∪ asw ∪ sc ∪ rf is acyclic.
//!
//! sw: an acquire read, or an acquire fence sequenced after any read, that
//! reads from the release sequence of `H` synchronizes with `H` when `H` is
//! a release write and with every release fence sequenced before `H`. The
//! release sequence of `H` is `H` followed by the maximal mo-contiguous run
//! of RMWs.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{Execution, Kind};
use crate::rel::Rel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Malformed(String),
    RmwAtomicity,
    HbCycle,
    NotVisible,
    CoWW,
    CoRR,
    CoRW,
    CoWR,
    ScOrder,
    ScRead,
    ScFenceRead,
    ScFenceWrite,
    Cycle,
}

impl Violation {
    pub fn tag(&self) -> &'static str {
        match self {
            Violation::Malformed(_) => "malformed",
            Violation::RmwAtomicity => "rmw-atomicity",
            Violation::HbCycle => "hb-cycle",
            Violation::NotVisible => "not-visible",
            Violation::CoWW => "coww",
            Violation::CoRR => "corr",
            Violation::CoRW => "corw",
            Violation::CoWR => "cowr",
            Violation::ScOrder => "sc-order",
            Violation::ScRead => "sc-read",
            Violation::ScFenceRead => "sc-fence-read",
            Violation::ScFenceWrite => "sc-fence-write",
            Violation::Cycle => "sb-asw-sc-rf-cycle",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Malformed(m) => write!(f, "malformed: {m}"),
            v => f.write_str(v.tag()),
        }
    }
}

/// Full check.
pub fn check_consistent(x: &Execution) -> Result<(), Violation> {
    well_formed(x)?;
    let hb = happens_before(x);
    check_core(x, &hb)?;
    check_sc(x, &hb)
}

pub(crate) fn well_formed(x: &Execution) -> Result<(), Violation> {
    let bad = |m: String| Err(Violation::Malformed(m));
    for (i, e) in x.events.iter().enumerate() {
        if e.is_read() {
            let Some(&w) = x.rf.get(&i) else {
                return bad(format!("{} has no rf source", e.id));
            };
            let we = &x.events[w];
            if !we.is_write() || we.loc != e.loc || we.wval != e.rval {
                return bad(format!("{} reads from incompatible {}", e.id, we.id));
            }
        }
    }
    if x.rf.keys().any(|&r| !x.events[r].is_read()) {
        return bad("rf from a non-read".into());
    }
    let mut writes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in x.events.iter().enumerate() {
        if e.is_write() {
            writes.entry(e.loc.as_deref().unwrap()).or_default().push(i);
        }
    }
    for (loc, ws) in &writes {
        let Some(order) = x.mo.get(*loc) else {
            return bad(format!("no mo for {loc}"));
        };
        let mut a = order.clone();
        a.sort_unstable();
        if &a != ws {
            return bad(format!("mo for {loc} is not a permutation of its writes"));
        }
    }
    if x.mo.len() != writes.len() {
        return bad("mo for a location without writes".into());
    }
    let mut sc = x.sc.clone();
    sc.sort_unstable();
    let scs: Vec<usize> = (0..x.events.len()).filter(|&i| x.events[i].is_sc()).collect();
    if sc != scs {
        return bad("sc is not a permutation of the seq_cst events".into());
    }
    Ok(())
}

/// Release-sequence membership: `rs[h]` lists the writes in the release
/// sequence headed by `h`.
fn release_sequences(x: &Execution) -> BTreeMap<usize, Vec<usize>> {
    let mut rs = BTreeMap::new();
    for order in x.mo.values() {
        for (i, &h) in order.iter().enumerate() {
            let mut members = vec![h];
            for &w in &order[i + 1..] {
                if x.events[w].kind != Kind::Rmw {
                    break;
                }
                members.push(w);
            }
            rs.insert(h, members);
        }
    }
    rs
}

pub(crate) fn synchronizes_with(x: &Execution) -> Vec<(usize, usize)> {
    let rs = release_sequences(x);
    let n = x.events.len();
    let mut out = Vec::new();
    for (&b, &w) in &x.rf {
        let targets: Vec<usize> = std::iter::once(b)
            .filter(|&b| x.events[b].is_acquire())
            .chain((0..n).filter(|&g| {
                let ge = &x.events[g];
                ge.kind == Kind::Fence && ge.is_acquire() && x.sb(b, g)
            }))
            .collect();
        if targets.is_empty() {
            continue;
        }
        for (&h, members) in &rs {
            if !members.contains(&w) {
                continue;
            }
            let he = &x.events[h];
            let sources = std::iter::once(h).filter(|_| he.is_release()).chain((0..n).filter(|&f| {
                let fe = &x.events[f];
                fe.kind == Kind::Fence && fe.is_release() && x.sb(f, h)
            }));
            for s in sources {
                for &t in &targets {
                    out.push((s, t));
                }
            }
        }
    }
    out
}

pub fn happens_before(x: &Execution) -> Rel {
    let n = x.events.len();
    let mut r = Rel::new(n);
    for (a, b) in x.sb_pairs() {
        r.add(a, b);
    }
    for &(a, b) in &x.asw {
        r.add(a, b);
    }
    for (a, b) in synchronizes_with(x) {
        r.add(a, b);
    }
    for i in 0..n {
        if x.events[i].kind == Kind::Init {
            for j in 0..n {
                if x.events[j].kind != Kind::Init {
                    r.add(i, j);
                }
            }
        }
    }
    r.closure();
    r
}

pub(crate) fn check_core(x: &Execution, hb: &Rel) -> Result<(), Violation> {
    let pos = x.mo_pos();
    for (&r, &w) in &x.rf {
        if x.events[r].kind == Kind::Rmw && pos[&r] != pos[&w] + 1 {
            return Err(Violation::RmwAtomicity);
        }
    }
    if (0..x.events.len()).any(|i| hb.get(i, i)) {
        return Err(Violation::HbCycle);
    }
    for (&r, &w) in &x.rf {
        if hb.get(r, w) {
            return Err(Violation::NotVisible);
        }
    }
    let n = x.events.len();
    let same_loc = |a: usize, b: usize| x.events[a].loc.is_some() && x.events[a].loc == x.events[b].loc;
    for a in 0..n {
        for b in 0..n {
            if a == b || !hb.get(a, b) || !same_loc(a, b) {
                continue;
            }
            let (ea, eb) = (&x.events[a], &x.events[b]);
            if ea.is_write() && eb.is_write() && pos[&a] >= pos[&b] {
                return Err(Violation::CoWW);
            }
            if ea.is_read() && eb.is_read() && pos[&x.rf[&a]] > pos[&x.rf[&b]] {
                return Err(Violation::CoRR);
            }
            if ea.is_read() && eb.is_write() && pos[&x.rf[&a]] >= pos[&b] {
                return Err(Violation::CoRW);
            }
            if ea.is_write() && eb.is_read() && pos[&a] > pos[&x.rf[&b]] {
                return Err(Violation::CoWR);
            }
        }
    }
    Ok(())
}

pub(crate) fn check_sc(x: &Execution, hb: &Rel) -> Result<(), Violation> {
    let n = x.events.len();
    let mut spos = vec![usize::MAX; n];
    for (i, &e) in x.sc.iter().enumerate() {
        spos[e] = i;
    }
    let before = |a: usize, b: usize| spos[a] != usize::MAX && spos[b] != usize::MAX && spos[a] < spos[b];
    let mpos = x.mo_pos();
    for &a in &x.sc {
        for &b in &x.sc {
            if hb.get(a, b) && !before(a, b) {
                return Err(Violation::ScOrder);
            }
            let (ea, eb) = (&x.events[a], &x.events[b]);
            if a != b && ea.is_write() && eb.is_write() && ea.loc == eb.loc && mpos[&a] < mpos[&b] && !before(a, b) {
                return Err(Violation::ScOrder);
            }
        }
    }

    // statement 3
    for (&b, &w) in &x.rf {
        let eb = &x.events[b];
        if !eb.is_sc() {
            continue;
        }
        let last = x.sc[..spos[b]]
            .iter()
            .rev()
            .copied()
            .find(|&a| x.events[a].is_write() && x.events[a].loc == eb.loc);
        if x.events[w].is_sc() {
            if Some(w) != last {
                return Err(Violation::ScRead);
            }
        } else if let Some(a) = last {
            if hb.get(w, a) {
                return Err(Violation::ScRead);
            }
        }
    }

    // fence patterns: `A` must be mo-at-or-before the write that `B` sees
    // (reads) or mo-before `B` (writes)
    let fences: Vec<usize> = x.sc.iter().copied().filter(|&f| x.events[f].kind == Kind::Fence).collect();
    let forced = |a: usize, b: usize| -> bool {
        let (ea, eb) = (&x.events[a], &x.events[b]);
        // (a) A sc, A sc X, X sb B
        let pa = ea.is_sc() && fences.iter().any(|&f| before(a, f) && x.sb(f, b));
        // (b) B sc, A sb X, X sc B
        let pb = eb.is_sc() && fences.iter().any(|&f| x.sb(a, f) && before(f, b));
        // (c) A sb X, X sc Y, Y sb B
        let pc = fences
            .iter()
            .any(|&f| x.sb(a, f) && fences.iter().any(|&g| before(f, g) && x.sb(g, b)));
        pa || pb || pc
    };
    for a in 0..n {
        let ea = &x.events[a];
        if !ea.is_write() {
            continue;
        }
        for b in 0..n {
            let eb = &x.events[b];
            if a == b || eb.loc != ea.loc || !(eb.is_read() || eb.is_write()) || !forced(a, b) {
                continue;
            }
            if eb.is_read() && mpos[&a] > mpos[&x.rf[&b]] {
                return Err(Violation::ScFenceRead);
            }
            if eb.is_write() && mpos[&a] >= mpos[&b] {
                return Err(Violation::ScFenceWrite);
            }
        }
    }

    let mut r = Rel::new(n);
    for (a, b) in x.sb_pairs() {
        r.add(a, b);
    }
    for &(a, b) in &x.asw {
        r.add(a, b);
    }
    for w in x.sc.windows(2) {
        r.add(w[0], w[1]);
    }
    for (&b, &w) in &x.rf {
        r.add(w, b);
    }
    for i in 0..n {
        if x.events[i].kind == Kind::Init {
            for j in 0..n {
                if x.events[j].kind != Kind::Init {
                    r.add(i, j);
                }
            }
        }
    }
    r.closure();
    if (0..n).any(|i| r.get(i, i)) {
        return Err(Violation::Cycle);
    }
    Ok(())
}

//! Exhaustive enumeration of the consistent executions of a small program.
//!
//! A direct interpreter walks every interleaving of visible statements and,
//! for every read, every write to the same location executed so far. States
//! reached along different interleavings with the same events, rf choices,
//! thread positions and non-atomic memory are explored once. Each complete
//! run yields a pre-execution; every mo linearization and sc order of it is
//! then filtered through the consistency check.

use std::collections::{BTreeMap, HashSet};

use wmm_core::lang::{Expr, MemOrder, Program, Stmt, StmtKind};

use crate::axioms::{check_core, check_sc, happens_before, well_formed};
use crate::canon::canonicalize;
use crate::model::{EvId, Execution, Kind, OEvent};
use crate::rel::Rel;
use crate::OracleError;

pub const DEFAULT_BOUND: usize = 8;

/// Cap on distinct interpreter states, as a guard against programs the event
/// bound does not catch (loops are unrolled, so this is never hit on bounded
/// programs in practice).
const STATE_CAP: usize = 2_000_000;

#[derive(Clone)]
struct Th<'p> {
    path: Vec<u32>,
    frames: Vec<(&'p [Stmt], usize)>,
    forks: u32,
    next_idx: u32,
    done: bool,
}

#[derive(Clone)]
struct St<'p> {
    threads: Vec<Th<'p>>,
    na: BTreeMap<String, i64>,
    handles: BTreeMap<String, usize>,
    events: Vec<OEvent>,
    rf: BTreeMap<usize, usize>,
    asw: Vec<(usize, usize)>,
    atomics: usize,
}

type EventKey = (EvId, Kind, Option<String>, Option<&'static str>, Option<i64>, Option<i64>, Option<EvId>);
type ThreadKey = (Vec<u32>, Vec<(usize, usize)>, u32, bool);

#[derive(PartialEq, Eq, Hash)]
struct Key {
    events: Vec<EventKey>,
    threads: Vec<ThreadKey>,
    na: BTreeMap<String, i64>,
    handles: BTreeMap<String, Vec<u32>>,
}

impl<'p> St<'p> {
    fn key(&self) -> Key {
        let mut events: Vec<EventKey> = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                (
                    e.id.clone(),
                    e.kind,
                    e.loc.clone(),
                    e.mo.map(|m| m.name()),
                    e.wval,
                    e.rval,
                    self.rf.get(&i).map(|&w| self.events[w].id.clone()),
                )
            })
            .collect();
        events.sort();
        let mut threads: Vec<ThreadKey> = self
            .threads
            .iter()
            .map(|t| {
                let frames = t.frames.iter().map(|(s, pc)| (s.as_ptr() as usize, *pc)).collect();
                (t.path.clone(), frames, t.forks, t.done)
            })
            .collect();
        threads.sort();
        Key {
            events,
            threads,
            na: self.na.clone(),
            handles: self
                .handles
                .iter()
                .map(|(h, &t)| (h.clone(), self.threads[t].path.clone()))
                .collect(),
        }
    }

    fn push_event(&mut self, t: usize, kind: Kind, loc: Option<&str>, mo: Option<MemOrder>) -> usize {
        let th = &mut self.threads[t];
        let id = EvId::Thread(th.path.clone(), th.next_idx);
        th.next_idx += 1;
        self.events.push(OEvent {
            id,
            kind,
            loc: loc.map(str::to_string),
            mo,
            wval: None,
            rval: None,
        });
        if matches!(kind, Kind::Load | Kind::Store | Kind::Rmw | Kind::Fence) {
            self.atomics += 1;
        }
        self.events.len() - 1
    }

    fn var(&self, n: &str) -> i64 {
        self.na.get(n).copied().unwrap_or(0)
    }

    fn eval(&self, e: &Expr) -> i64 {
        e.eval(&mut |n| self.var(n))
    }

    /// Next statement of `t`, dropping finished blocks.
    fn peek(&mut self, t: usize) -> Option<&'p Stmt> {
        let th = &mut self.threads[t];
        while let Some(&(stmts, pc)) = th.frames.last() {
            if pc < stmts.len() {
                return Some(&stmts[pc]);
            }
            th.frames.pop();
        }
        None
    }

    fn advance(&mut self, t: usize) {
        self.threads[t].frames.last_mut().unwrap().1 += 1;
    }

    fn run_local(&mut self, t: usize) {
        while let Some(s) = self.peek(t) {
            match &s.kind {
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.advance(t);
                    let b = if self.var(cond) != 0 { then_branch } else { else_branch };
                    self.threads[t].frames.push((&b[..], 0));
                }
                StmtKind::Assign { dst, expr } => {
                    self.advance(t);
                    let v = self.eval(expr);
                    self.na.insert(dst.clone(), v);
                }
                StmtKind::Assert { .. } | StmtKind::Empty => self.advance(t),
                _ => return,
            }
        }
        self.threads[t].done = true;
        self.push_event(t, Kind::End, None, None);
    }

    fn end_event(&self, t: usize) -> Option<usize> {
        let path = &self.threads[t].path;
        self.events
            .iter()
            .position(|e| e.kind == Kind::End && e.thread() == Some(path.as_slice()))
    }

    fn enabled(&mut self) -> Vec<usize> {
        let mut out = Vec::new();
        for t in 0..self.threads.len() {
            if self.threads[t].done {
                continue;
            }
            if let Some(Stmt {
                kind: StmtKind::Join { handle },
                ..
            }) = self.peek(t)
            {
                match self.handles.get(handle) {
                    Some(&c) if c != t && self.threads[c].done => {}
                    _ => continue,
                }
            }
            out.push(t);
        }
        out
    }

    fn writes_to(&self, loc: &str) -> Vec<usize> {
        (0..self.events.len())
            .filter(|&i| self.events[i].is_write() && self.events[i].loc.as_deref() == Some(loc))
            .collect()
    }

    /// Successor states of `t` taking its next visible statement.
    fn step(&self, t: usize) -> Vec<St<'p>> {
        let mut base = self.clone();
        let s = base.peek(t).expect("enabled thread has a statement");
        base.advance(t);
        let mut out = Vec::new();
        match &s.kind {
            StmtKind::Fork { handle, body } => {
                let f = base.push_event(t, Kind::Fork, None, None);
                let mut path = base.threads[t].path.clone();
                path.push(base.threads[t].forks);
                base.threads[t].forks += 1;
                base.threads.push(Th {
                    path,
                    frames: vec![(&body[..], 0)],
                    forks: 0,
                    next_idx: 0,
                    done: false,
                });
                let c = base.threads.len() - 1;
                let start = base.push_event(c, Kind::Start, None, None);
                base.asw.push((f, start));
                base.handles.insert(handle.clone(), c);
                base.run_local(c);
                out.push(base);
            }
            StmtKind::Join { handle } => {
                let c = base.handles[handle];
                let j = base.push_event(t, Kind::Join, None, None);
                let end = base.end_event(c).unwrap();
                base.asw.push((end, j));
                out.push(base);
            }
            StmtKind::Store { src, loc, mo } => {
                let v = base.var(src);
                let e = base.push_event(t, Kind::Store, Some(loc), Some(*mo));
                base.events[e].wval = Some(v);
                out.push(base);
            }
            StmtKind::Fence { mo } => {
                base.push_event(t, Kind::Fence, None, Some(*mo));
                out.push(base);
            }
            StmtKind::Load { dst, loc, mo } => {
                for w in base.writes_to(loc) {
                    let mut n = base.clone();
                    let v = n.events[w].wval.unwrap();
                    let e = n.push_event(t, Kind::Load, Some(loc), Some(*mo));
                    n.events[e].rval = Some(v);
                    n.rf.insert(e, w);
                    n.na.insert(dst.clone(), v);
                    out.push(n);
                }
            }
            StmtKind::Rmw { dst, loc, mo, functor } => {
                let operand = base.eval(functor.operand());
                for w in base.writes_to(loc) {
                    let mut n = base.clone();
                    let v = n.events[w].wval.unwrap();
                    let e = n.push_event(t, Kind::Rmw, Some(loc), Some(*mo));
                    n.events[e].rval = Some(v);
                    n.events[e].wval = Some(functor.apply(v, operand));
                    n.rf.insert(e, w);
                    if let Some(d) = dst {
                        n.na.insert(d.clone(), v);
                    }
                    out.push(n);
                }
            }
            _ => unreachable!("local statement at a scheduling point"),
        }
        for n in &mut out {
            n.run_local(t);
        }
        out
    }
}

/// Every complete run of `p` as a pre-execution (mo and sc left empty),
/// deduplicated and in a deterministic order.
pub fn pre_executions(p: &Program, bound: usize) -> Result<Vec<Execution>, OracleError> {
    if !p.aliases.is_empty() {
        return Err(OracleError::Unsupported("alias directives".into()));
    }
    let mut st = St {
        threads: vec![Th {
            path: Vec::new(),
            frames: vec![(&p.stmts[..], 0)],
            forks: 0,
            next_idx: 0,
            done: false,
        }],
        na: BTreeMap::new(),
        handles: BTreeMap::new(),
        events: Vec::new(),
        rf: BTreeMap::new(),
        asw: Vec::new(),
        atomics: 0,
    };
    for loc in p.atomic_locations() {
        st.events.push(OEvent {
            id: EvId::Init(loc.clone()),
            kind: Kind::Init,
            loc: Some(loc),
            mo: Some(MemOrder::Relaxed),
            wval: Some(0),
            rval: None,
        });
    }
    st.push_event(0, Kind::Start, None, None);
    st.run_local(0);

    let observed = p.observed();
    let mut seen: HashSet<Key> = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![st];
    while let Some(mut s) = stack.pop() {
        if s.atomics > bound {
            return Err(OracleError::BudgetExceeded { bound });
        }
        if !seen.insert(s.key()) {
            continue;
        }
        if seen.len() > STATE_CAP {
            return Err(OracleError::StateCapExceeded);
        }
        let en = s.enabled();
        if en.is_empty() {
            if s.threads.iter().all(|t| t.done) {
                out.push(Execution {
                    events: s.events.clone(),
                    asw: s.asw.clone(),
                    rf: s.rf.clone(),
                    mo: BTreeMap::new(),
                    sc: Vec::new(),
                    outcome: observed.iter().map(|n| (n.clone(), s.var(n))).collect(),
                });
            }
            continue;
        }
        for &t in en.iter().rev() {
            let mut next = s.step(t);
            next.reverse();
            stack.extend(next);
        }
    }
    Ok(out)
}

/// Stops as soon as `each` returns false.
pub(crate) fn linear_extensions(
    items: &[usize],
    must: &dyn Fn(usize, usize) -> bool,
    each: &mut dyn FnMut(&[usize]) -> bool,
) {
    fn go(
        rest: &mut Vec<usize>,
        acc: &mut Vec<usize>,
        must: &dyn Fn(usize, usize) -> bool,
        each: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if rest.is_empty() {
            return each(acc);
        }
        for i in 0..rest.len() {
            let x = rest[i];
            if rest.iter().any(|&y| y != x && must(y, x)) {
                continue;
            }
            rest.remove(i);
            acc.push(x);
            let more = go(rest, acc, must, each);
            acc.pop();
            rest.insert(i, x);
            if !more {
                return false;
            }
        }
        true
    }
    go(&mut items.to_vec(), &mut Vec::new(), must, each);
}

/// All consistent completions (mo and sc choices) of a pre-execution.
pub fn completions(pre: &Execution) -> Vec<Execution> {
    let mut per_loc: BTreeMap<String, (usize, Vec<usize>)> = BTreeMap::new();
    for (i, e) in pre.events.iter().enumerate() {
        if e.kind == Kind::Init {
            per_loc.insert(e.loc.clone().unwrap(), (i, Vec::new()));
        }
    }
    for (i, e) in pre.events.iter().enumerate() {
        if e.is_write() && e.kind != Kind::Init {
            per_loc.get_mut(e.loc.as_deref().unwrap()).unwrap().1.push(i);
        }
    }
    // mo must extend hb on writes (CoWW), and sb ∪ asw ∪ init is contained
    // in hb whatever mo is, so only its linear extensions are candidates;
    // an RMW must directly follow the write it reads
    let mut base = Rel::new(pre.events.len());
    for (a, b) in pre.sb_pairs() {
        base.add(a, b);
    }
    for &(a, b) in &pre.asw {
        base.add(a, b);
    }
    base.closure();
    let mut next_rmw: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&r, &w) in &pre.rf {
        if pre.events[r].kind == Kind::Rmw {
            next_rmw.entry(w).or_default().push(r);
        }
    }
    let choices: Vec<(String, Vec<Vec<usize>>)> = per_loc
        .into_iter()
        .map(|(l, (init, ws))| {
            let mut orders = Vec::new();
            linear_extensions(&ws, &|a, b| base.get(a, b), &mut |o| {
                let mut full = vec![init];
                full.extend_from_slice(o);
                let adjacent = full.iter().enumerate().all(|(i, w)| match next_rmw.get(w).map(Vec::as_slice) {
                    None => true,
                    Some([r]) => full.get(i + 1) == Some(r),
                    Some(_) => false,
                });
                if adjacent {
                    orders.push(full);
                }
                true
            });
            (l, orders)
        })
        .collect();
    if choices.iter().any(|(_, o)| o.is_empty()) {
        return Vec::new();
    }
    let sc_events: Vec<usize> = (0..pre.events.len()).filter(|&i| pre.events[i].is_sc()).collect();

    let mut out = Vec::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let mut x = pre.clone();
        x.mo = choices
            .iter()
            .zip(&idx)
            .map(|((l, orders), &k)| (l.clone(), orders[k].clone()))
            .collect();
        x.sc = sc_events.clone();
        if well_formed(&x).is_ok() {
            let hb = happens_before(&x);
            if check_core(&x, &hb).is_ok() {
                let mpos = x.mo_pos();
                let must = |a: usize, b: usize| {
                    hb.get(a, b) || {
                        let (ea, eb) = (&x.events[a], &x.events[b]);
                        ea.is_write() && eb.is_write() && ea.loc == eb.loc && mpos[&a] < mpos[&b]
                    }
                };
                let mut found = Vec::new();
                linear_extensions(&sc_events, &must, &mut |order| {
                    let mut y = x.clone();
                    y.sc = order.to_vec();
                    if check_sc(&y, &hb).is_ok() {
                        found.push(y);
                    }
                    true
                });
                out.extend(found);
            }
        }
        // odometer over per-location choices
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// All consistent executions of `p`, canonically sorted and deduplicated.
pub fn enumerate_consistent(p: &Program, bound: usize) -> Result<Vec<Execution>, OracleError> {
    let mut all = Vec::new();
    for pre in pre_executions(p, bound)? {
        all.extend(completions(&pre));
    }
    let mut keyed: Vec<_> = all.into_iter().map(|x| (canonicalize(&x), x)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    Ok(keyed.into_iter().map(|(_, x)| x).collect())
}

//! Lifting an engine trace to axiomatic executions.
//!
//! sb, asw and sc come from the trace's per-thread order, fork/join events
//! and global order; rf from the trace's links. mo is any linear extension of
//! the recorded mo constraints in which every RMW directly follows the write
//! it read, so one trace may lift to several executions.

use std::collections::BTreeMap;

use wmm_core::trace::{EventKind, Trace};
use wmm_core::Seq;

use crate::enumerate::linear_extensions;
use crate::model::{EvId, Execution, Kind, OEvent};
use crate::rel::Rel;
use crate::OracleError;

pub const DEFAULT_EXTENSION_BUDGET: usize = 10_000;

fn kind_of(k: EventKind) -> Kind {
    match k {
        EventKind::Init => Kind::Init,
        EventKind::Load => Kind::Load,
        EventKind::Store => Kind::Store,
        EventKind::Rmw => Kind::Rmw,
        EventKind::Fence => Kind::Fence,
        EventKind::Fork => Kind::Fork,
        EventKind::Join => Kind::Join,
    }
}

/// The lifted execution skeleton (mo left empty) plus the index of every
/// trace event in it.
pub fn lift_skeleton(t: &Trace) -> Result<(Execution, BTreeMap<Seq, usize>), OracleError> {
    if let Some(e) = &t.error {
        return Err(OracleError::BadTrace(format!("trace ended in error: {e}")));
    }
    if t.deadlock {
        return Err(OracleError::BadTrace("trace deadlocked".into()));
    }
    if t.events.iter().any(|e| e.promoted) {
        return Err(OracleError::Unsupported("promoted non-atomic stores".into()));
    }
    let nthreads = t.thread_paths.len();
    let mut events = Vec::new();
    let mut index: BTreeMap<Seq, usize> = BTreeMap::new();
    let mut next_idx = vec![1u32; nthreads];
    let mut start = vec![None; nthreads];
    let path = |tid: usize| t.thread_paths[tid].clone();

    for e in t.events.iter().filter(|e| e.kind == EventKind::Init) {
        let loc = t.loc_name(e.loc.unwrap()).to_string();
        index.insert(e.seq, events.len());
        events.push(OEvent {
            id: EvId::Init(loc.clone()),
            kind: Kind::Init,
            loc: Some(loc),
            mo: e.mo,
            wval: Some(e.value),
            rval: None,
        });
    }
    for (tid, s) in start.iter_mut().enumerate().skip(1) {
        *s = Some(events.len());
        events.push(OEvent {
            id: EvId::Thread(path(tid), 0),
            kind: Kind::Start,
            loc: None,
            mo: None,
            wval: None,
            rval: None,
        });
    }
    for e in t.events.iter().filter(|e| e.kind != EventKind::Init) {
        let tid = e.tid as usize;
        let kind = kind_of(e.kind);
        let (wval, rval) = match kind {
            Kind::Load => (None, Some(e.value)),
            Kind::Store => (Some(e.value), None),
            Kind::Rmw => (Some(e.value), e.read),
            _ => (None, None),
        };
        index.insert(e.seq, events.len());
        events.push(OEvent {
            id: EvId::Thread(path(tid), next_idx[tid]),
            kind,
            loc: e.loc.map(|l| t.loc_name(l).to_string()),
            mo: e.mo,
            wval,
            rval,
        });
        next_idx[tid] += 1;
    }
    let mut end = vec![None; nthreads];
    for (tid, slot) in end.iter_mut().enumerate().skip(1) {
        *slot = Some(events.len());
        events.push(OEvent {
            id: EvId::Thread(path(tid), next_idx[tid]),
            kind: Kind::End,
            loc: None,
            mo: None,
            wval: None,
            rval: None,
        });
    }

    let mut asw = Vec::new();
    let mut rf = BTreeMap::new();
    for e in &t.events {
        match e.kind {
            EventKind::Fork => asw.push((index[&e.seq], start[e.child.unwrap() as usize].unwrap())),
            EventKind::Join => asw.push((end[e.child.unwrap() as usize].unwrap(), index[&e.seq])),
            _ => {}
        }
        if e.kind.is_read() {
            let w = e.rf.ok_or_else(|| OracleError::BadTrace(format!("read {} without rf", e.seq)))?;
            rf.insert(index[&e.seq], index[&w]);
        }
    }
    let sc = t.events.iter().filter(|e| e.is_sc()).map(|e| index[&e.seq]).collect();
    let x = Execution {
        events,
        asw,
        rf,
        mo: BTreeMap::new(),
        sc,
        outcome: t.outcome.clone(),
    };
    Ok((x, index))
}

/// Every mo linear extension of the trace's constraints, capped at `budget`
/// executions.
pub fn lift_trace(t: &Trace, budget: usize) -> Result<Vec<Execution>, OracleError> {
    lift(t, budget, false)
}

/// One lifted execution (the first mo extension).
pub fn lift_first(t: &Trace) -> Result<Execution, OracleError> {
    Ok(lift(t, 1, true)?.remove(0))
}

fn lift(t: &Trace, budget: usize, first_only: bool) -> Result<Vec<Execution>, OracleError> {
    let (x, index) = lift_skeleton(t)?;
    let mut rmw_next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(w, r) in &t.rmw_pairs {
        rmw_next.insert(index[&w], index[&r]);
    }
    let mut per_loc: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in x.events.iter().enumerate() {
        if e.is_write() {
            per_loc.entry(e.loc.clone().unwrap()).or_default().push(i);
        }
    }
    let mut choices: Vec<(String, Vec<Vec<usize>>)> = Vec::new();
    let mut total = 1usize;
    for (loc, ws) in per_loc {
        let local: BTreeMap<usize, usize> = ws.iter().enumerate().map(|(k, &w)| (w, k)).collect();
        let m = ws.len();
        let mut reach = Rel::new(m);
        for &(a, b) in t.constraints.iter().chain(&t.rmw_pairs) {
            if let (Some(&i), Some(&j)) = (local.get(&index[&a]), local.get(&index[&b])) {
                reach.add(i, j);
            }
        }
        reach.closure();
        let mut orders = Vec::new();
        let mut over = false;
        linear_extensions(&ws, &|a, b| reach.get(local[&a], local[&b]), &mut |order| {
            let adjacent = order
                .windows(2)
                .all(|w| rmw_next.get(&w[0]).is_none_or(|&r| r == w[1]));
            if adjacent {
                orders.push(order.to_vec());
                over = orders.len() > budget;
            }
            !over && !(first_only && adjacent)
        });
        total = total.saturating_mul(orders.len());
        if over || total > budget {
            return Err(OracleError::ExtensionBudgetExceeded { budget });
        }
        choices.push((loc, orders));
    }
    if choices.iter().any(|(_, o)| o.is_empty()) {
        return Err(OracleError::BadTrace("mo constraints are cyclic".into()));
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let mut y = x.clone();
        y.mo = choices
            .iter()
            .zip(&idx)
            .map(|((l, orders), &k)| (l.clone(), orders[k].clone()))
            .collect();
        out.push(y);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(out);
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

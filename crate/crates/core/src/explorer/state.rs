use std::collections::{BTreeMap, BTreeSet};

use crate::clocks::{ClockVector, Seq, Tid};
use crate::hb::ThreadHB;
use crate::lang::{walk, Expr, MemOrder, Program, Span, Stmt, StmtKind};
use crate::mograph::{Loc, MoGraph};
use crate::prune::{PruneConfig, PruneMode};
use crate::race::{AccessKind, RaceDetector};
use crate::trace::{AssertFailure, Event, EventKind, NaAccess, Trace, PROGRAM_ERROR};

use super::plugin::Plugin;

/// Per-location access lists, one per thread, in sequence order.
#[derive(Clone, Debug, Default)]
pub struct LocationHistory {
    pub per_thread: BTreeMap<Tid, Vec<Seq>>,
}

impl LocationHistory {
    pub fn len(&self) -> usize {
        self.per_thread.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, tid: Tid, seq: Seq) {
        self.per_thread.entry(tid).or_default().push(seq);
    }

    pub fn all(&self) -> impl Iterator<Item = Seq> + '_ {
        self.per_thread.values().flatten().copied()
    }
}

pub(crate) struct Thread<'p> {
    pub hb: ThreadHB,
    frames: Vec<(&'p [Stmt], usize)>,
    pub finished: bool,
    forks: u32,
}

/// Whole-system state of one execution.
pub struct ExecState<'p> {
    prog: &'p Program,
    pub(crate) trace: Trace,
    /// Thread clock right after each event (index seq - 1).
    pub(crate) clocks: Vec<ClockVector>,
    /// Reads-from clock of every live store/RMW.
    pub(crate) rf_clocks: BTreeMap<Seq, ClockVector>,
    pub(crate) threads: Vec<Thread<'p>>,
    pub(crate) hist: Vec<LocationHistory>,
    pub(crate) sc_fences: BTreeMap<Tid, Vec<Seq>>,
    /// Release/acquire fence records; semantics live in the thread clocks,
    /// these exist so pruning can account for them.
    pub(crate) other_fences: BTreeMap<Tid, Vec<Seq>>,
    pub(crate) read_by_rmw: BTreeSet<Seq>,
    pub(crate) mograph: MoGraph,
    pub(crate) nalocs: BTreeMap<String, i64>,
    race: RaceDetector,
    shared: BTreeSet<String>,
    loc_index: BTreeMap<String, Loc>,
    alias_na: BTreeMap<String, Loc>,
    alias_of: BTreeMap<Loc, String>,
    pending_promotion: BTreeMap<String, (i64, Span)>,
    race_keys: BTreeSet<(crate::race::RaceKind, Span, Span)>,
    pub(crate) prune: PruneConfig,
    check_cycles: bool,
}

/// Non-atomic names accessed by at least two thread bodies, ignoring
/// load/RMW destinations and fork handles.
pub fn shared_cells(prog: &Program) -> BTreeSet<String> {
    fn body_names(stmts: &[Stmt], out: &mut BTreeSet<String>, bodies: &mut Vec<BTreeSet<String>>) {
        for s in stmts {
            let mut vars = Vec::new();
            match &s.kind {
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    vars.push(cond.clone());
                    body_names(then_branch, out, bodies);
                    body_names(else_branch, out, bodies);
                }
                StmtKind::Assign { dst, expr } => {
                    vars.push(dst.clone());
                    expr.vars(&mut vars);
                }
                StmtKind::Fork { body, .. } => {
                    let mut inner = BTreeSet::new();
                    body_names(body, &mut inner, bodies);
                    bodies.push(inner);
                }
                StmtKind::Store { src, .. } => vars.push(src.clone()),
                StmtKind::Rmw { functor, .. } => functor.operand().vars(&mut vars),
                StmtKind::Assert { expr } => expr.vars(&mut vars),
                StmtKind::Load { .. } | StmtKind::Join { .. } | StmtKind::Fence { .. } | StmtKind::Empty => {}
            }
            out.extend(vars);
        }
    }
    let mut bodies = Vec::new();
    let mut main = BTreeSet::new();
    body_names(&prog.stmts, &mut main, &mut bodies);
    bodies.push(main);
    let mut handles = BTreeSet::new();
    walk(&prog.stmts, &mut |s| {
        if let StmtKind::Fork { handle, .. } = &s.kind {
            handles.insert(handle.clone());
        }
    });
    let mut count: BTreeMap<String, usize> = BTreeMap::new();
    for b in &bodies {
        for n in b {
            *count.entry(n.clone()).or_default() += 1;
        }
    }
    count
        .into_iter()
        .filter(|(n, c)| *c >= 2 && !handles.contains(n))
        .map(|(n, _)| n)
        .collect()
}

type StepResult = Result<(), String>;

impl<'p> ExecState<'p> {
    pub fn new(prog: &'p Program, prune: PruneConfig, check_cycles: bool) -> ExecState<'p> {
        let loc_names = prog.atomic_locations();
        let k = loc_names.len() as Seq;
        let mut st = ExecState {
            prog,
            trace: Trace {
                loc_names: loc_names.clone(),
                thread_paths: vec![Vec::new(), Vec::new()],
                ..Trace::default()
            },
            clocks: Vec::new(),
            rf_clocks: BTreeMap::new(),
            threads: Vec::new(),
            hist: vec![LocationHistory::default(); loc_names.len()],
            sc_fences: BTreeMap::new(),
            other_fences: BTreeMap::new(),
            read_by_rmw: BTreeSet::new(),
            mograph: MoGraph::new(),
            nalocs: BTreeMap::new(),
            race: RaceDetector::new(),
            shared: shared_cells(prog),
            loc_index: loc_names.iter().enumerate().map(|(i, n)| (n.clone(), i as Loc)).collect(),
            alias_na: BTreeMap::new(),
            alias_of: BTreeMap::new(),
            pending_promotion: BTreeMap::new(),
            race_keys: BTreeSet::new(),
            prune,
            check_cycles,
        };
        for (na, a) in &prog.aliases {
            let l = st.loc_index[a];
            st.alias_na.insert(na.clone(), l);
            st.alias_of.insert(l, na.clone());
        }
        // Initialization stores: pseudo-thread 0, hb-before everything.
        for (i, _) in loc_names.iter().enumerate() {
            let seq = i as Seq + 1;
            st.push_event(Event {
                seq,
                tid: 0,
                kind: EventKind::Init,
                loc: Some(i as Loc),
                mo: Some(MemOrder::Relaxed),
                value: 0,
                read: None,
                rf: None,
                child: None,
                stmt: Span::default(),
                promoted: false,
            });
            st.clocks.push(ClockVector::bottom(0, seq));
            st.rf_clocks.insert(seq, ClockVector::new());
            st.mograph.get_node(seq, 0, i as Loc);
            st.hist[i].push(0, seq);
        }
        let init_cv = if k > 0 { ClockVector::bottom(0, k) } else { ClockVector::new() };
        st.threads.push(Thread {
            hb: ThreadHB::new(0, init_cv.clone()),
            frames: Vec::new(),
            finished: true,
            forks: 0,
        });
        st.threads.push(Thread {
            hb: ThreadHB::new(1, init_cv),
            frames: vec![(&prog.stmts[..], 0)],
            finished: false,
            forks: 0,
        });
        st
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn mograph(&self) -> &MoGraph {
        &self.mograph
    }

    pub fn history(&self, loc: Loc) -> &LocationHistory {
        &self.hist[loc as usize]
    }

    pub fn loc_of(&self, name: &str) -> Option<Loc> {
        self.loc_index.get(name).copied()
    }

    pub fn thread_clock(&self, tid: Tid) -> &ClockVector {
        &self.threads[tid as usize].hb.c
    }

    pub fn running_threads(&self) -> Vec<Tid> {
        (1..self.threads.len() as Tid)
            .filter(|&t| !self.threads[t as usize].finished)
            .collect()
    }

    pub(crate) fn ev(&self, seq: Seq) -> &Event {
        &self.trace.events[(seq - 1) as usize]
    }

    fn next_seq(&self) -> Seq {
        self.trace.events.len() as Seq + 1
    }

    fn push_event(&mut self, e: Event) {
        debug_assert_eq!(e.seq, self.next_seq());
        self.trace.events.push(e);
    }

    /// Number of atomic records still held in histories and fence lists.
    pub fn live_records(&self) -> usize {
        self.hist.iter().map(LocationHistory::len).sum::<usize>()
            + self.sc_fences.values().map(Vec::len).sum::<usize>()
            + self.other_fences.values().map(Vec::len).sum::<usize>()
    }

    // ---- statement cursor ----

    fn peek(&mut self, tid: Tid) -> Option<&'p Stmt> {
        let th = &mut self.threads[tid as usize];
        loop {
            let (stmts, pc) = *th.frames.last()?;
            if pc < stmts.len() {
                return Some(&stmts[pc]);
            }
            th.frames.pop();
        }
    }

    fn bump_pc(&mut self, tid: Tid) {
        self.threads[tid as usize].frames.last_mut().unwrap().1 += 1;
    }

    /// Next visible statement of a thread (invisible prefixes are always
    /// consumed eagerly, so this is the top of the cursor).
    pub(crate) fn next_visible(&self, tid: Tid) -> Option<&'p Stmt> {
        let th = &self.threads[tid as usize];
        let &(stmts, pc) = th.frames.last()?;
        stmts.get(pc)
    }

    // ---- non-atomic memory ----

    fn epoch(&self, tid: Tid) -> Seq {
        self.threads[tid as usize].hb.c.get(tid)
    }

    fn na_access(&mut self, tid: Tid, name: &str, kind: AccessKind, stmt: Span) {
        if !self.shared.contains(name) {
            return;
        }
        let epoch = self.epoch(tid);
        let th = &self.threads[tid as usize];
        let after = th.hb.lsb;
        let c = th.hb.c.clone();
        self.trace.na_accesses.push(NaAccess {
            tid,
            after,
            kind,
            loc: name.to_string(),
            stmt,
            clock: c.clone(),
        });
        for r in self.race.access(name, kind, tid, &c, epoch, stmt) {
            if self.race_keys.insert(r.key()) {
                self.trace.races.push(r);
            }
        }
    }

    fn na_read(&mut self, tid: Tid, name: &str, stmt: Span) -> i64 {
        self.na_access(tid, name, AccessKind::Read, stmt);
        self.nalocs.get(name).copied().unwrap_or(0)
    }

    fn na_write(&mut self, tid: Tid, name: &str, v: i64, stmt: Span) {
        self.na_access(tid, name, AccessKind::Write, stmt);
        self.nalocs.insert(name.to_string(), v);
        if self.alias_na.contains_key(name) {
            self.pending_promotion.insert(name.to_string(), (v, stmt));
        }
    }

    fn eval(&mut self, tid: Tid, e: &Expr, stmt: Span) -> i64 {
        e.eval(&mut |name| self.na_read(tid, name, stmt))
    }

    // ---- execution ----

    /// Runs invisible statements until the thread reaches a visible one or
    /// finishes.
    fn run_invisible(&mut self, tid: Tid) {
        while let Some(stmt) = self.peek(tid) {
            let span = stmt.span;
            match &stmt.kind {
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.bump_pc(tid);
                    let v = self.na_read(tid, cond, span);
                    let branch = if v != 0 { then_branch } else { else_branch };
                    self.threads[tid as usize].frames.push((&branch[..], 0));
                }
                StmtKind::Assign { dst, expr } => {
                    self.bump_pc(tid);
                    let v = self.eval(tid, expr, span);
                    self.na_write(tid, dst, v, span);
                }
                StmtKind::Assert { expr } => {
                    self.bump_pc(tid);
                    if self.eval(tid, expr, span) == 0 {
                        self.trace.asserts.push(AssertFailure { tid, stmt: span });
                    }
                }
                StmtKind::Empty => self.bump_pc(tid),
                _ => return,
            }
        }
        self.threads[tid as usize].finished = true;
    }

    fn join_target(&self, tid: Tid, handle: &str) -> Result<Tid, String> {
        let h = self.nalocs.get(handle).copied().unwrap_or(0);
        if h < 2 || h >= self.threads.len() as i64 || h == tid as i64 {
            return Err(format!("{PROGRAM_ERROR}Join on `{handle}` which holds no forked thread (value {h})"));
        }
        Ok(h as Tid)
    }

    /// Threads that can take a step, in tid order.
    pub fn enabled(&self) -> Vec<Tid> {
        let mut out = Vec::new();
        for tid in 1..self.threads.len() as Tid {
            let th = &self.threads[tid as usize];
            if th.finished {
                continue;
            }
            if let Some(Stmt {
                kind: StmtKind::Join { handle },
                ..
            }) = self.next_visible(tid)
            {
                // a handle that holds no thread yet may still be assigned
                // by another thread; the join waits like any other
                match self.join_target(tid, handle) {
                    Ok(child) if self.threads[child as usize].finished => {}
                    _ => continue,
                }
            }
            out.push(tid);
        }
        out
    }

    fn new_event(&mut self, tid: Tid, kind: EventKind, stmt: Span) -> Event {
        let seq = self.next_seq();
        self.threads[tid as usize].hb.advance(seq);
        Event {
            seq,
            tid,
            kind,
            loc: None,
            mo: None,
            value: 0,
            read: None,
            rf: None,
            child: None,
            stmt,
            promoted: false,
        }
    }

    fn commit(&mut self, e: Event) -> StepResult {
        let tid = e.tid;
        let is_atomic_access = matches!(e.kind, EventKind::Load | EventKind::Store | EventKind::Rmw);
        if is_atomic_access {
            self.hist[e.loc.unwrap() as usize].push(tid, e.seq);
        }
        self.clocks.push(self.threads[tid as usize].hb.c.clone());
        self.push_event(e);
        if self.check_cycles && self.mograph.has_cycle() {
            return Err("mo-graph cycle after commit".into());
        }
        Ok(())
    }

    /// mo constraint a before b through the graph, logged for lifting.
    fn constrain(&mut self, a: Seq, b: Seq) {
        let (from, to) = self.mograph.add_constraint(a, b);
        if from != to && !self.trace.rmw_pairs.contains(&(from, to)) {
            self.trace.constraints.push((from, to));
        }
    }

    /// Moves a pending non-atomic write of an aliased cell into the atomic
    /// location's history as a store of pseudo-thread 0.
    fn promote_alias(&mut self, loc: Loc) -> StepResult {
        let Some(na) = self.alias_of.get(&loc).cloned() else {
            return Ok(());
        };
        let Some((value, stmt)) = self.pending_promotion.remove(&na) else {
            return Ok(());
        };
        let seq = self.next_seq();
        let c = ClockVector::bottom(0, seq);
        let wps = self.write_prior_set(0, loc, MemOrder::Relaxed, &c);
        self.mograph.get_node(seq, 0, loc);
        for e in wps {
            self.constrain(e, seq);
        }
        self.rf_clocks.insert(seq, ClockVector::new());
        self.hist[loc as usize].push(0, seq);
        self.clocks.push(c);
        self.push_event(Event {
            seq,
            tid: 0,
            kind: EventKind::Store,
            loc: Some(loc),
            mo: Some(MemOrder::Relaxed),
            value,
            read: None,
            rf: None,
            child: None,
            stmt,
            promoted: true,
        });
        Ok(())
    }

    /// Chooses among the accepted candidates of a load or RMW.
    fn choose(&mut self, accepted: &[(Seq, Vec<Seq>)], plugin: &mut dyn Plugin) -> Result<usize, String> {
        if accepted.is_empty() {
            return Err("no store passed the prior-set check".into());
        }
        let seqs: Vec<Seq> = accepted.iter().map(|(s, _)| *s).collect();
        let i = plugin.select_store(&seqs);
        if i >= seqs.len() {
            return Err("plugin chose a store outside the offered set".into());
        }
        Ok(i)
    }

    /// Executes the visible statement at the top of `tid`'s cursor and then
    /// its invisible suffix.
    pub fn step(&mut self, tid: Tid, plugin: &mut dyn Plugin) -> StepResult {
        let stmt = self.next_visible(tid).ok_or("step on a finished thread")?;
        let span = stmt.span;
        match &stmt.kind {
            StmtKind::Fork { handle, body } => {
                self.bump_pc(tid);
                let mut e = self.new_event(tid, EventKind::Fork, span);
                let child = self.threads.len() as Tid;
                let parent = &mut self.threads[tid as usize];
                let ordinal = parent.forks;
                parent.forks += 1;
                let hb = parent.hb.fork_child(child);
                let mut path = self.trace.thread_paths[tid as usize].clone();
                path.push(ordinal);
                self.trace.thread_paths.push(path);
                self.threads.push(Thread {
                    hb,
                    frames: vec![(&body[..], 0)],
                    finished: false,
                    forks: 0,
                });
                self.nalocs.insert(handle.clone(), child as i64);
                e.child = Some(child);
                self.commit(e)?;
                self.run_invisible(child);
            }
            StmtKind::Join { handle } => {
                let child = self.join_target(tid, handle)?;
                self.bump_pc(tid);
                let mut e = self.new_event(tid, EventKind::Join, span);
                let child_hb = self.threads[child as usize].hb.clone();
                let th = &mut self.threads[tid as usize];
                th.hb.on_join(&child_hb);
                // Everything the child did precedes the join.
                let at = th.hb.c.get(child).max(e.seq);
                th.hb.c.set(child, at);
                e.child = Some(child);
                self.commit(e)?;
            }
            StmtKind::Load { dst, loc, mo } => {
                self.bump_pc(tid);
                let l = self.loc_index[loc];
                self.promote_alias(l)?;
                let mut e = self.new_event(tid, EventKind::Load, span);
                let c = self.threads[tid as usize].hb.c.clone();
                let accepted: Vec<(Seq, Vec<Seq>)> = self
                    .may_read_from(tid, l, *mo, false, &c)
                    .into_iter()
                    .filter_map(|s| self.read_prior_set(tid, l, *mo, &c, s).map(|p| (s, p)))
                    .collect();
                let (s, pset) = accepted[self.choose(&accepted, plugin)?].clone();
                let rf = self.rf_clocks[&s].clone();
                self.threads[tid as usize].hb.on_load(*mo, &rf);
                for a in pset {
                    self.constrain(a, s);
                }
                let v = self.ev(s).value;
                self.nalocs.insert(dst.clone(), v);
                e.loc = Some(l);
                e.mo = Some(*mo);
                e.value = v;
                e.rf = Some(s);
                self.commit(e)?;
            }
            StmtKind::Store { src, loc, mo } => {
                self.bump_pc(tid);
                let l = self.loc_index[loc];
                self.promote_alias(l)?;
                let v = self.na_read(tid, src, span);
                let mut e = self.new_event(tid, EventKind::Store, span);
                let c = self.threads[tid as usize].hb.c.clone();
                let wps = self.write_prior_set(tid, l, *mo, &c);
                let rf = self.threads[tid as usize].hb.on_store(*mo);
                self.mograph.get_node(e.seq, tid, l);
                for a in wps {
                    self.constrain(a, e.seq);
                }
                self.rf_clocks.insert(e.seq, rf);
                if let Some(na) = self.alias_of.get(&l).cloned() {
                    self.race.note_atomic_write(&na);
                }
                e.loc = Some(l);
                e.mo = Some(*mo);
                e.value = v;
                self.commit(e)?;
            }
            StmtKind::Rmw { dst, loc, mo, functor } => {
                self.bump_pc(tid);
                let l = self.loc_index[loc];
                self.promote_alias(l)?;
                let operand = self.eval(tid, functor.operand(), span);
                let mut e = self.new_event(tid, EventKind::Rmw, span);
                let seq = e.seq;
                let c = self.threads[tid as usize].hb.c.clone();
                let wps = self.write_prior_set(tid, l, *mo, &c);
                let accepted: Vec<(Seq, Vec<Seq>)> = self
                    .may_read_from(tid, l, *mo, true, &c)
                    .into_iter()
                    .filter_map(|s| {
                        let p = self.read_prior_set(tid, l, *mo, &c, s)?;
                        // The RMW lands immediately after s, so its write
                        // prior set must be orderable before s as well.
                        if wps.iter().any(|&w| w != s && self.mograph.reachable(s, w)) {
                            return None;
                        }
                        Some((s, p))
                    })
                    .collect();
                let (s, pset) = accepted[self.choose(&accepted, plugin)?].clone();
                let rf = self.rf_clocks[&s].clone();
                let out_rf = self.threads[tid as usize].hb.on_rmw(*mo, &rf);
                let loaded = self.ev(s).value;
                let stored = functor.apply(loaded, operand);
                self.mograph.get_node(seq, tid, l);
                for a in pset {
                    self.constrain(a, s);
                }
                self.mograph.add_rmw_edge(s, seq);
                self.trace.rmw_pairs.push((s, seq));
                self.read_by_rmw.insert(s);
                for a in wps {
                    if a != s {
                        self.constrain(a, seq);
                    }
                }
                self.rf_clocks.insert(seq, out_rf);
                if let Some(d) = dst {
                    self.nalocs.insert(d.clone(), loaded);
                }
                if let Some(na) = self.alias_of.get(&l).cloned() {
                    self.race.note_atomic_write(&na);
                }
                e.loc = Some(l);
                e.mo = Some(*mo);
                e.value = stored;
                e.read = Some(loaded);
                e.rf = Some(s);
                self.commit(e)?;
            }
            StmtKind::Fence { mo } => {
                self.bump_pc(tid);
                let mut e = self.new_event(tid, EventKind::Fence, span);
                self.threads[tid as usize].hb.on_fence(*mo);
                if mo.is_seq_cst() {
                    self.sc_fences.entry(tid).or_default().push(e.seq);
                } else {
                    self.other_fences.entry(tid).or_default().push(e.seq);
                }
                e.mo = Some(*mo);
                self.commit(e)?;
            }
            _ => return Err("step on an invisible statement".into()),
        }
        self.run_invisible(tid);
        Ok(())
    }

    fn is_batchable_store(&self, tid: Tid) -> bool {
        matches!(
            self.next_visible(tid),
            Some(Stmt {
                kind: StmtKind::Store {
                    mo: MemOrder::Relaxed | MemOrder::Release,
                    ..
                },
                ..
            })
        )
    }

    /// Runs the main thread up to its first visible statement. `run` does
    /// this itself; callers driving `step` by hand call it once first.
    pub fn start(&mut self) {
        self.run_invisible(1);
    }

    /// The exploration loop: pick an enabled thread, step it, repeat.
    pub fn run(&mut self, plugin: &mut dyn Plugin) {
        self.start();
        if let Err(e) = self.run_loop(plugin) {
            self.trace.error = Some(e);
        }
        self.finish();
    }

    fn run_loop(&mut self, plugin: &mut dyn Plugin) -> StepResult {
        loop {
            let en = self.enabled();
            if en.is_empty() {
                for tid in self.running_threads() {
                    if let Some(Stmt {
                        kind: StmtKind::Join { handle },
                        ..
                    }) = self.next_visible(tid)
                    {
                        self.join_target(tid, handle)?;
                    }
                }
                if !self.running_threads().is_empty() {
                    self.trace.deadlock = true;
                }
                return Ok(());
            }
            let i = plugin.select_thread(&en);
            let tid = *en.get(i).ok_or("plugin chose a thread outside the enabled set")?;
            let batch = plugin.batching() && self.is_batchable_store(tid);
            self.step(tid, plugin)?;
            if batch {
                while self.is_batchable_store(tid) {
                    self.step(tid, plugin)?;
                }
            }
            if self.prune.mode != PruneMode::Off && self.live_records() > self.prune.trigger {
                let stats = match self.prune.mode {
                    PruneMode::Conservative => self.prune_conservative(),
                    PruneMode::Aggressive => self.prune_aggressive(self.prune.window),
                    PruneMode::Off => unreachable!(),
                };
                self.trace.prune.add(&stats);
            }
        }
    }

    fn finish(&mut self) {
        self.trace.outcome = self
            .prog
            .observed()
            .into_iter()
            .map(|n| {
                let v = self.nalocs.get(&n).copied().unwrap_or(0);
                (n, v)
            })
            .collect();
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

//! Drives executions: one run per seed, or an exhaustive walk of the decision
//! tree, collecting traces and aggregate findings.

mod plugin;
mod state;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

pub use plugin::{ExhaustivePlugin, Plugin, RandomPlugin};
pub use state::{shared_cells, ExecState, LocationHistory};

use crate::lang::{Program, Span};
use crate::prune::PruneConfig;
use crate::race::{RaceKind, RaceReport};
use crate::trace::{AssertFailure, PruneStats, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreConfig {
    pub prune: PruneConfig,
    /// Run an explicit cycle search over the mo-graph after every commit.
    pub check_cycles: bool,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            prune: PruneConfig::off(),
            check_cycles: cfg!(debug_assertions),
        }
    }
}

/// Runs one execution. The plugin is told the run starts but not that it
/// ends; batch drivers call `end_run`.
pub fn explore(prog: &Program, plugin: &mut dyn Plugin, seed: u64, cfg: &ExploreConfig) -> Trace {
    plugin.begin_run(seed);
    let mut st = ExecState::new(prog, cfg.prune, cfg.check_cycles);
    st.run(plugin);
    st.into_trace()
}

pub type Outcome = Vec<(String, i64)>;

/// Aggregate over a batch of runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub runs: u64,
    pub histogram: BTreeMap<Outcome, u64>,
    /// Each distinct (kind, statement pair) once, in first-seen order.
    pub races: Vec<RaceReport>,
    pub asserts: Vec<AssertFailure>,
    pub runs_with_race: u64,
    pub runs_with_assert: u64,
    pub runs_with_findings: u64,
    pub deadlocks: u64,
    pub errors: Vec<(u64, String)>,
    pub prune: PruneStats,
    race_keys: BTreeSet<(RaceKind, Span, Span)>,
    assert_keys: BTreeSet<Span>,
}

impl Summary {
    pub fn add(&mut self, seed: u64, t: &Trace) {
        self.runs += 1;
        *self.histogram.entry(t.outcome.clone()).or_default() += 1;
        for r in &t.races {
            if self.race_keys.insert(r.key()) {
                self.races.push(r.clone());
            }
        }
        for a in &t.asserts {
            if self.assert_keys.insert(a.stmt) {
                self.asserts.push(a.clone());
            }
        }
        self.runs_with_race += !t.races.is_empty() as u64;
        self.runs_with_assert += !t.asserts.is_empty() as u64;
        self.runs_with_findings += t.has_findings() as u64;
        self.deadlocks += t.deadlock as u64;
        if let Some(e) = &t.error {
            self.errors.push((seed, e.clone()));
        }
        self.prune.add(&t.prune);
    }

    pub fn has_findings(&self) -> bool {
        self.runs_with_findings > 0
    }
}

/// Explores once per seed, feeding each trace to `each`. Stops early when
/// the plugin reports it has nothing left.
pub fn run_many_with(
    prog: &Program,
    plugin: &mut dyn Plugin,
    seeds: Range<u64>,
    cfg: &ExploreConfig,
    mut each: impl FnMut(u64, &Trace),
) -> Summary {
    let mut sum = Summary::default();
    for seed in seeds {
        let t = explore(prog, plugin, seed, cfg);
        sum.add(seed, &t);
        each(seed, &t);
        if !plugin.end_run() {
            break;
        }
    }
    sum
}

pub fn run_many(prog: &Program, plugin: &mut dyn Plugin, seeds: Range<u64>, cfg: &ExploreConfig) -> Summary {
    run_many_with(prog, plugin, seeds, cfg, |_, _| {})
}

/// Visits every execution reachable through thread and store choices (with
/// store batching off), up to `budget` runs. Returns whether the tree was
/// exhausted.
pub fn explore_exhaustive(prog: &Program, budget: u64, cfg: &ExploreConfig, mut each: impl FnMut(&Trace)) -> bool {
    let mut plugin = ExhaustivePlugin::new(budget);
    loop {
        let t = explore(prog, &mut plugin, 0, cfg);
        each(&t);
        if !plugin.end_run() {
            break;
        }
    }
    plugin.is_complete()
}

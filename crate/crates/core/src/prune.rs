//! Removal of dead atomic records.
//!
//! Conservative mode drops stores that no thread can read any more: if a
//! store `S` happens-before every running thread's current position, a later
//! read must see `S` or something mo-after it, so every store mo-before `S`
//! is dead. Aggressive mode treats every store older than a window as such a
//! frontier, which may shrink the set of reachable behaviors. It keeps any
//! store whose RMW reader survives.
//!
//! Removed stores are always closed under mo-predecessors, so reachability
//! among the remaining mo-graph nodes is unchanged.

use std::collections::BTreeSet;

use crate::clocks::{ClockVector, Seq};
use crate::explorer::ExecState;
use crate::trace::{EventKind, PruneStats};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PruneMode {
    #[default]
    Off,
    Conservative,
    Aggressive,
}

impl PruneMode {
    pub fn name(self) -> &'static str {
        match self {
            PruneMode::Off => "off",
            PruneMode::Conservative => "conservative",
            PruneMode::Aggressive => "aggressive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PruneConfig {
    pub mode: PruneMode,
    /// Prune when more than this many atomic records are live.
    pub trigger: usize,
    /// Aggressive mode: number of most recent sequence numbers kept intact.
    pub window: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            mode: PruneMode::Off,
            trigger: 4096,
            window: 1024,
        }
    }
}

impl PruneConfig {
    pub fn off() -> PruneConfig {
        PruneConfig::default()
    }

    pub fn conservative(trigger: usize) -> PruneConfig {
        PruneConfig {
            mode: PruneMode::Conservative,
            trigger,
            window: 0,
        }
    }

    pub fn aggressive(trigger: usize, window: u64) -> PruneConfig {
        PruneConfig {
            mode: PruneMode::Aggressive,
            trigger,
            window,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mode == PruneMode::Aggressive && self.window > self.trigger as u64 {
            return Err(format!(
                "prune window {} exceeds prune trigger {}",
                self.window, self.trigger
            ));
        }
        Ok(())
    }
}

impl ExecState<'_> {
    /// Componentwise minimum of the clocks of all running threads.
    pub fn cv_min(&self) -> ClockVector {
        let mut it = self.running_threads().into_iter();
        let Some(first) = it.next() else {
            return ClockVector::new();
        };
        let mut m = self.thread_clock(first).clone();
        for t in it {
            m = m.intersect(self.thread_clock(t));
        }
        m
    }

    /// Live stores strictly mo-before some store in `frontier`, per location.
    fn dominated_by(&self, frontier: &dyn Fn(Seq) -> bool) -> BTreeSet<Seq> {
        let mut gone = BTreeSet::new();
        for h in &self.hist {
            let stores: Vec<Seq> = h.all().filter(|&x| self.ev(x).kind.is_write()).collect();
            let tops: Vec<Seq> = stores.iter().copied().filter(|&s| frontier(s)).collect();
            for &x in &stores {
                if tops.iter().any(|&s| s != x && self.mograph.reachable(x, s)) {
                    gone.insert(x);
                }
            }
        }
        gone
    }

    fn remove_stores(&mut self, gone: &BTreeSet<Seq>, stats: &mut PruneStats) {
        let mut dead = Vec::new();
        for h in &mut self.hist {
            for list in h.per_thread.values_mut() {
                list.retain(|&x| {
                    let e = &self.trace.events[(x - 1) as usize];
                    let drop = gone.contains(&x) || (e.kind == EventKind::Load && gone.contains(&e.rf.unwrap()));
                    if drop {
                        dead.push(x);
                    }
                    !drop
                });
            }
            h.per_thread.retain(|_, l| !l.is_empty());
        }
        for x in dead {
            if self.ev(x).kind == EventKind::Load {
                stats.loads += 1;
            } else {
                stats.stores += 1;
            }
        }
        self.mograph.remove(gone);
        for x in gone {
            self.rf_clocks.remove(x);
            self.read_by_rmw.remove(x);
        }
    }

    /// Drops fence records for which `dead` holds, except each thread's last
    /// sc fence (still needed by later prior sets of that thread).
    fn remove_fences(&mut self, dead: &dyn Fn(Seq) -> bool, stats: &mut PruneStats) {
        let mut n = 0;
        for list in self.sc_fences.values_mut() {
            let last = list.last().copied();
            list.retain(|&f| {
                let d = Some(f) != last && dead(f);
                n += d as u64;
                !d
            });
        }
        for list in self.other_fences.values_mut() {
            list.retain(|&f| {
                let d = dead(f);
                n += d as u64;
                !d
            });
        }
        stats.fences += n;
    }

    pub fn prune_conservative(&mut self) -> PruneStats {
        let mut stats = PruneStats {
            passes: 1,
            ..PruneStats::default()
        };
        let m = self.cv_min();
        let below = |x: Seq| {
            let e = self.ev(x);
            e.seq <= m.get(e.tid)
        };
        let gone = self.dominated_by(&below);
        self.remove_stores(&gone, &mut stats);
        let fence_dead: Vec<Seq> = self
            .sc_fences
            .values()
            .chain(self.other_fences.values())
            .flatten()
            .copied()
            .filter(|&f| {
                let e = self.ev(f);
                let mo = e.mo.unwrap();
                // an acquire-only fence has already done all its work
                (mo.is_acquire() && !mo.is_release()) || e.seq <= m.get(e.tid)
            })
            .collect();
        self.remove_fences(&|f| fence_dead.contains(&f), &mut stats);
        stats
    }

    pub fn prune_aggressive(&mut self, window: u64) -> PruneStats {
        let mut stats = PruneStats {
            passes: 1,
            ..PruneStats::default()
        };
        let cur = self.trace.events.len() as Seq;
        let cutoff = cur.saturating_sub(window);
        let mut gone = self.dominated_by(&|x| x <= cutoff);
        // a store stays while its RMW reader does: later stores that must
        // follow it in mo have to follow the whole RMW chain
        loop {
            let keep: Vec<Seq> = gone
                .iter()
                .copied()
                .filter(|&x| self.mograph.node(x).rmw.is_some_and(|r| !gone.contains(&r)))
                .collect();
            if keep.is_empty() {
                break;
            }
            for x in keep {
                gone.remove(&x);
            }
        }
        self.remove_stores(&gone, &mut stats);
        self.remove_fences(&|f| f <= cutoff, &mut stats);
        stats
    }
}

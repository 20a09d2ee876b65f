use crate::clocks::{Seq, Tid};
use crate::rng::SplitMix64;

/// Exploration strategy. One instance lives across all runs of a batch.
pub trait Plugin {
    fn begin_run(&mut self, seed: u64);

    /// Index into `enabled` (sorted by tid).
    fn select_thread(&mut self, enabled: &[Tid]) -> usize;

    /// Index into `candidates` (accepted stores, descending seq).
    fn select_store(&mut self, candidates: &[Seq]) -> usize;

    /// Returns false once the plugin has nothing more to explore.
    fn end_run(&mut self) -> bool {
        true
    }

    /// Whether consecutive relaxed/release stores of one thread run without
    /// an intervening scheduling decision.
    fn batching(&self) -> bool {
        true
    }
}

/// Uniform choices from a splitmix64 stream reseeded per run.
#[derive(Clone, Debug)]
pub struct RandomPlugin {
    rng: SplitMix64,
}

impl RandomPlugin {
    pub fn new() -> RandomPlugin {
        RandomPlugin {
            rng: SplitMix64::new(0),
        }
    }
}

impl Default for RandomPlugin {
    fn default() -> Self {
        RandomPlugin::new()
    }
}

impl Plugin for RandomPlugin {
    fn begin_run(&mut self, seed: u64) {
        self.rng = SplitMix64::new(seed);
    }

    fn select_thread(&mut self, enabled: &[Tid]) -> usize {
        self.rng.below(enabled.len())
    }

    fn select_store(&mut self, candidates: &[Seq]) -> usize {
        self.rng.below(candidates.len())
    }
}

/// Depth-first enumeration of the whole decision tree by replay: each run
/// follows the recorded prefix and then takes first choices; `end_run`
/// advances to the next unexplored branch.
#[derive(Clone, Debug)]
pub struct ExhaustivePlugin {
    /// (chosen, number of options) per decision of the current run.
    stack: Vec<(usize, usize)>,
    depth: usize,
    runs: u64,
    budget: u64,
    exhausted: bool,
}

impl ExhaustivePlugin {
    pub fn new(budget: u64) -> ExhaustivePlugin {
        ExhaustivePlugin {
            stack: Vec::new(),
            depth: 0,
            runs: 0,
            budget,
            exhausted: false,
        }
    }

    /// True when every branch was visited (as opposed to hitting the budget).
    pub fn is_complete(&self) -> bool {
        self.exhausted
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    fn choose(&mut self, n: usize) -> usize {
        assert!(n > 0, "choice among zero options");
        let d = self.depth;
        self.depth += 1;
        if d < self.stack.len() {
            let (c, m) = self.stack[d];
            assert_eq!(m, n, "replay diverged: program is not deterministic under replay");
            c
        } else {
            self.stack.push((0, n));
            0
        }
    }
}

impl Plugin for ExhaustivePlugin {
    fn begin_run(&mut self, _seed: u64) {
        self.depth = 0;
    }

    fn select_thread(&mut self, enabled: &[Tid]) -> usize {
        self.choose(enabled.len())
    }

    fn select_store(&mut self, candidates: &[Seq]) -> usize {
        self.choose(candidates.len())
    }

    fn end_run(&mut self) -> bool {
        self.runs += 1;
        self.stack.truncate(self.depth);
        while let Some(&(c, n)) = self.stack.last() {
            if c + 1 < n {
                self.stack.last_mut().unwrap().0 += 1;
                break;
            }
            self.stack.pop();
        }
        if self.stack.is_empty() {
            self.exhausted = true;
            return false;
        }
        self.runs < self.budget
    }

    fn batching(&self) -> bool {
        false
    }
}

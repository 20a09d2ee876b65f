//! Randomized construction of single-location mo-graphs, checking the
//! clock-vector encoding against explicit search after every step.
//!
//! Operations mirror what executions do to a graph: a new store (ordered
//! after its thread's previous store and after arbitrary older stores), a
//! read constraint (stores forced before an older store, accepted only when
//! that creates no cycle), and an RMW (a new node attached to an unread
//! store by an rmw edge plus its own prior stores).

use std::collections::{BTreeMap, BTreeSet};

use wmm_core::mograph::MoGraph;
use wmm_core::rng::SplitMix64;
use wmm_core::{Seq, Tid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstructionStats {
    pub steps: usize,
    pub nodes: usize,
    pub rmw_edges: usize,
    pub rejected: usize,
    pub pairs_checked: usize,
}

impl ConstructionStats {
    pub fn add(&mut self, o: &ConstructionStats) {
        self.steps += o.steps;
        self.nodes += o.nodes;
        self.rmw_edges += o.rmw_edges;
        self.rejected += o.rejected;
        self.pairs_checked += o.pairs_checked;
    }
}

/// Which property failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphViolation {
    /// Clock-vector and search reachability disagree for `(a, b)`.
    Reachability { a: Seq, b: Seq, cv: bool, search: bool },
    /// An edge `a -> b` with `cv(a) </= cv(b)`.
    PathMonotone { a: Seq, b: Seq },
    /// A node whose own slot is not its sequence number.
    OwnSlot { n: Seq, slot: Seq },
    Cycle,
}

fn search(g: &MoGraph, a: Seq, b: Seq) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![a];
    while let Some(n) = stack.pop() {
        if n == b {
            return true;
        }
        if seen.insert(n) {
            stack.extend(g.node(n).edges.iter().copied());
        }
    }
    false
}

/// Checks reachability agreement on every ordered pair, path monotonicity on
/// every edge, and own-slot stability on every node.
pub fn check_graph(g: &MoGraph, nodes: &[Seq]) -> Result<usize, GraphViolation> {
    let mut pairs = 0;
    for &n in nodes {
        let node = g.node(n);
        let slot = node.cv.get(node.tid);
        if slot != n {
            return Err(GraphViolation::OwnSlot { n, slot });
        }
        for &d in &node.edges {
            if !node.cv.leq(&g.node(d).cv) {
                return Err(GraphViolation::PathMonotone { a: n, b: d });
            }
        }
    }
    for &a in nodes {
        for &b in nodes {
            if a == b {
                continue;
            }
            let cv = g.reachable(a, b);
            let s = search(g, a, b);
            if s && search(g, b, a) {
                return Err(GraphViolation::Cycle);
            }
            if cv != s {
                return Err(GraphViolation::Reachability { a, b, cv, search: s });
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}

/// One random construction sequence of up to `max_nodes` nodes (including
/// an initial store of pseudo-thread 0), checked after every operation.
pub fn random_construction(seed: u64, max_nodes: usize) -> Result<ConstructionStats, GraphViolation> {
    let mut rng = SplitMix64::new(seed);
    let mut g = MoGraph::new();
    let mut nodes: Vec<Seq> = Vec::new();
    let mut last: BTreeMap<Tid, Seq> = BTreeMap::new();
    let mut stats = ConstructionStats::default();
    let threads = 1 + rng.below(3) as Tid;
    let mut seq: Seq = 1;

    g.get_node(seq, 0, 0);
    nodes.push(seq);
    last.insert(0, seq);

    let pick_subset = |rng: &mut SplitMix64, nodes: &[Seq]| -> Vec<Seq> {
        nodes.iter().copied().filter(|_| rng.below(3) == 0).collect()
    };

    while nodes.len() < max_nodes && stats.steps < 4 * max_nodes {
        stats.steps += 1;
        let tid = 1 + rng.below(threads as usize) as Tid;
        match rng.below(3) {
            0 => {
                seq += 1;
                let n = g.get_node(seq, tid, 0);
                let mut prior = pick_subset(&mut rng, &nodes);
                prior.extend(last.get(&tid).copied());
                prior.sort_unstable();
                prior.dedup();
                for p in prior {
                    g.add_constraint(p, n);
                }
                nodes.push(n);
                last.insert(tid, n);
            }
            1 => {
                let s = nodes[rng.below(nodes.len())];
                let mut prior = pick_subset(&mut rng, &nodes);
                prior.extend(last.get(&tid).copied());
                prior.retain(|&p| p != s);
                if prior.iter().any(|&p| search(&g, s, p)) {
                    stats.rejected += 1;
                    continue;
                }
                for p in prior {
                    g.add_constraint(p, s);
                }
            }
            _ => {
                let free: Vec<Seq> = nodes.iter().copied().filter(|&n| g.node(n).rmw.is_none()).collect();
                let s = free[rng.below(free.len())];
                let mut prior = pick_subset(&mut rng, &nodes);
                prior.extend(last.get(&tid).copied());
                prior.retain(|&p| p != s);
                prior.sort_unstable();
                prior.dedup();
                if prior.iter().any(|&p| search(&g, s, p)) {
                    stats.rejected += 1;
                    continue;
                }
                seq += 1;
                let r = g.get_node(seq, tid, 0);
                for &p in &prior {
                    g.add_constraint(p, s);
                }
                g.add_rmw_edge(s, r);
                for &p in &prior {
                    g.add_constraint(p, r);
                }
                nodes.push(r);
                last.insert(tid, r);
                stats.rmw_edges += 1;
            }
        }
        stats.pairs_checked += check_graph(&g, &nodes)?;
    }
    stats.nodes = nodes.len();
    Ok(stats)
}

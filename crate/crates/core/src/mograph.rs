//! Modification-order constraint graph.
//!
//! Each store or RMW gets a node carrying a clock vector such that, for two
//! nodes of the same location, `a.cv <= b.cv` exactly when `b` is reachable
//! from `a`. That turns cycle checks into a vector comparison and removes the
//! need to roll back speculative edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::clocks::{ClockVector, Seq, Tid};

pub type Loc = u32;

#[derive(Clone, Debug)]
pub struct MoNode {
    pub seq: Seq,
    pub tid: Tid,
    pub loc: Loc,
    pub cv: ClockVector,
    pub edges: BTreeSet<Seq>,
    pub rmw: Option<Seq>,
}

#[derive(Clone, Debug, Default)]
pub struct MoGraph {
    nodes: BTreeMap<Seq, MoNode>,
    by_loc: BTreeMap<Loc, BTreeSet<Seq>>,
    rmw_pred: BTreeMap<Seq, Seq>,
}

impl MoGraph {
    pub fn new() -> MoGraph {
        MoGraph::default()
    }

    /// Returns the node for a store/RMW event, creating it with
    /// `cv = bottom(tid, seq)` on first use.
    pub fn get_node(&mut self, seq: Seq, tid: Tid, loc: Loc) -> Seq {
        if let Some(n) = self.nodes.get(&seq) {
            assert!(n.loc == loc && n.tid == tid, "node {seq} re-registered with different identity");
            return seq;
        }
        self.nodes.insert(
            seq,
            MoNode {
                seq,
                tid,
                loc,
                cv: ClockVector::bottom(tid, seq),
                edges: BTreeSet::new(),
                rmw: None,
            },
        );
        self.by_loc.entry(loc).or_default().insert(seq);
        seq
    }

    pub fn contains(&self, n: Seq) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn node(&self, n: Seq) -> &MoNode {
        &self.nodes[&n]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes_at(&self, loc: Loc) -> impl Iterator<Item = &MoNode> + '_ {
        self.by_loc
            .get(&loc)
            .into_iter()
            .flat_map(move |set| set.iter().map(move |s| &self.nodes[s]))
    }

    pub fn locations(&self) -> impl Iterator<Item = Loc> + '_ {
        self.by_loc.keys().copied()
    }

    /// The store an RMW node reads from, if `n` is the target of an rmw edge.
    pub fn rmw_pred(&self, n: Seq) -> Option<Seq> {
        self.rmw_pred.get(&n).copied()
    }

    pub fn merge(&mut self, dst: Seq, src: Seq) -> bool {
        let src_cv = self.nodes[&src].cv.clone();
        debug_assert_eq!(self.nodes_loc(dst), self.nodes_loc(src));
        let d = self.nodes.get_mut(&dst).expect("merge into unknown node");
        if src_cv.leq(&d.cv) {
            return false;
        }
        d.cv.union_with(&src_cv);
        true
    }

    fn nodes_loc(&self, n: Seq) -> Loc {
        self.nodes[&n].loc
    }

    pub fn add_edge(&mut self, from: Seq, to: Seq) {
        assert_ne!(from, to, "self edge in mo-graph");
        assert_eq!(self.nodes_loc(from), self.nodes_loc(to), "cross-location mo edge");
        let must_add = {
            let f = &self.nodes[&from];
            f.rmw == Some(to) || f.tid == self.nodes[&to].tid
        };
        if self.nodes[&from].cv.leq(&self.nodes[&to].cv) && !must_add {
            return;
        }
        let mut from = from;
        while let Some(next) = self.nodes[&from].rmw {
            if next == to {
                break;
            }
            from = next;
        }
        self.nodes.get_mut(&from).unwrap().edges.insert(to);
        if self.merge(to, from) {
            self.propagate(to);
        }
    }

    fn propagate(&mut self, start: Seq) {
        let mut queue = BTreeSet::from([start]);
        while let Some(node) = queue.pop_first() {
            let dsts: Vec<Seq> = self.nodes[&node].edges.iter().copied().collect();
            for dst in dsts {
                if self.merge(dst, node) {
                    queue.insert(dst);
                }
            }
        }
    }

    pub fn add_rmw_edge(&mut self, from: Seq, rmw: Seq) {
        assert!(self.nodes[&from].rmw.is_none(), "store {from} already read by an RMW");
        let moved: Vec<Seq> = {
            let f = self.nodes.get_mut(&from).unwrap();
            f.rmw = Some(rmw);
            std::mem::take(&mut f.edges).into_iter().filter(|&d| d != rmw).collect()
        };
        let r = self.nodes.get_mut(&rmw).unwrap();
        let migrated = !moved.is_empty();
        r.edges.extend(moved);
        self.rmw_pred.insert(rmw, from);
        self.add_edge(from, rmw);
        // Migrated successors must also dominate the RMW's own vector, which
        // the merge inside add_edge only propagates when `from` contributed
        // something new.
        if migrated {
            self.propagate(rmw);
        }
    }

    pub fn add_edges(&mut self, set: &[Seq], s: Seq) {
        for &e in set {
            self.add_edge(e, s);
        }
    }

    /// Adds the constraint `from` mo-before `to`. When `to` is an RMW, the
    /// constraint really concerns the store it reads (the RMW is immediately
    /// after it), so the target is walked back along rmw edges first.
    pub fn add_constraint(&mut self, from: Seq, to: Seq) -> (Seq, Seq) {
        let mut to = to;
        while let Some(p) = self.rmw_pred(to) {
            if p == from {
                break;
            }
            to = p;
        }
        if from != to {
            self.add_edge(from, to);
        }
        (from, to)
    }

    pub fn reachable(&self, a: Seq, b: Seq) -> bool {
        a == b || self.nodes[&a].cv.leq(&self.nodes[&b].cv)
    }

    /// Reference reachability by explicit search over stored edges.
    pub fn dfs_reachable(&self, a: Seq, b: Seq) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(n) = stack.pop() {
            if n == b {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            if let Some(node) = self.nodes.get(&n) {
                stack.extend(node.edges.iter().copied());
            }
        }
        false
    }

    pub fn has_cycle(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<Seq, u8> = BTreeMap::new();
        for &root in self.nodes.keys() {
            if state.contains_key(&root) {
                continue;
            }
            let mut stack: Vec<(Seq, Vec<Seq>)> = vec![(root, self.nodes[&root].edges.iter().copied().collect())];
            state.insert(root, 1);
            while let Some((n, rest)) = stack.last_mut() {
                if let Some(next) = rest.pop() {
                    match state.get(&next) {
                        Some(1) => return true,
                        Some(_) => {}
                        None => {
                            if let Some(node) = self.nodes.get(&next) {
                                state.insert(next, 1);
                                stack.push((next, node.edges.iter().copied().collect()));
                            }
                        }
                    }
                } else {
                    state.insert(*n, 2);
                    stack.pop();
                }
            }
        }
        false
    }

    /// Removes nodes. The removed set must be closed under mo-predecessors,
    /// which keeps reachability among the survivors intact.
    pub fn remove(&mut self, gone: &BTreeSet<Seq>) {
        for s in gone {
            if let Some(n) = self.nodes.remove(s) {
                if let Some(set) = self.by_loc.get_mut(&n.loc) {
                    set.remove(s);
                }
                if let Some(r) = n.rmw {
                    self.rmw_pred.remove(&r);
                }
            }
            self.rmw_pred.remove(s);
        }
        for n in self.nodes.values_mut() {
            n.edges.retain(|d| !gone.contains(d));
            if n.rmw.is_some_and(|r| gone.contains(&r)) {
                n.rmw = None;
            }
        }
    }

    /// DOT rendering of one location's graph; nodes are labeled `tid:seq`
    /// and rmw edges are dashed.
    pub fn to_dot(&self, loc: Loc, name: &str) -> String {
        let mut out = format!("digraph \"mo_{name}\" {{\n");
        let label = |s: Seq| {
            let n = &self.nodes[&s];
            format!("{}:{}", n.tid, n.seq)
        };
        for n in self.nodes_at(loc) {
            let _ = writeln!(out, "  \"{}\";", label(n.seq));
        }
        for n in self.nodes_at(loc) {
            for &d in &n.edges {
                let style = if n.rmw == Some(d) { " [style=dashed]" } else { "" };
                let _ = writeln!(out, "  \"{}\" -> \"{}\"{style};", label(n.seq), label(d));
            }
        }
        out.push_str("}\n");
        out
    }
}

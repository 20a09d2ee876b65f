//! Axiomatic executions: events plus sb, asw, rf, mo and sc relations.

use std::collections::BTreeMap;
use std::fmt;

use wmm_core::lang::MemOrder;

/// Stable event identity shared by enumeration and lifting: the
/// initialization store of a location, or position `idx` in the thread
/// reached by fork ordinals `path` from the main thread. Index 0 of every
/// thread is its start marker.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvId {
    Init(String),
    Thread(Vec<u32>, u32),
}

impl fmt::Display for EvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvId::Init(l) => write!(f, "init({l})"),
            EvId::Thread(p, i) => {
                f.write_str("T")?;
                for (k, x) in p.iter().enumerate() {
                    if k > 0 {
                        f.write_str(".")?;
                    }
                    write!(f, "{x}")?;
                }
                if p.is_empty() {
                    f.write_str("main")?;
                }
                write!(f, "#{i}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Init,
    Start,
    End,
    Load,
    Store,
    Rmw,
    Fence,
    Fork,
    Join,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Init => "init",
            Kind::Start => "start",
            Kind::End => "end",
            Kind::Load => "load",
            Kind::Store => "store",
            Kind::Rmw => "rmw",
            Kind::Fence => "fence",
            Kind::Fork => "fork",
            Kind::Join => "join",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OEvent {
    pub id: EvId,
    pub kind: Kind,
    pub loc: Option<String>,
    pub mo: Option<MemOrder>,
    /// Value written (init, store, RMW).
    pub wval: Option<i64>,
    /// Value read (load, RMW).
    pub rval: Option<i64>,
}

impl OEvent {
    pub fn is_write(&self) -> bool {
        matches!(self.kind, Kind::Init | Kind::Store | Kind::Rmw)
    }

    pub fn is_read(&self) -> bool {
        matches!(self.kind, Kind::Load | Kind::Rmw)
    }

    pub fn is_sc(&self) -> bool {
        self.mo == Some(MemOrder::SeqCst)
    }

    pub fn thread(&self) -> Option<&[u32]> {
        match &self.id {
            EvId::Thread(p, _) => Some(p),
            EvId::Init(_) => None,
        }
    }

    pub fn index(&self) -> u32 {
        match &self.id {
            EvId::Thread(_, i) => *i,
            EvId::Init(_) => 0,
        }
    }

    pub fn is_release(&self) -> bool {
        self.mo.is_some_and(MemOrder::is_release)
    }

    pub fn is_acquire(&self) -> bool {
        self.mo.is_some_and(MemOrder::is_acquire)
    }
}

/// One candidate execution. Event indices refer to `events`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub events: Vec<OEvent>,
    /// Additional-synchronizes-with pairs (fork to child start, child end
    /// to join).
    pub asw: Vec<(usize, usize)>,
    /// reader -> writer
    pub rf: BTreeMap<usize, usize>,
    /// Per-location total order over writes.
    pub mo: BTreeMap<String, Vec<usize>>,
    /// Total order over seq_cst events.
    pub sc: Vec<usize>,
    /// Final values of the observed non-atomic variables.
    pub outcome: Vec<(String, i64)>,
}

impl Execution {
    /// Immediate program-order successor pairs.
    pub fn sb_pairs(&self) -> Vec<(usize, usize)> {
        let mut by_thread: BTreeMap<&[u32], Vec<(u32, usize)>> = BTreeMap::new();
        for (i, e) in self.events.iter().enumerate() {
            if let Some(p) = e.thread() {
                by_thread.entry(p).or_default().push((e.index(), i));
            }
        }
        let mut out = Vec::new();
        for v in by_thread.values_mut() {
            v.sort();
            for w in v.windows(2) {
                out.push((w[0].1, w[1].1));
            }
        }
        out
    }

    /// Same thread and earlier position.
    pub fn sb(&self, a: usize, b: usize) -> bool {
        let (ea, eb) = (&self.events[a], &self.events[b]);
        match (ea.thread(), eb.thread()) {
            (Some(pa), Some(pb)) => pa == pb && ea.index() < eb.index(),
            _ => false,
        }
    }

    pub fn index_of(&self, id: &EvId) -> Option<usize> {
        self.events.iter().position(|e| &e.id == id)
    }

    /// Position of each write in its location's mo.
    pub fn mo_pos(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for order in self.mo.values() {
            for (i, &w) in order.iter().enumerate() {
                m.insert(w, i);
            }
        }
        m
    }

    /// Renders the execution in the trace-dump line style.
    pub fn render(&self) -> String {
        let mut out = String::from("#wmm-exec v1\n");
        for e in &self.events {
            if matches!(e.kind, Kind::Start | Kind::End) {
                continue;
            }
            let rf = self
                .rf
                .get(&self.index_of(&e.id).unwrap())
                .map(|&w| self.events[w].id.to_string())
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "event id={} kind={} loc={} mo={} value={} read={} rf={}\n",
                e.id,
                e.kind.name(),
                e.loc.as_deref().unwrap_or("-"),
                e.mo.map(|m| m.name()).unwrap_or("-"),
                e.wval.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                e.rval.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                rf
            ));
        }
        for (loc, order) in &self.mo {
            let names: Vec<String> = order.iter().map(|&w| self.events[w].id.to_string()).collect();
            out.push_str(&format!("mo {loc}: {}\n", names.join(" ")));
        }
        let sc: Vec<String> = self.sc.iter().map(|&w| self.events[w].id.to_string()).collect();
        out.push_str(&format!("sc: {}\n", sc.join(" ")));
        let fin: Vec<String> = self.outcome.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("final {}\n", fin.join(" ")));
        out
    }
}

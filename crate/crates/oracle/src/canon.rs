//! Canonical form of an execution, independent of event numbering.

use crate::model::{EvId, Execution, Kind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonEvent {
    pub id: EvId,
    pub kind: Kind,
    pub loc: Option<String>,
    pub mo: Option<&'static str>,
    pub wval: Option<i64>,
    pub rval: Option<i64>,
}

/// Executions compare equal here iff they have the same events, outcome,
/// rf, mo and sc after renaming events to (thread path, index).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Canon {
    pub outcome: Vec<(String, i64)>,
    pub events: Vec<CanonEvent>,
    pub rf: Vec<(EvId, EvId)>,
    pub mo: Vec<(String, Vec<EvId>)>,
    pub sc: Vec<EvId>,
}

pub fn canonicalize(x: &Execution) -> Canon {
    let id = |i: usize| x.events[i].id.clone();
    let mut events: Vec<CanonEvent> = x
        .events
        .iter()
        .filter(|e| !matches!(e.kind, Kind::Start | Kind::End))
        .map(|e| CanonEvent {
            id: e.id.clone(),
            kind: e.kind,
            loc: e.loc.clone(),
            mo: e.mo.map(|m| m.name()),
            wval: e.wval,
            rval: e.rval,
        })
        .collect();
    events.sort();
    let mut rf: Vec<(EvId, EvId)> = x.rf.iter().map(|(&r, &w)| (id(r), id(w))).collect();
    rf.sort();
    let mo = x
        .mo
        .iter()
        .map(|(l, order)| (l.clone(), order.iter().map(|&w| id(w)).collect()))
        .collect();
    Canon {
        outcome: x.outcome.clone(),
        events,
        rf,
        mo,
        sc: x.sc.iter().map(|&e| id(e)).collect(),
    }
}

impl Canon {
    /// Rough dissimilarity used to pick the nearest execution in reports.
    pub fn distance(&self, o: &Canon) -> usize {
        let mut d = 0;
        d += (self.outcome != o.outcome) as usize * 4;
        d += self.rf.iter().filter(|p| !o.rf.contains(p)).count() * 2;
        d += o.rf.iter().filter(|p| !self.rf.contains(p)).count() * 2;
        d += self.mo.iter().filter(|m| !o.mo.contains(m)).count();
        d += (self.sc != o.sc) as usize;
        d += self.events.iter().filter(|e| !o.events.contains(e)).count() * 3;
        d
    }
}

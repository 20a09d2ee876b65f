//! Clock vectors: maps from thread id to epoch with implicit zeros.
//!
//! Thread id 0 is the initialization pseudo-thread that owns the implicit
//! initial store of every atomic location.

use std::fmt;

pub type Tid = u32;
pub type Seq = u64;

/// Dense storage indexed by tid; trailing zeros are always trimmed so that
/// structural equality coincides with pointwise equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ClockVector {
    slots: Vec<Seq>,
}

impl ClockVector {
    pub fn new() -> ClockVector {
        ClockVector::default()
    }

    pub fn bottom(tid: Tid, seq: Seq) -> ClockVector {
        let mut cv = ClockVector::new();
        cv.set(tid, seq);
        cv
    }

    pub fn from_pairs(pairs: &[(Tid, Seq)]) -> ClockVector {
        let mut cv = ClockVector::new();
        for &(t, s) in pairs {
            cv.set(t, s);
        }
        cv
    }

    pub fn get(&self, tid: Tid) -> Seq {
        self.slots.get(tid as usize).copied().unwrap_or(0)
    }

    pub fn set(&mut self, tid: Tid, seq: Seq) {
        let i = tid as usize;
        if i >= self.slots.len() {
            if seq == 0 {
                return;
            }
            self.slots.resize(i + 1, 0);
        }
        self.slots[i] = seq;
        self.trim();
    }

    fn trim(&mut self) {
        while self.slots.last() == Some(&0) {
            self.slots.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slots.is_empty()
    }

    /// Non-zero entries in tid order.
    pub fn entries(&self) -> impl Iterator<Item = (Tid, Seq)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(t, &s)| (t as Tid, s))
    }

    /// Componentwise max.
    pub fn union(&self, other: &ClockVector) -> ClockVector {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// In-place union; returns whether any component grew.
    pub fn union_with(&mut self, other: &ClockVector) -> bool {
        if other.slots.len() > self.slots.len() {
            self.slots.resize(other.slots.len(), 0);
        }
        let mut changed = false;
        for (a, &b) in self.slots.iter_mut().zip(&other.slots) {
            if b > *a {
                *a = b;
                changed = true;
            }
        }
        changed
    }

    /// Componentwise min.
    pub fn intersect(&self, other: &ClockVector) -> ClockVector {
        let mut slots: Vec<Seq> = self.slots.iter().zip(&other.slots).map(|(&a, &b)| a.min(b)).collect();
        while slots.last() == Some(&0) {
            slots.pop();
        }
        ClockVector { slots }
    }

    pub fn leq(&self, other: &ClockVector) -> bool {
        self.slots.iter().enumerate().all(|(i, &a)| a <= other.slots.get(i).copied().unwrap_or(0))
    }
}

impl fmt::Debug for ClockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ClockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, s)) in self.entries().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}:{s}")?;
        }
        f.write_str("}")
    }
}

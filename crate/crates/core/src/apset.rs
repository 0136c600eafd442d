//! Finite unions of bounded arithmetic progressions of configurations.

use std::fmt;

use crate::automaton::{Configuration, StateId};

/// `{(state, v) : low <= v <= high, v ≡ start (mod period)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Progression {
    pub state: StateId,
    pub start: i64,
    pub period: i64,
    pub low: i64,
    pub high: i64,
}

impl Progression {
    pub fn singleton(c: Configuration) -> Self {
        Progression { state: c.state, start: c.value, period: 1, low: c.value, high: c.value }
    }

    pub fn contains(&self, c: Configuration) -> bool {
        c.state == self.state
            && self.low <= c.value
            && c.value <= self.high
            && (c.value - self.start).rem_euclid(self.period) == 0
    }

    /// Smallest member, if any.
    pub fn min_member(&self) -> Option<i64> {
        let v = self.low + (self.start - self.low).rem_euclid(self.period);
        (v <= self.high).then_some(v)
    }

    /// Largest member, if any.
    pub fn max_member(&self) -> Option<i64> {
        let v = self.high - (self.high - self.start).rem_euclid(self.period);
        (v >= self.low).then_some(v)
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        let (lo, hi, step) = match (self.min_member(), self.max_member()) {
            (Some(lo), Some(hi)) => (lo, hi, self.period),
            _ => (1, 0, 1),
        };
        std::iter::successors(Some(lo), move |&v| v.checked_add(step)).take_while(move |&v| v <= hi)
    }

    pub fn members(&self) -> impl Iterator<Item = Configuration> {
        let q = self.state;
        self.values().map(move |v| Configuration::new(q, v))
    }

    pub fn count(&self) -> u64 {
        match (self.min_member(), self.max_member()) {
            (Some(lo), Some(hi)) => ((hi - lo) / self.period) as u64 + 1,
            _ => 0,
        }
    }
}

impl fmt::Display for Progression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.state, self.period, self.start, self.low, self.high)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct APSet {
    pub progressions: Vec<Progression>,
}

impl APSet {
    pub fn new(mut progressions: Vec<Progression>) -> Self {
        progressions.sort_unstable();
        progressions.dedup();
        APSet { progressions }
    }

    pub fn contains(&self, c: Configuration) -> bool {
        self.progressions.iter().any(|p| p.contains(c))
    }

    pub fn members(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.progressions.iter().flat_map(Progression::members)
    }

    pub fn len(&self) -> usize {
        self.progressions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.progressions.is_empty()
    }

    pub fn max_value(&self) -> Option<i64> {
        self.progressions.iter().filter_map(Progression::max_member).max()
    }

    /// Removes every progression member equal to `c`, splitting as needed.
    pub fn without(&self, c: Configuration) -> APSet {
        let mut out = Vec::new();
        for p in &self.progressions {
            if !p.contains(c) {
                out.push(*p);
                continue;
            }
            if c.value - p.period >= p.low {
                out.push(Progression { high: c.value - p.period, ..*p });
            }
            if c.value + p.period <= p.high {
                out.push(Progression { low: c.value + p.period, ..*p });
            }
        }
        APSet::new(out)
    }
}

//! Paths, their effect and drop, and replay as runs.

use thiserror::Error;

use crate::automaton::{Configuration, Oca, StateId, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("counter arithmetic overflowed 64 bits")]
pub struct ArithmeticOverflow;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("step {index} leaves state {found} but the path is at state {expected}")]
    NotAdjacent { index: usize, expected: StateId, found: StateId },
    #[error("path starts at state {path} but the configuration is at state {config}")]
    StartMismatch { path: StateId, config: StateId },
    #[error("transition id {0} out of range")]
    UnknownTransition(usize),
    #[error(transparent)]
    Overflow(#[from] ArithmeticOverflow),
}

/// A sequence of adjacent transitions anchored at a start state, so the empty
/// path still knows where it is.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    start: StateId,
    steps: Vec<Transition>,
}

impl Path {
    pub fn empty(start: StateId) -> Self {
        Path { start, steps: Vec::new() }
    }

    pub fn new(start: StateId, steps: Vec<Transition>) -> Result<Self, PathError> {
        let mut p = Path::empty(start);
        for t in steps {
            p.push(t)?;
        }
        Ok(p)
    }

    /// Builds a path from transition ids of `a`.
    pub fn from_ids(a: &Oca, start: StateId, ids: &[usize]) -> Result<Self, PathError> {
        let mut p = Path::empty(start);
        for &id in ids {
            let t = *a.transitions().get(id).ok_or(PathError::UnknownTransition(id))?;
            p.push(t)?;
        }
        Ok(p)
    }

    pub fn push(&mut self, t: Transition) -> Result<(), PathError> {
        let at = self.end();
        if t.src != at {
            return Err(PathError::NotAdjacent { index: self.steps.len(), expected: at, found: t.src });
        }
        self.steps.push(t);
        Ok(())
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn end(&self) -> StateId {
        self.steps.last().map_or(self.start, |t| t.dst)
    }

    pub fn steps(&self) -> &[Transition] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_cycle(&self) -> bool {
        self.start == self.end()
    }

    /// States visited, including the start.
    pub fn states(&self) -> Vec<StateId> {
        std::iter::once(self.start).chain(self.steps.iter().map(|t| t.dst)).collect()
    }

    pub fn concat(&self, other: &Path) -> Result<Path, PathError> {
        let mut p = self.clone();
        if other.start != p.end() {
            return Err(PathError::NotAdjacent { index: p.len(), expected: p.end(), found: other.start });
        }
        p.steps.extend_from_slice(&other.steps);
        Ok(p)
    }

    pub fn repeat(&self, times: usize) -> Path {
        assert!(times == 0 || self.is_cycle() || self.is_empty(), "only cycles can be repeated");
        let mut steps = Vec::with_capacity(self.steps.len() * times);
        for _ in 0..times {
            steps.extend_from_slice(&self.steps);
        }
        Path { start: self.start, steps }
    }

    /// Cyclic shift starting at step `offset`. Only meaningful for cycles.
    pub fn rotate(&self, offset: usize) -> Path {
        if self.steps.is_empty() {
            return self.clone();
        }
        let k = offset % self.steps.len();
        let mut steps = self.steps[k..].to_vec();
        steps.extend_from_slice(&self.steps[..k]);
        Path { start: steps[0].src, steps }
    }

    /// The same walk traversed in the reversed automaton.
    pub fn reversed(&self) -> Path {
        let steps = self.steps.iter().rev().map(|t| t.reversed()).collect();
        Path { start: self.end(), steps }
    }

    /// Renames states through `f`, e.g. from a sub-automaton back to its parent.
    pub fn map_states(&self, f: impl Fn(StateId) -> StateId) -> Path {
        let steps = self.steps.iter().map(|t| Transition::new(f(t.src), t.update, f(t.dst))).collect();
        Path { start: f(self.start), steps }
    }

    pub fn transition_ids(&self, a: &Oca) -> Option<Vec<usize>> {
        self.steps.iter().map(|t| a.transition_id(t)).collect()
    }

    pub fn effect(&self) -> Result<i64, ArithmeticOverflow> {
        self.effect_drop().map(|(e, _)| e)
    }

    pub fn drop(&self) -> Result<i64, ArithmeticOverflow> {
        self.effect_drop().map(|(_, d)| d)
    }

    /// Total update and the least starting value keeping every prefix nonnegative.
    pub fn effect_drop(&self) -> Result<(i64, i64), ArithmeticOverflow> {
        let mut effect: i64 = 0;
        let mut drop: i64 = 0;
        for t in &self.steps {
            effect = effect.checked_add(t.update).ok_or(ArithmeticOverflow)?;
            drop = drop.max(effect.checked_neg().ok_or(ArithmeticOverflow)?);
        }
        Ok((effect, drop))
    }
}

/// A path together with the configurations it visits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub configs: Vec<Configuration>,
    pub path: Path,
}

impl Run {
    pub fn trivial(c: Configuration) -> Self {
        Run { configs: vec![c], path: Path::empty(c.state) }
    }

    pub fn first(&self) -> Configuration {
        self.configs[0]
    }

    pub fn last(&self) -> Configuration {
        *self.configs.last().expect("runs are nonempty")
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn max_value(&self) -> i64 {
        self.configs.iter().map(|c| c.value).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every configuration must be nonnegative and respect its guard.
    Valid,
    /// Integer semantics: no nonnegativity, guards ignored.
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("configuration {index} of the run is invalid")]
    Violation { index: usize, config: Configuration },
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Replays `p` from `c`. In valid mode the first invalid configuration is
/// reported by its position in the configuration sequence (0 is `c` itself).
pub fn apply_path(a: &Oca, c: Configuration, p: &Path, mode: Mode) -> Result<Run, ApplyError> {
    if p.start() != c.state {
        return Err(PathError::StartMismatch { path: p.start(), config: c.state }.into());
    }
    let check = |index: usize, d: Configuration| -> Result<(), ApplyError> {
        if mode == Mode::Valid && !a.is_valid(d) {
            return Err(ApplyError::Violation { index, config: d });
        }
        Ok(())
    };
    check(0, c)?;
    let mut configs = Vec::with_capacity(p.len() + 1);
    configs.push(c);
    let mut cur = c;
    for (i, t) in p.steps().iter().enumerate() {
        let value = cur.value.checked_add(t.update).ok_or(PathError::Overflow(ArithmeticOverflow))?;
        cur = Configuration::new(t.dst, value);
        check(i + 1, cur)?;
        configs.push(cur);
    }
    Ok(Run { configs, path: p.clone() })
}

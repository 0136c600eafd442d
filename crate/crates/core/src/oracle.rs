//! Explicit-state ground truth: bounded exploration, integer-semantics
//! reachability, and (local) boundedness.
//!
//! Value caps used here are exact rather than heuristic. If a run from `(p, x)`
//! to `(q, y)` exists, one exists whose counter never exceeds
//! `max(x, y, ‖τ‖) + |Q|²·‖Δ‖²`: above `max(x, y, ‖τ‖)` no guard applies, and a
//! run climbing higher contains a matched pair of ascending and descending
//! segments that can be cut out. A configuration `(q, x)` is unbounded exactly
//! when it reaches a value above `max(x, ‖τ‖) + |Q|·‖Δ‖`, since such a run has
//! a pumpable cycle lying entirely above every guard.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::automaton::{Configuration, Oca, StateId};
use crate::path::{Path, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Nodes,
    Values,
    Length,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Nodes => "node",
            Resource::Values => "value",
            Resource::Length => "length",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{resource} budget of {limit} exceeded")]
pub struct ResourceExceeded {
    pub resource: Resource,
    pub limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationBudget {
    pub value_cap: i64,
    pub length_cap: usize,
    pub node_cap: usize,
}

impl Default for ExplorationBudget {
    fn default() -> Self {
        ExplorationBudget { value_cap: i64::MAX / 4, length_cap: usize::MAX, node_cap: 4_000_000 }
    }
}

impl ExplorationBudget {
    pub fn with_value_cap(self, value_cap: i64) -> Self {
        ExplorationBudget { value_cap, ..self }
    }
}

/// `max(x, y, ‖τ‖) + |Q|²·‖Δ‖²`, saturating.
pub fn reach_value_cap(a: &Oca, x: i64, y: i64) -> i64 {
    let n = a.num_states() as i128;
    let d = a.norm_delta() as i128;
    let base = x.max(y).max(a.norm_tau()) as i128;
    clamp_cap(base + n * n * d * d)
}

/// `max(x, ‖τ‖) + |Q|·‖Δ‖`, saturating.
pub fn boundedness_value_cap(a: &Oca, x: i64) -> i64 {
    let n = a.num_states() as i128;
    let d = a.norm_delta() as i128;
    clamp_cap(x.max(a.norm_tau()) as i128 + n * d)
}

fn clamp_cap(v: i128) -> i64 {
    v.min((i64::MAX / 4) as i128) as i64
}

/// Result of a breadth-first exploration. Every discovered configuration keeps
/// the configuration and transition id it was first reached by.
#[derive(Debug, Clone, Default)]
pub struct Exploration {
    parent: HashMap<Configuration, Option<(Configuration, usize)>>,
    order: Vec<Configuration>,
    pub cap_hit: bool,
    pub found: Option<Configuration>,
}

impl Exploration {
    pub fn contains(&self, c: Configuration) -> bool {
        self.parent.contains_key(&c)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Configurations in discovery order.
    pub fn configurations(&self) -> &[Configuration] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<Configuration> {
        let mut v = self.order.clone();
        v.sort_unstable();
        v
    }

    /// Root configuration and transition ids leading to `c`.
    pub fn trace(&self, c: Configuration) -> Option<(Configuration, Vec<usize>)> {
        let mut ids = Vec::new();
        let mut cur = c;
        loop {
            match *self.parent.get(&cur)? {
                None => break,
                Some((prev, id)) => {
                    ids.push(id);
                    cur = prev;
                }
            }
        }
        ids.reverse();
        Some((cur, ids))
    }

    /// Forward run from a start configuration to `c`, assuming the exploration
    /// followed the transitions of `a`.
    pub fn run_to(&self, a: &Oca, c: Configuration) -> Option<Run> {
        let (root, ids) = self.trace(c)?;
        let mut configs = vec![root];
        let mut path = Path::empty(root.state);
        let mut cur = root;
        for id in ids {
            let t = a.transition(id);
            path.push(t).expect("explored edges are adjacent");
            cur = Configuration::new(t.dst, cur.value + t.update);
            configs.push(cur);
        }
        Some(Run { configs, path })
    }
}

/// Layered breadth-first search. Each layer is expanded in (state, value)
/// order and successors in the order `step` emits them, so the parent map is
/// deterministic. Successors above `budget.value_cap` are dropped and flagged.
pub fn explore<F>(
    starts: &[Configuration],
    budget: &ExplorationBudget,
    target: Option<Configuration>,
    mut step: F,
) -> Result<Exploration, ResourceExceeded>
where
    F: FnMut(Configuration, &mut Vec<(usize, Configuration)>),
{
    let mut ex = Exploration::default();
    let mut layer: Vec<Configuration> = starts.to_vec();
    layer.sort_unstable();
    layer.dedup();
    for &c in &layer {
        ex.parent.insert(c, None);
        ex.order.push(c);
    }
    if ex.order.len() > budget.node_cap {
        return Err(ResourceExceeded { resource: Resource::Nodes, limit: budget.node_cap as u64 });
    }
    if let Some(t) = target {
        if ex.contains(t) {
            ex.found = Some(t);
            return Ok(ex);
        }
    }
    let mut depth = 0usize;
    let mut succ = Vec::new();
    while !layer.is_empty() {
        if depth >= budget.length_cap {
            ex.cap_hit = true;
            break;
        }
        depth += 1;
        let mut next = Vec::new();
        for &c in &layer {
            succ.clear();
            step(c, &mut succ);
            for &(id, d) in &succ {
                if d.value > budget.value_cap {
                    ex.cap_hit = true;
                    continue;
                }
                if ex.parent.contains_key(&d) {
                    continue;
                }
                ex.parent.insert(d, Some((c, id)));
                ex.order.push(d);
                if ex.order.len() > budget.node_cap {
                    return Err(ResourceExceeded { resource: Resource::Nodes, limit: budget.node_cap as u64 });
                }
                if Some(d) == target {
                    ex.found = Some(d);
                    return Ok(ex);
                }
                next.push(d);
            }
        }
        next.sort_unstable();
        layer = next;
    }
    Ok(ex)
}

/// Forward exploration of valid runs from `starts`, optionally confined to
/// configurations accepted by `restrict` (start configurations included).
pub fn post_star(
    a: &Oca,
    starts: &[Configuration],
    budget: &ExplorationBudget,
    restrict: Option<&dyn Fn(Configuration) -> bool>,
) -> Result<Exploration, ResourceExceeded> {
    post_star_until(a, starts, budget, restrict, None)
}

pub fn post_star_until(
    a: &Oca,
    starts: &[Configuration],
    budget: &ExplorationBudget,
    restrict: Option<&dyn Fn(Configuration) -> bool>,
    target: Option<Configuration>,
) -> Result<Exploration, ResourceExceeded> {
    let allowed = |c: Configuration| a.is_valid(c) && restrict.is_none_or(|r| r(c));
    let starts: Vec<_> = starts.iter().copied().filter(|&c| allowed(c)).collect();
    explore(&starts, budget, target, |c, out| {
        out.extend(a.successors(c).filter(|&(_, d)| restrict.is_none_or(|r| r(d))));
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Reachable(Run),
    Unreachable,
    ResourceExceeded(ResourceExceeded),
}

impl OracleVerdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, OracleVerdict::Reachable(_))
    }

    pub fn is_decisive(&self) -> bool {
        !matches!(self, OracleVerdict::ResourceExceeded(_))
    }
}

/// Decides `src →* trg` by exploration under the exact value cap, tightened
/// by `budget.value_cap` if that is smaller.
pub fn reach_oracle(a: &Oca, src: Configuration, trg: Configuration, budget: &ExplorationBudget) -> OracleVerdict {
    if !a.is_valid(src) || !a.is_valid(trg) {
        return OracleVerdict::Unreachable;
    }
    let exact = reach_value_cap(a, src.value, trg.value);
    let cap = exact.min(budget.value_cap);
    let b = budget.with_value_cap(cap);
    match post_star_until(a, &[src], &b, None, Some(trg)) {
        Err(e) => OracleVerdict::ResourceExceeded(e),
        Ok(ex) => match ex.found {
            Some(t) => OracleVerdict::Reachable(ex.run_to(a, t).expect("target was discovered")),
            None if ex.cap_hit && cap < exact => OracleVerdict::ResourceExceeded(ResourceExceeded {
                resource: Resource::Values,
                limit: cap as u64,
            }),
            None if ex.cap_hit && budget.length_cap != usize::MAX => {
                OracleVerdict::ResourceExceeded(ResourceExceeded {
                    resource: Resource::Length,
                    limit: budget.length_cap as u64,
                })
            }
            None => OracleVerdict::Unreachable,
        },
    }
}

/// True iff `Post*(c)` is finite.
pub fn is_bounded(a: &Oca, c: Configuration, budget: &ExplorationBudget) -> Result<bool, ResourceExceeded> {
    let cap = boundedness_value_cap(a, c.value);
    let b = ExplorationBudget { value_cap: cap, length_cap: usize::MAX, node_cap: budget.node_cap };
    let ex = post_star(a, &[c], &b, None)?;
    Ok(!ex.cap_hit)
}

/// Boundedness of `c` in the sub-automaton of its strongly connected component.
pub fn is_locally_bounded(a: &Oca, c: Configuration, budget: &ExplorationBudget) -> Result<bool, ResourceExceeded> {
    let sccs = crate::scc::scc_decompose(a);
    let (sub, map) = a.restrict(&sccs.mask_of(c.state));
    let local = Configuration::new(map[c.state].expect("state kept"), c.value);
    is_bounded(&sub, local, budget)
}

/// Integer-semantics reachability table from `(source, 0)`: guards and
/// nonnegativity are ignored and values are confined to `[low, high]`.
#[derive(Debug, Clone)]
pub struct CandidateTable {
    source: StateId,
    low: i64,
    high: i64,
    ex: Exploration,
}

impl CandidateTable {
    /// Window wide enough to decide every relative offset in `[min_offset, max_offset]`.
    pub fn new(a: &Oca, source: StateId, min_offset: i64, max_offset: i64) -> Self {
        let n = a.num_states() as i128;
        let d = a.norm_delta() as i128;
        let slack = n * n * d * d;
        let low = clamp_cap(-((-(min_offset.min(0) as i128)) + slack));
        let high = clamp_cap((max_offset.max(0) as i128) + slack);
        let budget = ExplorationBudget { value_cap: high, length_cap: usize::MAX, node_cap: usize::MAX };
        let ex = explore(&[Configuration::new(source, 0)], &budget, None, |c, out| {
            for &id in a.outgoing(c.state) {
                let t = a.transition(id);
                if let Some(v) = c.value.checked_add(t.update) {
                    if v >= low {
                        out.push((id, Configuration::new(t.dst, v)));
                    }
                }
            }
        })
        .expect("node cap disabled");
        CandidateTable { source, low, high, ex }
    }

    /// Whether some path from `source` to `state` has effect `offset`.
    pub fn reaches(&self, state: StateId, offset: i64) -> bool {
        debug_assert!(offset >= self.low && offset <= self.high);
        self.ex.contains(Configuration::new(state, offset))
    }

    pub fn path(&self, a: &Oca, state: StateId, offset: i64) -> Option<Path> {
        let (_, ids) = self.ex.trace(Configuration::new(state, offset))?;
        Some(Path::from_ids(a, self.source, &ids).expect("explored edges are adjacent"))
    }
}

/// A path from `src.state` to `trg.state` with effect `trg.value - src.value`
/// under integer semantics, if any.
pub fn candidate_reach(a: &Oca, src: Configuration, trg: Configuration) -> Option<Path> {
    let offset = trg.value.checked_sub(src.value)?;
    let table = CandidateTable::new(a, src.state, offset, offset);
    table.path(a, trg.state, offset)
}

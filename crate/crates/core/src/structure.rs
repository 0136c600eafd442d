//! Short positive cycles, the configurations above them, and their chains.
//!
//! For every state `q` that lies on a positive-effect cycle of length at most
//! `|Q|`, one such cycle with minimal drop is fixed (the lexicographically
//! least by transition id). Iterating it partitions the configurations of `q`
//! at or above its drop into chains; a chain is bounded when iteration is
//! eventually blocked by a guard.

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::automaton::{Configuration, Constraint, Oca, StateId};
use crate::oracle::{self, ExplorationBudget};
use crate::path::Path;
use crate::scc::{scc_decompose, Sccs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCycle {
    pub state: StateId,
    pub cycle: Path,
    pub effect: i64,
    pub drop: i64,
}

/// Arithmetic progression `first, first + period, ...` up to `last`
/// (inclusive, `None` when unbounded) at a single state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chain {
    pub state: StateId,
    pub first: i64,
    pub period: i64,
    pub last: Option<i64>,
    pub contains_invalid_anchor: bool,
}

impl Chain {
    pub fn is_bounded(&self) -> bool {
        self.last.is_some()
    }

    pub fn contains(&self, c: Configuration) -> bool {
        c.state == self.state
            && c.value >= self.first
            && self.last.is_none_or(|l| c.value <= l)
            && (c.value - self.first) % self.period == 0
    }

    pub fn members(&self) -> Option<impl Iterator<Item = i64>> {
        let (first, period) = (self.first, self.period);
        self.last.map(move |l| (first..=l).step_by(period as usize))
    }

    pub fn member_count(&self) -> Option<i64> {
        self.last.map(|l| (l - self.first) / self.period + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("state {0} has no short positive cycle")]
    NotPositive(StateId),
    #[error("the canonical cycle of state {0} visits an equality test")]
    EqualityOnCycle(StateId),
}

/// Minimal drop over positive-effect `q`-cycles of length at most `|Q|`,
/// with the lexicographically least such cycle.
pub fn canonical_cycle(a: &Oca, q: StateId) -> Option<CanonicalCycle> {
    let n = a.num_states();
    let d_max = n as i64 * a.norm_delta();
    if !has_positive_cycle(a, q, d_max) {
        return None;
    }
    let (mut lo, mut hi) = (0, d_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if has_positive_cycle(a, q, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let cycle = least_cycle(a, q, lo);
    let (effect, drop) = cycle.effect_drop().expect("short cycles cannot overflow");
    debug_assert!(effect > 0 && drop == lo);
    Some(CanonicalCycle { state: q, cycle, effect, drop })
}

/// Whether some `q`-cycle of length `1..=|Q|` applied from `(q, d)` stays
/// nonnegative (guards ignored) and ends strictly above `d`.
fn has_positive_cycle(a: &Oca, q: StateId, d: i64) -> bool {
    const NONE: i64 = i64::MIN;
    let n = a.num_states();
    let mut best = vec![NONE; n];
    best[q] = d;
    for _ in 0..n {
        let mut next = vec![NONE; n];
        for t in a.transitions() {
            if best[t.src] == NONE {
                continue;
            }
            let v = best[t.src] + t.update;
            if v >= 0 && v > next[t.dst] {
                next[t.dst] = v;
            }
        }
        if next[q] > d {
            return true;
        }
        best = next;
    }
    false
}

/// Greedy lexicographic construction guided by the least value needed at each
/// state to still close a positive cycle within the remaining length.
fn least_cycle(a: &Oca, q: StateId, d: i64) -> Path {
    const INF: i64 = i64::MAX;
    let n = a.num_states();
    // need[j][p]: least value at p from which q is reached with value > d in at most j steps.
    let mut need = vec![vec![INF; n]; n + 1];
    need[0][q] = d + 1;
    for j in 1..=n {
        need[j] = need[j - 1].clone();
        for t in a.transitions() {
            let req = need[j - 1][t.dst];
            if req == INF {
                continue;
            }
            let v = (req - t.update).max(0);
            if v < need[j][t.src] {
                need[j][t.src] = v;
            }
        }
    }
    let mut path = Path::empty(q);
    let mut value = d;
    let mut at = q;
    for step in 0..n {
        let remaining = n - step - 1;
        let id = a
            .outgoing(at)
            .iter()
            .copied()
            .find(|&id| {
                let t = a.transition(id);
                let v = value + t.update;
                v >= 0 && need[remaining][t.dst] != INF && v >= need[remaining][t.dst]
            })
            .expect("a feasible continuation exists");
        let t = a.transition(id);
        path.push(t).expect("adjacent by construction");
        value += t.update;
        at = t.dst;
        if at == q && value > d {
            return path;
        }
    }
    unreachable!("cycle construction exceeded |Q| steps")
}

/// Chain structure of one state in `Q₊`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTable {
    state: StateId,
    period: i64,
    drop: i64,
    /// Values from which one more iteration of the cycle is blocked, sorted.
    blockers: Vec<i64>,
    /// Value invalid at the state itself, if any.
    anchor: Option<i64>,
}

impl ChainTable {
    pub fn new(a: &Oca, cycle: &CanonicalCycle) -> Result<Self, ChainError> {
        let q = cycle.state;
        if a.guard(q).is_equality() {
            return Err(ChainError::EqualityOnCycle(q));
        }
        let mut blockers = Vec::new();
        let mut prefix = 0;
        for t in cycle.cycle.steps() {
            prefix += t.update;
            match a.guard(t.dst) {
                Constraint::True => {}
                Constraint::Eq(_) => return Err(ChainError::EqualityOnCycle(q)),
                Constraint::Neq(g) => {
                    let b = g - prefix;
                    if b >= cycle.drop {
                        blockers.push(b);
                    }
                }
            }
        }
        blockers.sort_unstable();
        blockers.dedup();
        let anchor = match a.guard(q) {
            Constraint::Neq(g) if g >= cycle.drop => Some(g),
            _ => None,
        };
        Ok(ChainTable { state: q, period: cycle.effect, drop: cycle.drop, blockers, anchor })
    }

    fn same_class(&self, x: i64, y: i64) -> bool {
        (x - y).rem_euclid(self.period) == 0
    }

    /// The chain containing `(state, value)`; `None` below the drop.
    pub fn chain_of(&self, value: i64) -> Option<Chain> {
        if value < self.drop {
            return None;
        }
        if Some(value) == self.anchor {
            return Some(Chain {
                state: self.state,
                first: value,
                period: self.period,
                last: Some(value),
                contains_invalid_anchor: true,
            });
        }
        let lowest = self.drop + (value - self.drop).rem_euclid(self.period);
        let below = self
            .blockers
            .iter()
            .copied()
            .chain(self.anchor)
            .filter(|&b| b < value && self.same_class(b, value))
            .max();
        let first = below.map_or(lowest, |b| b + self.period);
        let last = self.blockers.iter().copied().find(|&b| b >= value && self.same_class(b, value));
        Some(Chain { state: self.state, first, period: self.period, last, contains_invalid_anchor: false })
    }

    /// All chains of the state, ordered by first element. Each residue class
    /// ends with one unbounded chain.
    pub fn chains(&self) -> Vec<Chain> {
        let mut out = Vec::new();
        for r in 0..self.period {
            let mut v = self.drop + r;
            loop {
                let c = self.chain_of(v).expect("value at or above drop");
                out.push(c);
                match c.last {
                    Some(l) => v = l + self.period,
                    None => break,
                }
            }
        }
        out.sort();
        out
    }

    pub fn bounded_chains(&self) -> Vec<Chain> {
        self.chains().into_iter().filter(Chain::is_bounded).collect()
    }
}

/// Local-boundedness classification of one strongly connected component.
#[derive(Debug)]
enum LocalTable {
    /// No short positive cycle in the component: every configuration is bounded.
    AllBounded,
    /// Configurations at or above `threshold` are unbounded; below it,
    /// `unbounded[i][v]` holds for the `i`-th member state.
    Threshold { threshold: i64, unbounded: Vec<Vec<bool>> },
    /// Component with equality tests: answered by exploration and cached.
    Explore { sub: Oca, cache: Mutex<HashMap<Configuration, bool>> },
}

/// Derived structure of an automaton, computed once and shared.
#[derive(Debug)]
pub struct Analysis {
    oca: Oca,
    sccs: Sccs,
    cycles: Vec<Option<CanonicalCycle>>,
    chains: Vec<Option<Result<ChainTable, ChainError>>>,
    local: Vec<LocalTable>,
    /// Position of each state within its component's member list.
    local_index: Vec<usize>,
}

impl Analysis {
    pub fn new(a: &Oca) -> Self {
        let sccs = scc_decompose(a);
        let cycles: Vec<_> = a.states().map(|q| canonical_cycle(a, q)).collect();
        let chains = cycles.iter().map(|c| c.as_ref().map(|c| ChainTable::new(a, c))).collect();
        let mut local_index = vec![0; a.num_states()];
        for comp in &sccs.components {
            for (i, &q) in comp.iter().enumerate() {
                local_index[q] = i;
            }
        }
        let local = sccs.components.iter().map(|comp| local_table(a, &sccs, comp, &cycles)).collect();
        Analysis { oca: a.clone(), sccs, cycles, chains, local, local_index }
    }

    pub fn oca(&self) -> &Oca {
        &self.oca
    }

    pub fn sccs(&self) -> &Sccs {
        &self.sccs
    }

    pub fn canonical_cycle(&self, q: StateId) -> Option<&CanonicalCycle> {
        self.cycles[q].as_ref()
    }

    pub fn q_plus(&self) -> impl Iterator<Item = &CanonicalCycle> {
        self.cycles.iter().flatten()
    }

    pub fn in_q_plus(&self, q: StateId) -> bool {
        self.cycles[q].is_some()
    }

    pub fn conf_plus_contains(&self, c: Configuration) -> bool {
        self.cycles[c.state].as_ref().is_some_and(|g| c.value >= g.drop)
    }

    pub fn chain_table(&self, q: StateId) -> Result<&ChainTable, ChainError> {
        match &self.chains[q] {
            None => Err(ChainError::NotPositive(q)),
            Some(Err(e)) => Err(e.clone()),
            Some(Ok(t)) => Ok(t),
        }
    }

    pub fn enumerate_chains(&self, q: StateId) -> Result<Vec<Chain>, ChainError> {
        self.chain_table(q).map(ChainTable::chains)
    }

    /// The chain containing `c`, if `c` lies in the positive region of a state
    /// whose chains are defined.
    pub fn chain_of(&self, c: Configuration) -> Option<Chain> {
        self.chain_table(c.state).ok()?.chain_of(c.value)
    }

    /// Deterministic text report: components in topological order, positive
    /// states with their canonical cycles as transition ids, and chains.
    pub fn report(&self) -> String {
        use std::fmt::Write as _;
        let a = &self.oca;
        let mut out = String::new();
        for (i, comp) in self.sccs.components.iter().enumerate() {
            let names: Vec<&str> = comp.iter().map(|&q| a.state_name(q)).collect();
            let _ = writeln!(out, "scc {i}: {}", names.join(" "));
        }
        for g in self.q_plus() {
            let ids: Vec<String> =
                g.cycle.transition_ids(a).expect("cycle of the automaton").iter().map(usize::to_string).collect();
            let _ = writeln!(out, "qplus {} {} {} [{}]", a.state_name(g.state), g.effect, g.drop, ids.join(" "));
        }
        for g in self.q_plus() {
            let name = a.state_name(g.state);
            match self.enumerate_chains(g.state) {
                Ok(chains) => {
                    for c in chains {
                        let last = c.last.map_or("inf".to_string(), |l| l.to_string());
                        let _ = writeln!(out, "chain {name} {} {} {last} {}", c.first, c.period, c.contains_invalid_anchor);
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "chain {name} unavailable: {e}");
                }
            }
        }
        out
    }

    /// Boundedness of a valid configuration within its own component.
    pub fn is_locally_bounded(&self, c: Configuration) -> bool {
        let comp = self.sccs.component_of[c.state];
        match &self.local[comp] {
            LocalTable::AllBounded => true,
            LocalTable::Threshold { threshold, unbounded } => {
                if c.value >= *threshold {
                    return false;
                }
                !unbounded[self.local_index[c.state]][c.value as usize]
            }
            LocalTable::Explore { sub, cache } => {
                if let Some(&b) = cache.lock().expect("cache poisoned").get(&c) {
                    return b;
                }
                let local = Configuration::new(self.local_index[c.state], c.value);
                let budget = ExplorationBudget { node_cap: usize::MAX, ..Default::default() };
                let b = oracle::is_bounded(sub, local, &budget).expect("node cap disabled");
                cache.lock().expect("cache poisoned").insert(c, b);
                b
            }
        }
    }
}

fn local_table(a: &Oca, sccs: &Sccs, comp: &[StateId], cycles: &[Option<CanonicalCycle>]) -> LocalTable {
    let mut keep = vec![false; a.num_states()];
    for &q in comp {
        keep[q] = true;
    }
    if comp.iter().any(|&q| a.guard(q).is_equality()) {
        let (sub, _) = a.restrict(&keep);
        return LocalTable::Explore { sub, cache: Mutex::new(HashMap::new()) };
    }
    let Some(min_drop) = comp.iter().filter_map(|&q| cycles[q].as_ref().map(|c| c.drop)).min() else {
        return LocalTable::AllBounded;
    };
    // Above every guard, any member reaches the least-drop cycle state without
    // dropping below the guards and can then pump it.
    let m = comp.len() as i64;
    let threshold = a.norm_tau() + 1 + (m - 1) * a.norm_delta() + min_drop;
    let width = threshold as usize;
    let pos: HashMap<StateId, usize> = comp.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut unbounded = vec![vec![false; width]; comp.len()];
    let mut work = Vec::new();
    for &q in comp {
        for v in 0..threshold {
            let c = Configuration::new(q, v);
            if !a.is_valid(c) {
                continue;
            }
            let escapes = a
                .successors(c)
                .any(|(_, d)| sccs.same_component(q, d.state) && d.value >= threshold);
            if escapes {
                unbounded[pos[&q]][v as usize] = true;
                work.push(c);
            }
        }
    }
    while let Some(d) = work.pop() {
        for (_, c) in a.predecessors(d) {
            if !sccs.same_component(c.state, d.state) || c.value >= threshold {
                continue;
            }
            let slot = &mut unbounded[pos[&c.state]][c.value as usize];
            if !*slot {
                *slot = true;
                work.push(c);
            }
        }
    }
    LocalTable::Threshold { threshold, unbounded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_oca, Transition};
    use crate::path::{apply_path, Mode};
    use crate::testing::THREE_CYCLE;
    use proptest::prelude::*;

    #[test]
    fn three_state_cycle() {
        let a = parse_oca(THREE_CYCLE).unwrap();
        let an = Analysis::new(&a);
        for q in a.states() {
            let c = an.canonical_cycle(q).unwrap();
            assert_eq!((c.effect, c.drop, c.cycle.len()), (5, 0, 3));
        }
        let chains = an.enumerate_chains(0).unwrap();
        let bounded: Vec<Vec<i64>> =
            chains.iter().filter_map(|c| c.members().map(Iterator::collect)).collect();
        assert_eq!(bounded, vec![vec![0], vec![2, 7, 12], vec![3, 8, 13, 18, 23, 28], vec![5]]);
        let unbounded: Vec<i64> = chains.iter().filter(|c| !c.is_bounded()).map(|c| c.first).collect();
        assert_eq!(unbounded, vec![1, 4, 10, 17, 33]);
        assert!(chains.iter().find(|c| c.first == 5).unwrap().contains_invalid_anchor);
    }

    #[test]
    fn acyclic_has_empty_q_plus() {
        let a = parse_oca("states: a b c\ntrans a +1 b\ntrans b +1 c\n").unwrap();
        let an = Analysis::new(&a);
        assert_eq!(an.q_plus().count(), 0);
        assert!(!an.conf_plus_contains(Configuration::new(0, 100)));
        assert!(matches!(an.enumerate_chains(0), Err(ChainError::NotPositive(0))));
    }

    #[test]
    fn guard_free_chains_are_unbounded() {
        let a = parse_oca("states: q r\ntrans q -2 r\ntrans r +5 q\n").unwrap();
        let an = Analysis::new(&a);
        let c = an.canonical_cycle(0).unwrap();
        assert_eq!((c.effect, c.drop), (3, 2));
        let chains = an.enumerate_chains(0).unwrap();
        assert_eq!(chains.len(), 3);
        assert!(chains.iter().all(|c| !c.is_bounded()));
        assert_eq!(chains.iter().map(|c| c.first).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(!an.conf_plus_contains(Configuration::new(0, 1)));
        assert!(an.conf_plus_contains(Configuration::new(0, 2)));
    }

    #[test]
    fn prefers_lexicographically_least_cycle() {
        // Two drop-0 cycles at q: via r (ids 1, 3) and via s (ids 0, 2); ids 0, 2 win.
        let a = parse_oca("states: q r s\ntrans q +1 s\ntrans q +1 r\ntrans s +1 q\ntrans r +1 q\n").unwrap();
        let c = canonical_cycle(&a, 0).unwrap();
        assert_eq!(c.cycle.transition_ids(&a).unwrap(), vec![0, 2]);
    }

    fn arb_oca(max_n: usize) -> impl Strategy<Value = Oca> {
        (1usize..=max_n).prop_flat_map(|n| {
            let ts = proptest::collection::vec((0..n, -5i64..6, 0..n), 1..10);
            let gs = proptest::collection::vec(proptest::option::of(0i64..16), n);
            (Just(n), ts, gs).prop_map(|(n, ts, gs)| {
                let names = (0..n).map(|i| format!("s{i}")).collect();
                let guards = gs.into_iter().map(|g| g.map_or(Constraint::True, Constraint::Neq)).collect();
                Oca::from_parts(names, guards, ts.into_iter().map(|(p, u, q)| Transition::new(p, u, q)).collect())
            })
        })
    }

    /// All `q`-cycles of length `1..=|Q|` by exhaustive enumeration.
    fn all_cycles(a: &Oca, q: StateId) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = vec![Path::empty(q)];
        while let Some(p) = stack.pop() {
            if !p.is_empty() && p.end() == q {
                out.push(p.clone());
            }
            if p.len() == a.num_states() {
                continue;
            }
            for &id in a.outgoing(p.end()) {
                let mut next = p.clone();
                next.push(a.transition(id)).unwrap();
                stack.push(next);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn minimal_drop_matches_enumeration(a in arb_oca(4)) {
            for q in a.states() {
                let best = all_cycles(&a, q)
                    .into_iter()
                    .filter_map(|p| {
                        let (e, d) = p.effect_drop().unwrap();
                        (e > 0).then_some((d, p.transition_ids(&a).unwrap()))
                    })
                    .min();
                let got = canonical_cycle(&a, q);
                prop_assert_eq!(got.is_some(), best.is_some());
                if let (Some(g), Some((d, ids))) = (got, best) {
                    prop_assert_eq!(g.drop, d);
                    prop_assert!(g.cycle.len() <= a.num_states());
                    prop_assert_eq!(g.cycle.transition_ids(&a).unwrap(), ids);
                }
            }
        }

        #[test]
        fn chains_agree_with_iteration(a in arb_oca(4)) {
            let an = Analysis::new(&a);
            let n = a.num_states() as i64;
            for g in an.q_plus() {
                let table = an.chain_table(g.state).unwrap();
                let chains = table.chains();
                let bounded = chains.iter().filter(|c| c.is_bounded()).count() as i64;
                prop_assert!(bounded <= 2 * n * n);
                for c in &chains {
                    if let Some(l) = c.last {
                        prop_assert!(l <= a.norm_tau() + n * a.norm_delta());
                        if a.norm_tau() >= 1 {
                            prop_assert!(l <= 2 * n * a.norm_delta() * a.norm_tau());
                        }
                    }
                }
                let step_ok = |v: i64| {
                    apply_path(&a, Configuration::new(g.state, v), &g.cycle, Mode::Valid).is_ok()
                };
                let top = a.norm_tau() + n * a.norm_delta() + 2 * g.effect;
                for v in g.drop..=top {
                    let chain = table.chain_of(v).unwrap();
                    prop_assert!(chain.contains(Configuration::new(g.state, v)));
                    prop_assert_eq!(chains.iter().filter(|c| c.contains(Configuration::new(g.state, v))).count(), 1);
                    // Forward: the chain continues past v exactly when one more iteration succeeds.
                    prop_assert_eq!(chain.last != Some(v), step_ok(v));
                    // Backward: v - period belongs to the same chain exactly when it steps to v.
                    let prev = v - g.effect;
                    let joined = prev >= g.drop && step_ok(prev);
                    prop_assert_eq!(chain.first != v, joined);
                }
            }
        }

        #[test]
        fn local_table_matches_exploration(a in arb_oca(4), x in 0i64..30) {
            let an = Analysis::new(&a);
            let b = ExplorationBudget::default();
            for q in a.states() {
                let c = Configuration::new(q, x);
                if a.is_valid(c) {
                    prop_assert_eq!(an.is_locally_bounded(c), oracle::is_locally_bounded(&a, c, &b).unwrap());
                }
            }
        }

        #[test]
        fn unbounded_chain_members_are_unbounded(a in arb_oca(4)) {
            let an = Analysis::new(&a);
            let b = ExplorationBudget::default();
            for g in an.q_plus() {
                for c in an.enumerate_chains(g.state).unwrap() {
                    if c.is_bounded() {
                        continue;
                    }
                    for k in 0..3 {
                        let cfg = Configuration::new(g.state, c.first + k * c.period);
                        prop_assert!(!oracle::is_bounded(&a, cfg, &b).unwrap());
                    }
                }
            }
        }
    }
}

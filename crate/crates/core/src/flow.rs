//! Transition multisets with flow conservation, and their relation to paths.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::automaton::{StateId, Transition};
use crate::path::{ArithmeticOverflow, Path, PathError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("flow is unbalanced at state {0}")]
    Unbalanced(StateId),
    #[error("support of the flow is not connected to its endpoints")]
    Disconnected,
    #[error("not a cycle")]
    NotACycle,
    #[error("cycle effect is not positive")]
    NonPositiveEffect,
    #[error(transparent)]
    Overflow(#[from] ArithmeticOverflow),
}

/// Multiplicity per transition plus designated start and end states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Flow {
    pub multiplicity: BTreeMap<Transition, u64>,
    pub start: StateId,
    pub end: StateId,
}

impl Flow {
    pub fn zero(at: StateId) -> Self {
        Flow { multiplicity: BTreeMap::new(), start: at, end: at }
    }

    pub fn is_zero(&self) -> bool {
        self.multiplicity.is_empty()
    }

    pub fn get(&self, t: &Transition) -> u64 {
        self.multiplicity.get(t).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, t: Transition, k: u64) {
        if k > 0 {
            *self.multiplicity.entry(t).or_insert(0) += k;
        }
    }

    fn remove_one(&mut self, t: &Transition) {
        let m = self.multiplicity.get_mut(t).expect("transition in support");
        *m -= 1;
        if *m == 0 {
            self.multiplicity.remove(t);
        }
    }

    pub fn size(&self) -> u64 {
        self.multiplicity.values().sum()
    }

    pub fn effect(&self) -> Result<i64, ArithmeticOverflow> {
        let mut e: i128 = 0;
        for (t, &m) in &self.multiplicity {
            e += t.update as i128 * m as i128;
        }
        i64::try_from(e).map_err(|_| ArithmeticOverflow)
    }

    pub fn in_degree(&self, q: StateId) -> u64 {
        self.multiplicity.iter().filter(|(t, _)| t.dst == q).map(|(_, &m)| m).sum()
    }

    pub fn out_degree(&self, q: StateId) -> u64 {
        self.multiplicity.iter().filter(|(t, _)| t.src == q).map(|(_, &m)| m).sum()
    }

    /// Whether `q` is an endpoint of some transition in the support.
    pub fn touches(&self, q: StateId) -> bool {
        self.multiplicity.keys().any(|t| t.src == q || t.dst == q)
    }

    /// States of the support graph, including start and end.
    pub fn states(&self) -> BTreeSet<StateId> {
        let mut s: BTreeSet<StateId> = self.multiplicity.keys().flat_map(|t| [t.src, t.dst]).collect();
        s.insert(self.start);
        s.insert(self.end);
        s
    }

    pub fn is_le(&self, other: &Flow) -> bool {
        self.multiplicity.iter().all(|(t, &m)| other.get(t) >= m)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let mut balance: BTreeMap<StateId, i128> = BTreeMap::new();
        for (t, &m) in &self.multiplicity {
            *balance.entry(t.src).or_insert(0) += m as i128;
            *balance.entry(t.dst).or_insert(0) -= m as i128;
        }
        if self.start != self.end {
            *balance.entry(self.start).or_insert(0) -= 1;
            *balance.entry(self.end).or_insert(0) += 1;
        }
        if let Some((&q, _)) = balance.iter().find(|(_, &b)| b != 0) {
            return Err(FlowError::Unbalanced(q));
        }
        if !self.is_connected() {
            return Err(FlowError::Disconnected);
        }
        Ok(())
    }

    /// Undirected connectivity of the support together with start and end.
    fn is_connected(&self) -> bool {
        let states: Vec<StateId> = self.states().into_iter().collect();
        let index = |q: StateId| states.binary_search(&q).expect("state of support");
        let mut parent: Vec<usize> = (0..states.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = states.len();
        for t in self.multiplicity.keys() {
            let (a, b) = (find(&mut parent, index(t.src)), find(&mut parent, index(t.dst)));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }
}

impl std::ops::Add for &Flow {
    type Output = Flow;

    /// Sum of multiplicities, spanning from `self.start` to `rhs.end`.
    fn add(self, rhs: &Flow) -> Flow {
        let mut f = self.clone();
        for (&t, &m) in &rhs.multiplicity {
            f.insert(t, m);
        }
        f.end = rhs.end;
        f
    }
}

pub fn flow_of_path(p: &Path) -> Flow {
    let mut f = Flow::zero(p.start());
    f.end = p.end();
    for &t in p.steps() {
        f.insert(t, 1);
    }
    f
}

/// A path whose flow is `f`, built by repeatedly removing a transition into
/// the current end whose removal leaves a flow. Candidates are tried in
/// transition order.
pub fn path_from_flow(f: &Flow) -> Result<Path, FlowError> {
    f.validate()?;
    let mut rest = f.clone();
    let mut reversed = Vec::with_capacity(f.size() as usize);
    while !rest.is_zero() {
        let end = rest.end;
        let candidates: Vec<Transition> = rest.multiplicity.keys().copied().filter(|t| t.dst == end).collect();
        let mut chosen = None;
        for t in candidates {
            let mut g = rest.clone();
            g.remove_one(&t);
            g.end = t.src;
            let ok = if g.is_zero() { g.start == g.end } else { g.is_connected() };
            if ok {
                chosen = Some((t, g));
                break;
            }
        }
        let (t, g) = chosen.ok_or(FlowError::Disconnected)?;
        reversed.push(t);
        rest = g;
    }
    reversed.reverse();
    Ok(Path::new(f.start, reversed).expect("peeling yields adjacent transitions"))
}

/// A simple cycle of positive effect inside the support of `f`, if any.
/// Every flow `f₊ ≤ f` from a state to itself with positive effect contains
/// such a cycle, and conversely such a cycle is itself a flow below `f`.
pub fn positive_cycle(f: &Flow) -> Option<Vec<Transition>> {
    let states: Vec<StateId> = f.states().into_iter().collect();
    let n = states.len();
    let index = |q: StateId| states.binary_search(&q).expect("state of support");
    let edges: Vec<(usize, usize, i128, Transition)> =
        f.multiplicity.keys().map(|t| (index(t.src), index(t.dst), -(t.update as i128), *t)).collect();
    // Bellman-Ford from a virtual source joined to every state.
    let mut dist = vec![0i128; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..n {
        last = None;
        for (k, &(u, v, w, _)) in edges.iter().enumerate() {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                pred[v] = Some(k);
                last = Some(v);
            }
        }
        last?;
    }
    let mut v = last?;
    for _ in 0..n {
        v = edges[pred[v].expect("relaxed vertex has a predecessor")].0;
    }
    let anchor = v;
    let mut cycle = Vec::new();
    loop {
        let k = pred[v].expect("cycle vertex has a predecessor");
        cycle.push(edges[k].3);
        v = edges[k].0;
        if v == anchor {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

pub fn flow_has_positive_cycle(f: &Flow) -> bool {
    positive_cycle(f).is_some()
}

/// Rotation of a positive cycle starting right after its lowest prefix, so
/// that it never dips below its starting value.
pub fn rotate_to_zero_drop(cycle: &Path) -> Result<Path, FlowError> {
    if cycle.is_empty() || !cycle.is_cycle() {
        return Err(FlowError::NotACycle);
    }
    if cycle.effect()? <= 0 {
        return Err(FlowError::NonPositiveEffect);
    }
    let mut best = (0i64, 0usize);
    let mut prefix = 0i64;
    for (i, t) in cycle.steps().iter().enumerate() {
        prefix += t.update;
        if prefix < best.0 {
            best = (prefix, i + 1);
        }
    }
    Ok(cycle.rotate(best.1))
}

impl From<PathError> for FlowError {
    fn from(e: PathError) -> Self {
        match e {
            PathError::Overflow(o) => FlowError::Overflow(o),
            _ => FlowError::NotACycle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: usize, u: i64, d: usize) -> Transition {
        Transition::new(s, u, d)
    }

    #[test]
    fn flow_of_empty_and_repeated_cycle() {
        let f = flow_of_path(&Path::empty(2));
        assert_eq!(f, Flow::zero(2));
        assert!(f.validate().is_ok());
        let cyc = Path::new(0, vec![t(0, 2, 1), t(1, 1, 2), t(2, 2, 0)]).unwrap();
        let f = flow_of_path(&cyc.repeat(2));
        assert!(f.multiplicity.values().all(|&m| m == 2));
        assert_eq!(path_from_flow(&Flow::zero(1)).unwrap(), Path::empty(1));
    }

    #[test]
    fn figure_eight_round_trip() {
        let mut f = Flow::zero(0);
        for tr in [t(0, 1, 1), t(1, -1, 0), t(0, 2, 2), t(2, -3, 0)] {
            f.insert(tr, 1);
        }
        let p = path_from_flow(&f).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(flow_of_path(&p), f);
    }

    #[test]
    fn invalid_flows_are_rejected() {
        let mut f = Flow::zero(0);
        f.insert(t(0, 1, 1), 1);
        assert_eq!(f.validate(), Err(FlowError::Unbalanced(0)));
        f.end = 1;
        assert!(f.validate().is_ok());
        f.insert(t(2, 1, 2), 1);
        assert_eq!(path_from_flow(&f), Err(FlowError::Disconnected));
        let mut g = Flow::zero(0);
        g.end = 1;
        assert_eq!(g.validate(), Err(FlowError::Unbalanced(0)));
    }

    #[test]
    fn positive_cycles() {
        let cyc = Path::new(0, vec![t(0, 2, 1), t(1, 1, 2), t(2, 2, 0)]).unwrap();
        assert!(flow_has_positive_cycle(&flow_of_path(&cyc)));
        let line = Path::new(0, vec![t(0, 5, 1), t(1, 5, 2)]).unwrap();
        assert!(!flow_has_positive_cycle(&flow_of_path(&line)));
        let neg = Path::new(0, vec![t(0, 2, 1), t(1, -3, 0)]).unwrap();
        assert!(!flow_has_positive_cycle(&flow_of_path(&neg)));
    }

    #[test]
    fn rotation_examples() {
        let cyc = Path::new(0, vec![t(0, 2, 1), t(1, 1, 2), t(2, 2, 0)]).unwrap();
        assert_eq!(rotate_to_zero_drop(&cyc).unwrap(), cyc);
        let c2 = Path::new(0, vec![t(0, -1, 1), t(1, 3, 0)]).unwrap();
        let r = rotate_to_zero_drop(&c2).unwrap();
        assert_eq!(r.steps(), &[t(1, 3, 0), t(0, -1, 1)]);
        assert_eq!(r.drop().unwrap(), 0);
        let bad = Path::new(0, vec![t(0, -1, 1), t(1, 1, 0)]).unwrap();
        assert_eq!(rotate_to_zero_drop(&bad), Err(FlowError::NonPositiveEffect));
        assert_eq!(rotate_to_zero_drop(&Path::new(0, vec![t(0, 1, 1)]).unwrap()), Err(FlowError::NotACycle));
    }

    /// Random walk over a fixed random graph.
    fn arb_path() -> impl Strategy<Value = Path> {
        (2usize..6)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec((0..n, -6i64..7, 0..n), 1..12),
                    proptest::collection::vec(any::<prop::sample::Index>(), 0..30),
                )
            })
            .prop_map(|(n, edges, picks)| {
                let edges: Vec<Transition> = edges.into_iter().map(|(a, u, b)| t(a, u, b)).collect();
                let start = edges[0].src;
                let mut p = Path::empty(start);
                for ix in picks {
                    let out: Vec<&Transition> = edges.iter().filter(|e| e.src == p.end()).collect();
                    if out.is_empty() {
                        break;
                    }
                    p.push(*out[ix.index(out.len())]).unwrap();
                }
                let _ = n;
                p
            })
    }

    /// Exhaustive simple-cycle search in the support.
    fn brute_positive_cycle(f: &Flow) -> bool {
        let ts: Vec<Transition> = f.multiplicity.keys().copied().collect();
        fn dfs(ts: &[Transition], start: StateId, at: StateId, eff: i64, seen: &mut Vec<StateId>) -> bool {
            for tr in ts.iter().filter(|x| x.src == at) {
                if tr.dst == start && eff + tr.update > 0 {
                    return true;
                }
                if !seen.contains(&tr.dst) && tr.dst != start {
                    seen.push(tr.dst);
                    if dfs(ts, start, tr.dst, eff + tr.update, seen) {
                        return true;
                    }
                    seen.pop();
                }
            }
            false
        }
        f.states().into_iter().any(|q| dfs(&ts, q, q, 0, &mut vec![]))
    }

    proptest! {
        #[test]
        fn round_trip(p in arb_path()) {
            let f = flow_of_path(&p);
            prop_assert!(f.validate().is_ok());
            prop_assert_eq!(f.size(), p.len() as u64);
            prop_assert_eq!(f.effect().unwrap(), p.effect().unwrap());
            let q = path_from_flow(&f).unwrap();
            prop_assert_eq!(q.start(), p.start());
            prop_assert_eq!(q.end(), p.end());
            prop_assert_eq!(flow_of_path(&q), f);
        }

        #[test]
        fn positive_cycle_matches_enumeration(p in arb_path()) {
            let f = flow_of_path(&p);
            let found = positive_cycle(&f);
            prop_assert_eq!(found.is_some(), brute_positive_cycle(&f));
            if let Some(c) = found {
                let cyc = Path::new(c[0].src, c).unwrap();
                prop_assert!(cyc.is_cycle());
                prop_assert!(cyc.effect().unwrap() > 0);
            }
        }

        #[test]
        fn rotation_has_zero_drop(p in arb_path()) {
            // Close any walk into a cycle candidate by taking its cyclic segments.
            let states = p.states();
            for i in 0..states.len() {
                for j in i + 1..states.len() {
                    if states[i] != states[j] {
                        continue;
                    }
                    let seg = Path::new(states[i], p.steps()[i..j].to_vec()).unwrap();
                    if seg.effect().unwrap() <= 0 {
                        continue;
                    }
                    let r = rotate_to_zero_drop(&seg).unwrap();
                    prop_assert_eq!(r.drop().unwrap(), 0);
                    prop_assert_eq!(flow_of_path(&r).multiplicity, flow_of_path(&seg).multiplicity);
                }
            }
        }
    }
}

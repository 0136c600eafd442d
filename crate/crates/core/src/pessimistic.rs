//! Pessimistic runs (no configuration in the positive region after the first),
//! their exploration, and flow-decomposition certificates for them.
//!
//! Certificate text format:
//!
//! ```text
//! certificate
//! src q:0
//! trg s:3
//! FLOW
//! 0:1 1:1
//! DECOMP
//! block 0:1
//! block 1:1
//! WAYPOINTS
//! q:0 r:2 s:3
//! CROSSINGS
//! r 1 2
//! ```
//!
//! Flows are lists of `transition-id:multiplicity`. Block `i` (1-based) is a
//! flow from waypoint `i - 1` to waypoint `i`. A crossing `q i j` names two
//! consecutive waypoints at `q` on opposite sides of its guard.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::automaton::{Configuration, Constraint, Oca, StateId};
use crate::flow::{flow_of_path, positive_cycle, Flow};
use crate::oracle::{explore, Exploration, ExplorationBudget};
use crate::path::{Path, Run};
use crate::structure::Analysis;

/// Largest value a pessimistic run from values at most `max_start` can reach.
pub fn pessimistic_value_bound(a: &Oca, max_start: i64) -> i64 {
    let n = a.num_states().max(1) as i64;
    max_start.saturating_add((n - 1).saturating_mul(a.norm_delta()))
}

/// Configurations reachable from `starts` by pessimistic runs, optionally
/// confined to locally bounded configurations. Panics if a value exceeds the
/// pessimistic value bound, which would indicate a bug in the positive-region
/// computation.
pub fn pessimistic_post_star(an: &Analysis, starts: &[Configuration], locally_bounded: bool) -> Exploration {
    pessimistic_search(an, starts, locally_bounded, None)
}

fn pessimistic_search(
    an: &Analysis,
    starts: &[Configuration],
    locally_bounded: bool,
    target: Option<Configuration>,
) -> Exploration {
    let a = an.oca();
    let starts: Vec<Configuration> = starts
        .iter()
        .copied()
        .filter(|&c| a.is_valid(c) && (!locally_bounded || an.is_locally_bounded(c)))
        .collect();
    let max_start = starts.iter().map(|c| c.value).max().unwrap_or(0);
    let bound = pessimistic_value_bound(a, max_start);
    let budget = ExplorationBudget { value_cap: bound, length_cap: usize::MAX, node_cap: usize::MAX };
    let ex = explore(&starts, &budget, target, |c, out| {
        out.extend(
            a.successors(c)
                .filter(|&(_, d)| !an.conf_plus_contains(d) && (!locally_bounded || an.is_locally_bounded(d))),
        );
    })
    .expect("node cap disabled");
    assert!(!ex.cap_hit, "pessimistic run exceeded the value bound {bound}");
    ex
}

/// A pessimistic run from `src` to `trg`, if one exists.
pub fn decide_pessimistic_reach(an: &Analysis, src: Configuration, trg: Configuration) -> Option<Run> {
    let ex = pessimistic_search(an, &[src], false, Some(trg));
    ex.found.and_then(|t| ex.run_to(an.oca(), t))
}

/// Whether a run is pessimistic with respect to `an`.
pub fn is_pessimistic(an: &Analysis, run: &Run) -> bool {
    run.configs.iter().skip(1).all(|&c| !an.conf_plus_contains(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Crossing {
    pub state: StateId,
    pub above: usize,
    pub below: usize,
}

/// Flow decomposition witnessing a run from `src` to `trg`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PessimisticCertificate {
    pub src: Configuration,
    pub trg: Configuration,
    pub flow: Flow,
    pub blocks: Vec<Flow>,
    pub waypoints: Vec<Configuration>,
    pub crossings: Vec<Crossing>,
}

/// The first certificate condition that fails.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Refutation {
    #[error("endpoints do not match the query")]
    Endpoints,
    #[error("too many blocks: {found} > {limit}")]
    BlockCount { found: usize, limit: usize },
    #[error("block {0} is not a flow between its waypoints")]
    BlockFlow(usize),
    #[error("blocks do not sum to the flow")]
    DecompositionSum,
    #[error("flow is not a flow from source to target")]
    FlowShape,
    #[error("flow effect differs from the counter difference")]
    Effect,
    #[error("waypoint {0} value differs from the accumulated effect")]
    WaypointValue(usize),
    #[error("waypoint {0} is negative")]
    WaypointNegative(usize),
    #[error("waypoint {0} violates its guard")]
    WaypointGuard(usize),
    #[error("flow contains a positive cycle")]
    PositiveCycle,
    #[error("state {0} occurs in the flow but at no waypoint")]
    MissingWaypoint(StateId),
    #[error("state {0} occurs after its last waypoint")]
    AfterLast(StateId),
    #[error("state {0} occurs before its first waypoint")]
    BeforeFirst(StateId),
    #[error("guard of state {0} is crossed without a valid crossing entry")]
    Crossing(StateId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl PessimisticCertificate {
    /// Splits a run whose flow has no positive cycle at first and last
    /// occurrences of each state and, for each disequality-guarded state, at
    /// the last visit above and the first visit below its guard.
    pub fn from_run(a: &Oca, run: &Run) -> Self {
        let len = run.configs.len();
        let mut cuts = vec![0, len - 1];
        let mut first: BTreeMap<StateId, usize> = BTreeMap::new();
        let mut last: BTreeMap<StateId, usize> = BTreeMap::new();
        for (i, c) in run.configs.iter().enumerate() {
            first.entry(c.state).or_insert(i);
            last.insert(c.state, i);
        }
        cuts.extend(first.values().copied());
        cuts.extend(last.values().copied());
        for q in first.keys().copied() {
            if let Constraint::Neq(g) = a.guard(q) {
                let visits = run.configs.iter().enumerate().filter(|(_, c)| c.state == q);
                if let Some((i, _)) = visits.clone().rfind(|(_, c)| c.value > g) {
                    cuts.push(i);
                }
                if let Some((i, _)) = visits.clone().find(|(_, c)| c.value < g) {
                    cuts.push(i);
                }
            }
        }
        cuts.sort_unstable();
        cuts.dedup();

        let waypoints: Vec<Configuration> = cuts.iter().map(|&i| run.configs[i]).collect();
        let blocks: Vec<Flow> = cuts
            .windows(2)
            .map(|w| {
                let steps = run.path.steps()[w[0]..w[1]].to_vec();
                flow_of_path(&Path::new(run.configs[w[0]].state, steps).expect("segment of a path"))
            })
            .collect();
        let mut crossings = Vec::new();
        for q in first.keys().copied() {
            if let Constraint::Neq(g) = a.guard(q) {
                let at: Vec<usize> = (0..waypoints.len()).filter(|&i| waypoints[i].state == q).collect();
                for w in at.windows(2) {
                    if waypoints[w[0]].value > g && waypoints[w[1]].value < g {
                        crossings.push(Crossing { state: q, above: w[0], below: w[1] });
                    }
                }
            }
        }
        PessimisticCertificate {
            src: run.first(),
            trg: run.last(),
            flow: flow_of_path(&run.path),
            blocks,
            waypoints,
            crossings,
        }
    }

    /// Checks every condition; on success the reconstructed run is returned.
    pub fn verify(&self, a: &Oca, src: Configuration, trg: Configuration) -> Result<Run, Refutation> {
        let m = self.blocks.len();
        if self.src != src || self.trg != trg || self.waypoints.len() != m + 1 {
            return Err(Refutation::Endpoints);
        }
        if self.waypoints[0] != src || self.waypoints[m] != trg {
            return Err(Refutation::Endpoints);
        }
        let limit = 4 * a.num_states() + 1;
        if m > limit {
            return Err(Refutation::BlockCount { found: m, limit });
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let (s, e) = (self.waypoints[i].state, self.waypoints[i + 1].state);
            let known = b.multiplicity.keys().all(|t| a.transition_id(t).is_some());
            if b.start != s || b.end != e || !known || b.validate().is_err() {
                return Err(Refutation::BlockFlow(i + 1));
            }
        }
        let mut sum = Flow::zero(src.state);
        for b in &self.blocks {
            for (&t, &k) in &b.multiplicity {
                sum.insert(t, k);
            }
        }
        if sum.multiplicity != self.flow.multiplicity {
            return Err(Refutation::DecompositionSum);
        }
        if self.flow.start != src.state || self.flow.end != trg.state || self.flow.validate().is_err() {
            return Err(Refutation::FlowShape);
        }
        if self.flow.effect().ok() != trg.value.checked_sub(src.value) {
            return Err(Refutation::Effect);
        }
        let mut x = src.value;
        for i in 0..=m {
            if i > 0 {
                x = self.blocks[i - 1]
                    .effect()
                    .ok()
                    .and_then(|e| x.checked_add(e))
                    .ok_or(Refutation::WaypointValue(i))?;
            }
            let w = self.waypoints[i];
            if w.value != x {
                return Err(Refutation::WaypointValue(i));
            }
            if w.value < 0 {
                return Err(Refutation::WaypointNegative(i));
            }
            if !a.guard(w.state).allows(w.value) {
                return Err(Refutation::WaypointGuard(i));
            }
        }
        if positive_cycle(&self.flow).is_some() {
            return Err(Refutation::PositiveCycle);
        }
        for q in self.flow.states() {
            let visits: Vec<usize> = (0..=m).filter(|&i| self.waypoints[i].state == q).collect();
            let (Some(&lo), Some(&hi)) = (visits.first(), visits.last()) else {
                return Err(Refutation::MissingWaypoint(q));
            };
            // Blocks are 1-based: block i runs from waypoint i - 1 to waypoint i.
            for i in hi + 1..=m {
                let b = &self.blocks[i - 1];
                let allowed = i == hi + 1 && b.in_degree(q) == 0 && b.out_degree(q) <= 1;
                if b.touches(q) && !allowed {
                    return Err(Refutation::AfterLast(q));
                }
            }
            for i in 1..=lo {
                let b = &self.blocks[i - 1];
                let allowed = i == lo && b.out_degree(q) == 0 && b.in_degree(q) <= 1;
                if b.touches(q) && !allowed {
                    return Err(Refutation::BeforeFirst(q));
                }
            }
            if let Constraint::Neq(g) = a.guard(q) {
                let above = visits.iter().any(|&i| self.waypoints[i].value > g);
                let below = visits.iter().any(|&i| self.waypoints[i].value < g);
                if above && below && !self.crossing_ok(q, g, &visits) {
                    return Err(Refutation::Crossing(q));
                }
            }
        }
        self.reconstruct(a, src).ok_or(Refutation::FlowShape)
    }

    fn crossing_ok(&self, q: StateId, g: i64, visits: &[usize]) -> bool {
        self.crossings.iter().filter(|c| c.state == q).any(|c| {
            let (i, j) = (c.above, c.below);
            let consecutive = visits.windows(2).any(|w| w[0] == i && w[1] == j);
            if !consecutive || !(self.waypoints[i].value > g && g > self.waypoints[j].value) {
                return false;
            }
            (i + 1..=j).all(|k| {
                let b = &self.blocks[k - 1];
                let (inn, out) = (b.in_degree(q), b.out_degree(q));
                match (k == i + 1, k == j) {
                    (true, true) => inn == 1 && out == 1,
                    (true, false) => inn == 0 && out == 1,
                    (false, true) => inn == 1 && out == 0,
                    (false, false) => !b.touches(q),
                }
            })
        })
    }

    /// Concatenates a path for every block; each block is valid so this
    /// cannot fail once the structural checks passed.
    fn reconstruct(&self, a: &Oca, src: Configuration) -> Option<Run> {
        let mut path = Path::empty(src.state);
        for b in &self.blocks {
            let p = crate::flow::path_from_flow(b).ok()?;
            path = path.concat(&p).ok()?;
        }
        crate::path::apply_path(a, src, &path, crate::path::Mode::Candidate).ok()
    }

    pub fn to_text(&self, a: &Oca) -> String {
        let flow_line = |f: &Flow| {
            f.multiplicity
                .iter()
                .map(|(t, m)| format!("{}:{}", a.transition_id(t).expect("transition of the automaton"), m))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "certificate");
        let _ = writeln!(out, "src {}", a.format_configuration(self.src));
        let _ = writeln!(out, "trg {}", a.format_configuration(self.trg));
        let _ = writeln!(out, "FLOW\n{}", flow_line(&self.flow));
        let _ = writeln!(out, "DECOMP");
        for b in &self.blocks {
            let body = flow_line(b);
            if body.is_empty() {
                let _ = writeln!(out, "block");
            } else {
                let _ = writeln!(out, "block {body}");
            }
        }
        let wps: Vec<String> = self.waypoints.iter().map(|&c| a.format_configuration(c)).collect();
        let _ = writeln!(out, "WAYPOINTS\n{}", wps.join(" "));
        let _ = writeln!(out, "CROSSINGS");
        for c in &self.crossings {
            let _ = writeln!(out, "{} {} {}", a.state_name(c.state), c.above, c.below);
        }
        out
    }

    pub fn parse(a: &Oca, text: &str) -> Result<Self, CertificateError> {
        let err = |line: usize, message: &str| CertificateError::Syntax { line, message: message.to_string() };
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut it = lines.into_iter().peekable();
        let mut expect = |kw: &str| -> Result<(usize, String), CertificateError> {
            let (n, l) = it.next().ok_or_else(|| err(0, &format!("missing `{kw}`")))?;
            let rest = l.strip_prefix(kw).ok_or_else(|| err(n, &format!("expected `{kw}`")))?;
            Ok((n, rest.trim().to_string()))
        };
        let (n, rest) = expect("certificate")?;
        if !rest.is_empty() {
            return Err(err(n, "unexpected text after header"));
        }
        let config = |n: usize, s: &str| a.parse_configuration(s).map_err(|e| err(n, &e.to_string()));
        let (n, s) = expect("src")?;
        let src = config(n, &s)?;
        let (n, s) = expect("trg")?;
        let trg = config(n, &s)?;
        let flow_from = |n: usize, body: &str, start: StateId, end: StateId| -> Result<Flow, CertificateError> {
            let mut f = Flow { multiplicity: BTreeMap::new(), start, end };
            for item in body.split_whitespace() {
                let (id, m) = item.split_once(':').ok_or_else(|| err(n, "expected `id:multiplicity`"))?;
                let id: usize = id.parse().map_err(|_| err(n, "bad transition id"))?;
                let m: u64 = m.parse().map_err(|_| err(n, "bad multiplicity"))?;
                let t = *a.transitions().get(id).ok_or_else(|| err(n, "transition id out of range"))?;
                f.insert(t, m);
            }
            Ok(f)
        };

        let mut sections: Vec<(usize, String)> = Vec::new();
        for (n, l) in it {
            sections.push((n, l.to_string()));
        }
        let pos = |kw: &str| sections.iter().position(|(_, l)| l == kw);
        let (Some(fp), Some(dp), Some(wp), Some(cp)) = (pos("FLOW"), pos("DECOMP"), pos("WAYPOINTS"), pos("CROSSINGS"))
        else {
            return Err(err(0, "missing section (FLOW, DECOMP, WAYPOINTS, CROSSINGS)"));
        };
        if !(fp < dp && dp < wp && wp < cp) {
            return Err(err(sections[fp].0, "sections out of order"));
        }
        let flow_body: Vec<&(usize, String)> = sections[fp + 1..dp].iter().collect();
        let mut flow = Flow { multiplicity: BTreeMap::new(), start: src.state, end: trg.state };
        for (n, l) in flow_body {
            let f = flow_from(*n, l, src.state, trg.state)?;
            for (t, m) in f.multiplicity {
                flow.insert(t, m);
            }
        }
        let mut waypoints = Vec::new();
        for (n, l) in &sections[wp + 1..cp] {
            for item in l.split_whitespace() {
                waypoints.push(config(*n, item)?);
            }
        }
        let block_lines = &sections[dp + 1..wp];
        if waypoints.len() != block_lines.len() + 1 {
            let n = sections[wp].0;
            return Err(err(n, "need exactly one more waypoint than blocks"));
        }
        let mut blocks = Vec::new();
        for (i, (n, l)) in block_lines.iter().enumerate() {
            let body = l.strip_prefix("block").ok_or_else(|| err(*n, "expected `block`"))?;
            blocks.push(flow_from(*n, body, waypoints[i].state, waypoints[i + 1].state)?);
        }
        let mut crossings = Vec::new();
        for (n, l) in &sections[cp + 1..] {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let [name, i, j] = parts.as_slice() else {
                return Err(err(*n, "expected `state i j`"));
            };
            let state = a.state_id(name).ok_or_else(|| err(*n, "unknown state"))?;
            let above = i.parse().map_err(|_| err(*n, "bad index"))?;
            let below = j.parse().map_err(|_| err(*n, "bad index"))?;
            if above > blocks.len() || below > blocks.len() {
                return Err(err(*n, "crossing index out of range"));
            }
            crossings.push(Crossing { state, above, below });
        }
        Ok(PessimisticCertificate { src, trg, flow, blocks, waypoints, crossings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_oca, Transition};
    use crate::flow::flow_has_positive_cycle;
    use crate::oracle::{post_star, reach_oracle};
    use crate::path::{apply_path, Mode};
    use crate::testing::THREE_CYCLE;
    use proptest::prelude::*;

    #[test]
    fn three_state_cycle_is_all_positive() {
        let a = parse_oca(THREE_CYCLE).unwrap();
        let an = Analysis::new(&a);
        let ex = pessimistic_post_star(&an, &[Configuration::new(0, 0)], false);
        assert_eq!(ex.sorted(), vec![Configuration::new(0, 0)]);
        assert!(pessimistic_post_star(&an, &[], false).is_empty());
    }

    #[test]
    fn trivial_and_single_step() {
        let a = parse_oca("states: p q\ntrans p -1 q\n").unwrap();
        let an = Analysis::new(&a);
        let c = Configuration::new(0, 3);
        assert_eq!(decide_pessimistic_reach(&an, c, c), Some(Run::trivial(c)));
        let run = decide_pessimistic_reach(&an, c, Configuration::new(1, 2)).unwrap();
        assert_eq!(run.len(), 1);
    }

    #[test]
    fn certificate_round_trip_and_mutations() {
        let a = parse_oca("states: p q r\nguard q != 4\ntrans p +5 q\ntrans q -2 r\ntrans r +1 q\ntrans q -3 r\n").unwrap();
        let an = Analysis::new(&a);
        let src = Configuration::new(0, 3);
        let trg = Configuration::new(2, 0);
        let run = decide_pessimistic_reach(&an, src, trg).unwrap();
        let cert = PessimisticCertificate::from_run(&a, &run);
        assert_eq!(cert.crossings.len(), 1);
        assert!(cert.verify(&a, src, trg).is_ok());
        let mut uncrossed = cert.clone();
        uncrossed.crossings.clear();
        assert_eq!(uncrossed.verify(&a, src, trg), Err(Refutation::Crossing(1)));
        let text = cert.to_text(&a);
        let back = PessimisticCertificate::parse(&a, &text).unwrap();
        assert_eq!(back, cert);

        let mut bad = cert.clone();
        bad.waypoints[0].value += 1;
        assert!(bad.verify(&a, src, trg).is_err());

        // A flow with a positive cycle.
        let mut cyc = PessimisticCertificate::from_run(&a, &Run::trivial(Configuration::new(1, 2)));
        let up = Transition::new(1, -2, 2);
        let back_up = Transition::new(2, 1, 1);
        let mut f = Flow::zero(1);
        f.insert(up, 1);
        f.insert(back_up, 1);
        cyc.flow = f.clone();
        cyc.blocks = vec![f];
        cyc.waypoints = vec![Configuration::new(1, 2), Configuration::new(1, 1)];
        cyc.trg = Configuration::new(1, 1);
        assert_eq!(cyc.verify(&a, Configuration::new(1, 2), Configuration::new(1, 1)), Err(Refutation::MissingWaypoint(2)));
        let a = parse_oca("states: p q\ntrans p +3 q\ntrans q -1 p\n").unwrap();
        let mut pos = Flow::zero(0);
        pos.insert(Transition::new(0, 3, 1), 1);
        pos.insert(Transition::new(1, -1, 0), 1);
        let cert = PessimisticCertificate {
            src: Configuration::new(0, 0),
            trg: Configuration::new(0, 2),
            flow: pos.clone(),
            blocks: vec![pos],
            waypoints: vec![Configuration::new(0, 0), Configuration::new(0, 2)],
            crossings: vec![],
        };
        assert_eq!(
            cert.verify(&a, Configuration::new(0, 0), Configuration::new(0, 2)),
            Err(Refutation::PositiveCycle)
        );
    }

    #[test]
    fn waypoint_on_guard_is_refuted() {
        let a = parse_oca("states: p q\nguard q != 2\ntrans p +2 q\n").unwrap();
        let mut f = Flow::zero(0);
        f.insert(Transition::new(0, 2, 1), 1);
        f.end = 1;
        let cert = PessimisticCertificate {
            src: Configuration::new(0, 0),
            trg: Configuration::new(1, 2),
            flow: f.clone(),
            blocks: vec![f],
            waypoints: vec![Configuration::new(0, 0), Configuration::new(1, 2)],
            crossings: vec![],
        };
        assert_eq!(
            cert.verify(&a, Configuration::new(0, 0), Configuration::new(1, 2)),
            Err(Refutation::WaypointGuard(1))
        );
    }

    fn arb_oca() -> impl Strategy<Value = Oca> {
        (1usize..5).prop_flat_map(|n| {
            let ts = proptest::collection::vec((0..n, -4i64..5, 0..n), 1..9);
            let gs = proptest::collection::vec(proptest::option::of(0i64..10), n);
            (Just(n), ts, gs).prop_map(|(n, ts, gs)| {
                let names = (0..n).map(|i| format!("s{i}")).collect();
                let guards = gs.into_iter().map(|g| g.map_or(Constraint::True, Constraint::Neq)).collect();
                Oca::from_parts(names, guards, ts.into_iter().map(|(p, u, q)| Transition::new(p, u, q)).collect())
            })
        })
    }

    proptest! {
        #[test]
        fn pessimistic_exploration_matches_restricted_post_star(a in arb_oca(), x in 0i64..12, p in 0usize..5, lb in any::<bool>()) {
            let an = Analysis::new(&a);
            let c = Configuration::new(p % a.num_states(), x);
            prop_assume!(a.is_valid(c));
            let ours = pessimistic_post_star(&an, &[c], lb);
            let bound = pessimistic_value_bound(&a, x);
            for d in ours.configurations() {
                prop_assert!(d.value <= bound);
            }
            let keep = |d: Configuration| (d == c || !an.conf_plus_contains(d)) && (!lb || an.is_locally_bounded(d));
            let generic = post_star(&a, &[c], &ExplorationBudget::default().with_value_cap(bound + 50), Some(&keep)).unwrap();
            prop_assert_eq!(ours.sorted(), generic.sorted());
        }

        #[test]
        fn certificates_from_pessimistic_runs(a in arb_oca(), x in 0i64..12, p in 0usize..5) {
            let an = Analysis::new(&a);
            let src = Configuration::new(p % a.num_states(), x);
            prop_assume!(a.is_valid(src));
            let reach = pessimistic_post_star(&an, &[src], false);
            for &trg in reach.configurations() {
                let run = decide_pessimistic_reach(&an, src, trg).unwrap();
                prop_assert!(is_pessimistic(&an, &run));
                prop_assert_eq!(apply_path(&a, src, &run.path, Mode::Valid).unwrap().last(), trg);
                prop_assert!(!flow_has_positive_cycle(&flow_of_path(&run.path)));
                let cert = PessimisticCertificate::from_run(&a, &run);
                prop_assert!(cert.blocks.len() <= 4 * a.num_states() + 1);
                let rebuilt = cert.verify(&a, src, trg);
                prop_assert!(rebuilt.is_ok(), "{:?}", rebuilt);
                prop_assert_eq!(apply_path(&a, src, &rebuilt.unwrap().path, Mode::Valid).unwrap().last(), trg);
            }
        }

        #[test]
        fn verified_mutants_are_reachable(a in arb_oca(), x in 0i64..12, p in 0usize..5, k in 0usize..64, delta in -3i64..4) {
            let an = Analysis::new(&a);
            let src = Configuration::new(p % a.num_states(), x);
            prop_assume!(a.is_valid(src));
            let reach = pessimistic_post_star(&an, &[src], false);
            let trg = reach.configurations()[k % reach.len()];
            let run = decide_pessimistic_reach(&an, src, trg).unwrap();
            let mut cert = PessimisticCertificate::from_run(&a, &run);
            // Translate the whole certificate; guards and nonnegativity decide whether it survives.
            for w in cert.waypoints.iter_mut() {
                w.value += delta;
            }
            cert.src.value += delta;
            cert.trg.value += delta;
            let (src, trg2) = (cert.src, cert.trg);
            if let Ok(rebuilt) = cert.verify(&a, src, trg2) {
                prop_assert_eq!(apply_path(&a, src, &rebuilt.path, Mode::Valid).unwrap().last(), trg2);
                prop_assert!(reach_oracle(&a, src, trg2, &ExplorationBudget::default()).is_reachable());
            }
        }
    }
}

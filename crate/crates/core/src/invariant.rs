//! Non-reachability witnesses: pairs of forward and backward cores, their
//! verification, and their synthesis from locally bounded exploration.
//!
//! A witness `(I, J)` for `src` and `trg` consists of a forward core `I` of
//! positive, locally bounded configurations containing `src` and a backward
//! core `J` with the same properties in the reversed automaton containing
//! `trg`. It is accepted when both cores are closed under pessimistic,
//! locally bounded exploration followed by one step, and the sets they induce
//! can neither be joined by a single transition nor by an integer-semantics
//! path between locally unbounded members.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::apset::{APSet, Progression};
use crate::automaton::{Configuration, Oca, StateId, Transition};
use crate::oracle::{self, CandidateTable, ExplorationBudget, ResourceExceeded};
use crate::path::Path;
use crate::pessimistic::pessimistic_post_star;
use crate::structure::{Analysis, Chain};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NonReachabilityWitness {
    pub forward: APSet,
    pub backward: APSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Forward,
    Backward,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Forward => "forward",
            Side::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainViolation {
    #[error("progression has no members")]
    Empty,
    #[error("{0:?} lies outside the positive region")]
    NotPositive(Configuration),
    #[error("{0:?} violates its guard")]
    Invalid(Configuration),
    #[error("{0:?} is locally unbounded")]
    LocallyUnbounded(Configuration),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessRefutation {
    #[error("{side} core progression {progression}: {violation}")]
    Domain { side: Side, progression: Progression, violation: DomainViolation },
    #[error("source is not in the forward core")]
    SourceMissing,
    #[error("target is not in the backward core")]
    TargetMissing,
    #[error("{side} core is not inductive: {from:?} steps to {escape:?}")]
    Inductive { side: Side, from: Configuration, escape: Configuration },
    #[error("induced sets share {0:?}")]
    Overlap(Configuration),
    #[error("single step from {from:?} to {to:?} joins the induced sets")]
    Sep1 { from: Configuration, to: Configuration },
    #[error("integer-semantics path joins locally unbounded {from:?} and {to:?}")]
    Sep2 { from: Configuration, to: Configuration, path: Path },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("witnesses are defined for automata with disequality tests only")]
    EqualityTests,
    #[error("endpoint {0:?} is not a positive locally bounded configuration")]
    EndpointShape(Configuration),
    #[error(transparent)]
    Resource(#[from] ResourceExceeded),
}

/// Forward and backward analyses of one automaton.
#[derive(Debug)]
pub struct WitnessContext {
    fwd: Analysis,
    rev: Analysis,
}

impl WitnessContext {
    pub fn new(a: &Oca) -> Result<Self, InvariantError> {
        if a.has_equality_tests() {
            return Err(InvariantError::EqualityTests);
        }
        Ok(WitnessContext { fwd: Analysis::new(a), rev: Analysis::new(&a.reverse()) })
    }

    pub fn oca(&self) -> &Oca {
        self.fwd.oca()
    }

    pub fn forward(&self) -> &Analysis {
        &self.fwd
    }

    pub fn backward(&self) -> &Analysis {
        &self.rev
    }

    fn side(&self, side: Side) -> &Analysis {
        match side {
            Side::Forward => &self.fwd,
            Side::Backward => &self.rev,
        }
    }
}

/// Checks that a progression lies in the positive, locally bounded region.
/// Local boundedness is decided member by member; when that succeeds, debug
/// builds confirm it with the single-instance gadget of
/// [`progression_locally_bounded`].
pub fn check_ap_domain(an: &Analysis, p: &Progression) -> Result<(), DomainViolation> {
    let Some(u) = p.min_member() else {
        return Err(DomainViolation::Empty);
    };
    let first = Configuration::new(p.state, u);
    if p.state >= an.oca().num_states() || !an.conf_plus_contains(first) {
        return Err(DomainViolation::NotPositive(first));
    }
    for c in p.members() {
        if !an.oca().is_valid(c) {
            return Err(DomainViolation::Invalid(c));
        }
        if !an.is_locally_bounded(c) {
            return Err(DomainViolation::LocallyUnbounded(c));
        }
    }
    debug_assert!(progression_locally_bounded(an.oca(), p), "gadget disagrees on {p}");
    Ok(())
}

/// Local boundedness of every member of `p` as one boundedness query: the
/// component of `p.state` gains a state that climbs through the progression
/// by its period, is blocked just above its last member, and may drop into
/// `p.state` at any point.
pub fn progression_locally_bounded(a: &Oca, p: &Progression) -> bool {
    let (Some(u), Some(v)) = (p.min_member(), p.max_member()) else {
        return true;
    };
    let sccs = crate::scc::scc_decompose(a);
    let (sub, map) = a.restrict(&sccs.mask_of(p.state));
    let q = map[p.state].expect("state kept");
    let mut names = sub.state_names().to_vec();
    let mut fresh = String::from("__climb");
    while names.contains(&fresh) {
        fresh.push('_');
    }
    names.push(fresh);
    let climb = names.len() - 1;
    let mut guards = sub.guards().to_vec();
    guards.push(crate::automaton::Constraint::Neq(v + p.period));
    let mut ts = sub.transitions().to_vec();
    ts.push(Transition::new(climb, 0, q));
    ts.push(Transition::new(climb, p.period, climb));
    let gadget = Oca::from_parts(names, guards, ts);
    let budget = ExplorationBudget { node_cap: usize::MAX, ..Default::default() };
    oracle::is_bounded(&gadget, Configuration::new(climb, u), &budget).expect("node cap disabled")
}

fn check_domain(ctx: &WitnessContext, side: Side, core: &APSet) -> Result<(), WitnessRefutation> {
    for p in &core.progressions {
        check_ap_domain(ctx.side(side), p)
            .map_err(|violation| WitnessRefutation::Domain { side, progression: *p, violation })?;
    }
    Ok(())
}

/// `Post(X) ∩ positive ∩ locally bounded ⊆ core` where `X` is the pessimistic,
/// locally bounded closure of the core (taken in the reversed automaton for
/// the backward side).
fn inductive_side(an: &Analysis, side: Side, core: &APSet) -> Result<(), WitnessRefutation> {
    let starts: Vec<Configuration> = core.members().collect();
    let closure = pessimistic_post_star(an, &starts, true);
    for &c in closure.configurations() {
        for (_, d) in an.oca().successors(c) {
            if an.conf_plus_contains(d) && an.is_locally_bounded(d) && !core.contains(d) {
                return Err(WitnessRefutation::Inductive { side, from: c, escape: d });
            }
        }
    }
    Ok(())
}

pub fn check_inductive(ctx: &WitnessContext, w: &NonReachabilityWitness) -> Result<(), WitnessRefutation> {
    let (f, b) = rayon::join(
        || inductive_side(&ctx.fwd, Side::Forward, &w.forward),
        || inductive_side(&ctx.rev, Side::Backward, &w.backward),
    );
    f.and(b)
}

/// Pessimistic closure of the core plus one further step, in discovery order.
pub fn induced_set(an: &Analysis, core: &APSet) -> Vec<Configuration> {
    let starts: Vec<Configuration> = core.members().collect();
    let closure = pessimistic_post_star(an, &starts, false);
    let mut seen: HashSet<Configuration> = closure.configurations().iter().copied().collect();
    let mut out = closure.configurations().to_vec();
    for &c in closure.configurations() {
        for (_, d) in an.oca().successors(c) {
            if seen.insert(d) {
                out.push(d);
            }
        }
    }
    out
}

pub fn check_separator(ctx: &WitnessContext, w: &NonReachabilityWitness) -> Result<(), WitnessRefutation> {
    let (big_i, big_j) = rayon::join(|| induced_set(&ctx.fwd, &w.forward), || induced_set(&ctx.rev, &w.backward));
    let j_set: HashSet<Configuration> = big_j.iter().copied().collect();
    let a = ctx.oca();
    for &c in &big_i {
        if j_set.contains(&c) {
            return Err(WitnessRefutation::Overlap(c));
        }
    }
    for &c in &big_i {
        if let Some((_, d)) = a.successors(c).find(|(_, d)| j_set.contains(d)) {
            return Err(WitnessRefutation::Sep1 { from: c, to: d });
        }
    }
    let sources: Vec<Configuration> = big_i.iter().copied().filter(|&c| !ctx.fwd.is_locally_bounded(c)).collect();
    let targets: Vec<Configuration> = big_j.iter().copied().filter(|&d| !ctx.rev.is_locally_bounded(d)).collect();
    if sources.is_empty() || targets.is_empty() {
        return Ok(());
    }
    let mut by_state: BTreeMap<StateId, Vec<Configuration>> = BTreeMap::new();
    for &c in &sources {
        by_state.entry(c.state).or_default().push(c);
    }
    let (tmin, tmax) = (
        targets.iter().map(|d| d.value).min().expect("nonempty"),
        targets.iter().map(|d| d.value).max().expect("nonempty"),
    );
    for (state, cs) in by_state {
        let (cmin, cmax) = (
            cs.iter().map(|c| c.value).min().expect("nonempty"),
            cs.iter().map(|c| c.value).max().expect("nonempty"),
        );
        let table = CandidateTable::new(a, state, tmin - cmax, tmax - cmin);
        for &c in &cs {
            for &d in &targets {
                if table.reaches(d.state, d.value - c.value) {
                    let path = table.path(a, d.state, d.value - c.value).expect("reachable offset");
                    return Err(WitnessRefutation::Sep2 { from: c, to: d, path });
                }
            }
        }
    }
    Ok(())
}

pub fn verify_witness(
    ctx: &WitnessContext,
    src: Configuration,
    trg: Configuration,
    w: &NonReachabilityWitness,
) -> Result<(), WitnessRefutation> {
    check_domain(ctx, Side::Forward, &w.forward)?;
    check_domain(ctx, Side::Backward, &w.backward)?;
    if !w.forward.contains(src) {
        return Err(WitnessRefutation::SourceMissing);
    }
    if !w.backward.contains(trg) {
        return Err(WitnessRefutation::TargetMissing);
    }
    check_inductive(ctx, w)?;
    check_separator(ctx, w)
}

/// Groups positive configurations by chain; within each bounded chain they
/// must form a suffix, which becomes one progression.
pub fn compress(an: &Analysis, configs: impl IntoIterator<Item = Configuration>) -> APSet {
    let mut groups: BTreeMap<Chain, BTreeSet<i64>> = BTreeMap::new();
    for c in configs {
        let chain = an.chain_of(c).unwrap_or_else(|| panic!("{c:?} has no chain"));
        groups.entry(chain).or_default().insert(c.value);
    }
    let mut out = Vec::new();
    for (chain, values) in groups {
        let last = chain.last.unwrap_or_else(|| panic!("core member in unbounded chain {chain:?}"));
        let low = *values.first().expect("nonempty group");
        let expected = (last - low) / chain.period + 1;
        assert_eq!(values.len() as i64, expected, "core members do not form a chain suffix in {chain:?}");
        out.push(Progression { state: chain.state, start: low, period: chain.period, low, high: last });
    }
    APSet::new(out)
}

/// Positive configurations reachable from `src` by locally bounded runs.
pub fn forward_core(an: &Analysis, src: Configuration, budget: &ExplorationBudget) -> Result<APSet, InvariantError> {
    if !an.oca().is_valid(src) || !an.conf_plus_contains(src) || !an.is_locally_bounded(src) {
        return Err(InvariantError::EndpointShape(src));
    }
    let keep = |c: Configuration| an.is_locally_bounded(c);
    let b = ExplorationBudget { value_cap: i64::MAX / 4, ..*budget };
    let ex = oracle::post_star(an.oca(), &[src], &b, Some(&keep))?;
    Ok(compress(an, ex.configurations().iter().copied().filter(|&c| an.conf_plus_contains(c))))
}

/// The least inductive pair containing the endpoints.
pub fn perfect_cores(
    ctx: &WitnessContext,
    src: Configuration,
    trg: Configuration,
    budget: &ExplorationBudget,
) -> Result<NonReachabilityWitness, InvariantError> {
    let (f, b) = rayon::join(|| forward_core(&ctx.fwd, src, budget), || forward_core(&ctx.rev, trg, budget));
    Ok(NonReachabilityWitness { forward: f?, backward: b? })
}

/// Perfect cores when they verify, `None` otherwise.
pub fn synthesize_witness(
    ctx: &WitnessContext,
    src: Configuration,
    trg: Configuration,
    budget: &ExplorationBudget,
) -> Result<Option<NonReachabilityWitness>, InvariantError> {
    if src == trg {
        return Ok(None);
    }
    let w = perfect_cores(ctx, src, trg, budget)?;
    Ok(verify_witness(ctx, src, trg, &w).is_ok().then_some(w))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrongFailure {
    #[error("automaton is not strongly connected")]
    NotStronglyConnected,
    #[error("source is unbounded")]
    UnboundedSource,
    #[error("{0:?} is neither positive nor the source")]
    Domain(Configuration),
    #[error("source is not in the set")]
    Cond1,
    #[error("target is reached pessimistically")]
    Cond2,
    #[error("{from:?} steps to positive {escape:?} outside the set")]
    Cond3 { from: Configuration, escape: Configuration },
}

/// Invariant conditions for strongly connected automata with a bounded source.
pub fn check_strong_invariant(
    an: &Analysis,
    src: Configuration,
    trg: Configuration,
    inv: &APSet,
) -> Result<(), StrongFailure> {
    let a = an.oca();
    if an.sccs().len() != 1 {
        return Err(StrongFailure::NotStronglyConnected);
    }
    let budget = ExplorationBudget { node_cap: usize::MAX, ..Default::default() };
    if !oracle::is_bounded(a, src, &budget).expect("node cap disabled") {
        return Err(StrongFailure::UnboundedSource);
    }
    for p in &inv.progressions {
        if let Some(c) = p.members().find(|&c| c != src && !an.conf_plus_contains(c)) {
            return Err(StrongFailure::Domain(c));
        }
    }
    if !inv.contains(src) {
        return Err(StrongFailure::Cond1);
    }
    let starts: Vec<Configuration> = inv.members().collect();
    let closure = pessimistic_post_star(an, &starts, false);
    if closure.contains(trg) {
        return Err(StrongFailure::Cond2);
    }
    for &c in closure.configurations() {
        for (_, d) in a.successors(c) {
            if an.conf_plus_contains(d) && !inv.contains(d) {
                return Err(StrongFailure::Cond3 { from: c, escape: d });
            }
        }
    }
    Ok(())
}

/// Reachable positive configurations of a bounded source, plus the source.
pub fn strong_invariant_candidate(an: &Analysis, src: Configuration) -> APSet {
    let a = an.oca();
    let cap = oracle::boundedness_value_cap(a, src.value);
    let b = ExplorationBudget { value_cap: cap, length_cap: usize::MAX, node_cap: usize::MAX };
    let ex = oracle::post_star(a, &[src], &b, None).expect("node cap disabled");
    assert!(!ex.cap_hit, "source is unbounded");
    let mut set = compress(an, ex.configurations().iter().copied().filter(|&c| an.conf_plus_contains(c)));
    if !set.contains(src) {
        set.progressions.push(Progression::singleton(src));
        set = APSet::new(set.progressions);
    }
    set
}

/// Witness file text. Progressions are written with state names of `a`.
pub fn progression_line(a: &Oca, side: Side, p: &Progression) -> String {
    let tag = match side {
        Side::Forward => 'I',
        Side::Backward => 'J',
    };
    format!("{tag} {} {} {} {} {}", a.state_name(p.state), p.period, p.start, p.low, p.high)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct WitnessSyntaxError {
    pub line: usize,
    pub message: String,
}

/// Parses one `I`/`J` progression line against the state names of `a`.
pub fn parse_progression_line(a: &Oca, line: usize, text: &str) -> Result<(Side, Progression), WitnessSyntaxError> {
    let err = |m: &str| WitnessSyntaxError { line, message: m.to_string() };
    let parts: Vec<&str> = text.split_whitespace().collect();
    let [tag, name, period, start, low, high] = parts.as_slice() else {
        return Err(err("expected `I|J state period start low high`"));
    };
    let side = match *tag {
        "I" => Side::Forward,
        "J" => Side::Backward,
        _ => return Err(err("progression lines start with I or J")),
    };
    let state = a.state_id(name).ok_or_else(|| err(&format!("unknown state `{name}`")))?;
    let num = |s: &str| s.parse::<i64>().map_err(|_| err(&format!("bad integer `{s}`")));
    let p = Progression { state, period: num(period)?, start: num(start)?, low: num(low)?, high: num(high)? };
    if p.period <= 0 || p.low < 0 || p.high < p.low {
        return Err(err("need period > 0 and 0 <= low <= high"));
    }
    Ok((side, p))
}

//! Reachability decisions with checkable evidence.
//!
//! Automata with disequality tests only are decided by integer-semantics
//! search when both endpoints are locally unbounded, and otherwise by
//! witness synthesis on an automaton whose endpoints have been made positive
//! and locally bounded. Equality-tested states are handled by splitting runs
//! at the configurations where those tests pass.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{Configuration, Constraint, Oca, StateId, Transition};
use crate::invariant::{
    parse_progression_line, progression_line, synthesize_witness, verify_witness, InvariantError,
    NonReachabilityWitness, Side, WitnessContext, WitnessRefutation,
};
use crate::oracle::{self, ExplorationBudget, OracleVerdict, ResourceExceeded};
use crate::path::{apply_path, Mode, Path, Run};
use crate::apset::APSet;
use crate::structure::Analysis;

/// An automaton with fresh endpoint states: the source state climbs to the
/// original source value and cannot pass it, and the target state descends
/// from the original target value and cannot enter above it.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub oca: Oca,
    pub src: Configuration,
    pub trg: Configuration,
}

fn fresh_name(names: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while names.contains(&name) {
        name.push('_');
    }
    name
}

pub fn normalize_endpoints(a: &Oca, src: Configuration, trg: Configuration) -> Normalized {
    let mut names = a.state_names().to_vec();
    let mut guards = a.guards().to_vec();
    let mut ts = a.transitions().to_vec();
    let s = names.len();
    names.push(fresh_name(&names, "__src"));
    guards.push(Constraint::Neq(src.value + 1));
    let t = names.len();
    names.push(fresh_name(&names, "__trg"));
    guards.push(Constraint::Neq(trg.value + 1));
    ts.push(Transition::new(s, 0, src.state));
    ts.push(Transition::new(s, 1, s));
    ts.push(Transition::new(trg.state, 0, t));
    ts.push(Transition::new(t, -1, t));
    Normalized {
        oca: Oca::from_parts(names, guards, ts),
        src: Configuration::new(s, src.value),
        trg: Configuration::new(t, trg.value),
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Compare every decision against the explicit-state oracle.
    pub cross_check: bool,
    pub budget: ExplorationBudget,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { cross_check: cfg!(debug_assertions), budget: ExplorationBudget::default() }
    }
}

/// A certified non-reachable pair of the equality-free part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryWitness {
    pub from: Configuration,
    pub to: Configuration,
    pub witness: NonReachabilityWitness,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    pub queries: Vec<QueryWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Reachable(Run),
    Unreachable(Evidence),
    ResourceExceeded(ResourceExceeded),
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable(_))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// A closed walk at `c.state`, valid from `c`, with effect above every guard.
/// `a` must be strongly connected and `c` unbounded in it.
fn climb(a: &Oca, c: Configuration) -> Option<Path> {
    let an = Analysis::new(a);
    let t = a.norm_tau();
    let d = a.norm_delta();
    let n = a.num_states() as i64;
    let longest = an.q_plus().map(|g| g.cycle.len() as i64).max()?;
    let high = t.checked_add(d.checked_mul(n.checked_add(longest)?)?)?.max(c.value);
    // past high + |Q|·‖Δ‖, a state with a short positive cycle is at most |Q| steps away
    let cap = high.checked_add(d.checked_mul(n + 1)?)?;
    let budget = ExplorationBudget { value_cap: cap, length_cap: usize::MAX, node_cap: 4_000_000 };
    let ex = oracle::post_star(a, &[c], &budget, None).ok()?;
    let top = ex.configurations().iter().copied().find(|e| e.value > high && an.in_q_plus(e.state))?;
    let run = ex.run_to(a, top)?;
    let cycle = an.canonical_cycle(top.state)?;
    let back = shortest_path(a, top.state, c.state)?;
    // values during the pumped cycle and the return stay above every guard
    let base = run.path.effect().ok()?.checked_add(back.effect().ok()?)?;
    let mut k = 0usize;
    while base + k as i64 * cycle.effect <= t {
        k += 1;
    }
    run.path.concat(&cycle.cycle.repeat(k)).ok()?.concat(&back).ok()
}

fn shortest_path(a: &Oca, from: StateId, to: StateId) -> Option<Path> {
    let mut parent: Vec<Option<usize>> = vec![None; a.num_states()];
    let mut seen = vec![false; a.num_states()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(q) = queue.pop_front() {
        if q == to {
            let mut ids = Vec::new();
            let mut cur = to;
            while cur != from {
                let id = parent[cur].expect("visited");
                ids.push(id);
                cur = a.transition(id).src;
            }
            ids.reverse();
            return Path::from_ids(a, from, &ids).ok();
        }
        for &id in a.outgoing(q) {
            let r = a.transition(id).dst;
            if !seen[r] {
                seen[r] = true;
                parent[r] = Some(id);
                queue.push_back(r);
            }
        }
    }
    None
}

fn component(a: &Oca, q: StateId) -> (Oca, Vec<StateId>) {
    let sccs = crate::scc::scc_decompose(a);
    let (sub, map) = a.restrict(&sccs.mask_of(q));
    let mut back = vec![0; sub.num_states()];
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = new {
            back[*new] = old;
        }
    }
    (sub, back)
}

/// Turns an integer-semantics path between two locally unbounded endpoints
/// into a valid run: climb at the source, replay the path high above every
/// guard, and descend at the target, balancing the climbs and descents.
pub fn lift_candidate_run(a: &Oca, src: Configuration, trg: Configuration, sigma: &Path) -> Option<Run> {
    let (up_oca, up_map) = component(a, src.state);
    let up_local = Configuration::new(up_map.iter().position(|&q| q == src.state)?, src.value);
    let up = climb(&up_oca, up_local)?.map_states(|q| up_map[q]);
    let (down_oca, down_map) = component(&a.reverse(), trg.state);
    let down_local = Configuration::new(down_map.iter().position(|&q| q == trg.state)?, trg.value);
    let down = climb(&down_oca, down_local)?.map_states(|q| down_map[q]).reversed();
    let p = up.effect().ok()?;
    let n = -down.effect().ok()?;
    let g = gcd(p, n);
    let (k_up, k_down) = (n / g, p / g);
    let (_, drop) = sigma.effect_drop().ok()?;
    let need = a.norm_tau() + 1 + drop - src.value;
    let mut times = 1i64;
    while times.checked_mul(k_up)?.checked_mul(p)? < need {
        times += 1;
    }
    let path = up
        .repeat(usize::try_from(times * k_up).ok()?)
        .concat(sigma)
        .ok()?
        .concat(&down.repeat(usize::try_from(times * k_down).ok()?))
        .ok()?;
    let run = apply_path(a, src, &path, Mode::Valid).ok()?;
    (run.last() == trg).then_some(run)
}

/// Decides reachability in an automaton without equality tests.
pub fn decide_disequality(a: &Oca, src: Configuration, trg: Configuration, opts: &SolverOptions) -> Verdict {
    assert!(!a.has_equality_tests(), "equality tests need decide_full");
    let verdict = disequality_inner(a, src, trg, opts);
    if opts.cross_check {
        cross_check(a, src, trg, &verdict, &opts.budget);
    }
    verdict
}

fn cross_check(a: &Oca, src: Configuration, trg: Configuration, verdict: &Verdict, budget: &ExplorationBudget) {
    let expected = match oracle::reach_oracle(a, src, trg, budget) {
        OracleVerdict::Reachable(_) => true,
        OracleVerdict::Unreachable => false,
        OracleVerdict::ResourceExceeded(_) => return,
    };
    match verdict {
        Verdict::Reachable(_) => assert!(expected, "solver found a run the oracle rejects"),
        Verdict::Unreachable(_) => assert!(!expected, "solver certified a reachable pair"),
        Verdict::ResourceExceeded(_) => {}
    }
}

fn disequality_inner(a: &Oca, src: Configuration, trg: Configuration, opts: &SolverOptions) -> Verdict {
    if !a.is_valid(src) || !a.is_valid(trg) {
        return Verdict::Unreachable(Evidence::default());
    }
    if src == trg {
        return Verdict::Reachable(Run::trivial(src));
    }
    let fwd_unbounded = !Analysis::new(a).is_locally_bounded(src);
    if fwd_unbounded && !Analysis::new(&a.reverse()).is_locally_bounded(trg) {
        if let Some(run) = oracle::candidate_reach(a, src, trg).and_then(|p| lift_candidate_run(a, src, trg, &p)) {
            return Verdict::Reachable(run);
        }
    }
    let norm = normalize_endpoints(a, src, trg);
    let ctx = WitnessContext::new(&norm.oca).expect("normalization adds disequalities only");
    match synthesize_witness(&ctx, norm.src, norm.trg, &opts.budget) {
        Ok(Some(witness)) => {
            return Verdict::Unreachable(Evidence { queries: vec![QueryWitness { from: src, to: trg, witness }] });
        }
        Ok(None) => {}
        Err(InvariantError::Resource(e)) => return Verdict::ResourceExceeded(e),
        Err(e) => panic!("normalized endpoints rejected: {e}"),
    }
    match oracle::reach_oracle(a, src, trg, &opts.budget) {
        OracleVerdict::Reachable(run) => Verdict::Reachable(run),
        OracleVerdict::ResourceExceeded(e) => Verdict::ResourceExceeded(e),
        OracleVerdict::Unreachable => panic!("perfect cores failed on an unreachable pair"),
    }
}

/// The equality-free part of `a` and the configurations where runs are split.
struct Split {
    sub: Oca,
    to_sub: Vec<Option<StateId>>,
    to_full: Vec<StateId>,
    nodes: Vec<Configuration>,
}

impl Split {
    fn new(a: &Oca, src: Configuration, trg: Configuration) -> Self {
        let keep: Vec<bool> = a.guards().iter().map(|g| !g.is_equality()).collect();
        let (sub, to_sub) = a.restrict(&keep);
        let mut to_full = vec![0; sub.num_states()];
        for (old, new) in to_sub.iter().enumerate() {
            if let Some(new) = new {
                to_full[*new] = old;
            }
        }
        let mut nodes: Vec<Configuration> = a
            .states()
            .filter_map(|q| match a.guard(q) {
                Constraint::Eq(g) => Some(Configuration::new(q, g)),
                _ => None,
            })
            .chain([src, trg])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        Split { sub, to_sub, to_full, nodes }
    }

    fn local(&self, c: Configuration) -> Option<Configuration> {
        self.to_sub[c.state].map(|q| Configuration::new(q, c.value))
    }

    /// Entry points into the equality-free part after leaving `c`.
    fn exits(&self, a: &Oca, c: Configuration) -> Vec<(Option<Transition>, Configuration)> {
        match self.local(c) {
            Some(l) => vec![(None, l)],
            None => a
                .successors(c)
                .filter_map(|(id, d)| self.local(d).map(|l| (Some(a.transition(id)), l)))
                .collect(),
        }
    }

    /// Points of the equality-free part from which `d` is entered.
    fn entries(&self, a: &Oca, d: Configuration) -> Vec<(Option<Transition>, Configuration)> {
        match self.local(d) {
            Some(l) => vec![(None, l)],
            None => a
                .predecessors(d)
                .filter_map(|(id, c)| self.local(c).map(|l| (Some(a.transition(id)), l)))
                .collect(),
        }
    }

    fn full_path(&self, p: &Path) -> Path {
        p.map_states(|q| self.to_full[q])
    }

    fn full(&self, c: Configuration) -> Configuration {
        Configuration::new(self.to_full[c.state], c.value)
    }
}

enum Edge {
    Run(Path),
    Blocked(Vec<QueryWitness>),
    Resource(ResourceExceeded),
}

fn step_between(a: &Oca, c: Configuration, d: Configuration) -> Option<Transition> {
    a.successors(c).find(|&(_, e)| e == d).map(|(id, _)| a.transition(id))
}

fn edge(a: &Oca, split: &Split, c: Configuration, d: Configuration, opts: &SolverOptions) -> Edge {
    if let Some(t) = step_between(a, c, d) {
        return Edge::Run(Path::new(c.state, vec![t]).expect("single step"));
    }
    let mut blocked = Vec::new();
    for (t_in, c1) in split.exits(a, c) {
        for (t_out, d1) in split.entries(a, d) {
            let inner = SolverOptions { cross_check: false, ..opts.clone() };
            match decide_disequality(&split.sub, c1, d1, &inner) {
                Verdict::Reachable(run) => {
                    let mut steps: Vec<Transition> = t_in.into_iter().collect();
                    steps.extend_from_slice(split.full_path(&run.path).steps());
                    steps.extend(t_out);
                    return Edge::Run(Path::new(c.state, steps).expect("adjacent pieces"));
                }
                Verdict::Unreachable(ev) => blocked.extend(ev.queries.into_iter().map(|q| QueryWitness {
                    from: split.full(q.from),
                    to: split.full(q.to),
                    witness: q.witness,
                })),
                Verdict::ResourceExceeded(e) => return Edge::Resource(e),
            }
        }
    }
    Edge::Blocked(blocked)
}

/// Decides reachability in an arbitrary automaton.
pub fn decide_full(a: &Oca, src: Configuration, trg: Configuration, opts: &SolverOptions) -> Verdict {
    let verdict = full_inner(a, src, trg, opts);
    if opts.cross_check {
        cross_check(a, src, trg, &verdict, &opts.budget);
    }
    verdict
}

fn full_inner(a: &Oca, src: Configuration, trg: Configuration, opts: &SolverOptions) -> Verdict {
    if !a.is_valid(src) || !a.is_valid(trg) {
        return Verdict::Unreachable(Evidence::default());
    }
    if src == trg {
        return Verdict::Reachable(Run::trivial(src));
    }
    let split = Split::new(a, src, trg);
    let mut parent: BTreeMap<Configuration, Option<(Configuration, Path)>> = BTreeMap::from([(src, None)]);
    let mut queue = VecDeque::from([src]);
    let mut evidence = Evidence::default();
    while let Some(c) = queue.pop_front() {
        let targets: Vec<Configuration> = split.nodes.iter().copied().filter(|&d| d != c).collect();
        let edges: Vec<(Configuration, Edge)> =
            targets.par_iter().map(|&d| (d, edge(a, &split, c, d, opts))).collect();
        for (d, e) in edges {
            match e {
                Edge::Resource(e) => return Verdict::ResourceExceeded(e),
                Edge::Blocked(ws) => evidence.queries.extend(ws),
                Edge::Run(p) => {
                    if parent.contains_key(&d) {
                        continue;
                    }
                    parent.insert(d, Some((c, p)));
                    queue.push_back(d);
                }
            }
        }
        if parent.contains_key(&trg) {
            let mut pieces = Vec::new();
            let mut cur = trg;
            while let Some(Some((prev, p))) = parent.get(&cur) {
                pieces.push(p.clone());
                cur = *prev;
            }
            let mut path = Path::empty(src.state);
            for p in pieces.iter().rev() {
                path = path.concat(p).expect("pieces meet at split points");
            }
            let run = apply_path(a, src, &path, Mode::Valid).expect("assembled run replays");
            assert_eq!(run.last(), trg);
            return Verdict::Reachable(run);
        }
    }
    evidence.queries.sort_by_key(|q| (q.from, q.to));
    evidence.queries.dedup_by_key(|q| (q.from, q.to));
    Verdict::Unreachable(evidence)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvidenceError {
    #[error("source equals target")]
    Trivial,
    #[error("no certificate for {from:?} to {to:?}")]
    Uncertified { from: Configuration, to: Configuration },
    #[error("certificate for {from:?} to {to:?} rejected: {reason}")]
    Rejected { from: Configuration, to: Configuration, reason: WitnessRefutation },
    #[error("a single transition joins {from:?} and {to:?}")]
    DirectStep { from: Configuration, to: Configuration },
}

/// Checks that the evidence blocks every route from `src` to `trg`.
pub fn verify_unreachability(a: &Oca, src: Configuration, trg: Configuration, ev: &Evidence) -> Result<(), EvidenceError> {
    if !a.is_valid(src) || !a.is_valid(trg) {
        return Ok(());
    }
    if src == trg {
        return Err(EvidenceError::Trivial);
    }
    let split = Split::new(a, src, trg);
    let certs: BTreeMap<(Configuration, Configuration), &NonReachabilityWitness> =
        ev.queries.iter().map(|q| ((q.from, q.to), &q.witness)).collect();
    let check_pair = |c1: Configuration, d1: Configuration| -> Result<(), EvidenceError> {
        let (from, to) = (split.full(c1), split.full(d1));
        let w = certs.get(&(from, to)).ok_or(EvidenceError::Uncertified { from, to })?;
        if c1 == d1 {
            return Err(EvidenceError::Uncertified { from, to });
        }
        let norm = normalize_endpoints(&split.sub, c1, d1);
        let ctx = WitnessContext::new(&norm.oca).expect("normalization adds disequalities only");
        verify_witness(&ctx, norm.src, norm.trg, w).map_err(|reason| EvidenceError::Rejected { from, to, reason })
    };
    let mut seen = vec![src];
    let mut queue = VecDeque::from([src]);
    while let Some(c) = queue.pop_front() {
        for &d in &split.nodes {
            if d == c || seen.contains(&d) {
                continue;
            }
            let mut open = None;
            if step_between(a, c, d).is_some() {
                open = Some(EvidenceError::DirectStep { from: c, to: d });
            }
            'pairs: for (_, c1) in split.exits(a, c) {
                for (_, d1) in split.entries(a, d) {
                    if open.is_some() {
                        break 'pairs;
                    }
                    if let Err(e) = check_pair(c1, d1) {
                        open = Some(e);
                    }
                }
            }
            if let Some(e) = open {
                if d == trg {
                    return Err(e);
                }
                seen.push(d);
                queue.push_back(d);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn format_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

/// Lines of a text file with their 1-based numbers, skipping blanks and comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_endpoint(a: &Oca, line: usize, rest: &str) -> Result<Configuration, FormatError> {
    a.parse_configuration(rest).map_err(|e| format_err(line, e.to_string()))
}

pub fn run_to_text(a: &Oca, run: &Run) -> String {
    let ids = run.path.transition_ids(a).expect("run uses transitions of the automaton");
    let mut path = String::from("path");
    for id in ids {
        path.push_str(&format!(" {id}"));
    }
    format!("run\nsrc {}\ntrg {}\n{path}\n", a.format_configuration(run.first()), a.format_configuration(run.last()))
}

/// A run file before replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFile {
    pub src: Configuration,
    pub trg: Configuration,
    pub ids: Vec<usize>,
}

impl RunFile {
    pub fn parse(a: &Oca, text: &str) -> Result<RunFile, FormatError> {
        let mut lines = content_lines(text);
        match lines.next() {
            Some((_, "run")) => {}
            Some((n, _)) => return Err(format_err(n, "expected `run` header")),
            None => return Err(format_err(0, "empty run file")),
        }
        let (mut src, mut trg, mut ids) = (None, None, None);
        for (n, l) in lines {
            let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            match key {
                "src" => src = Some(parse_endpoint(a, n, rest.trim())?),
                "trg" => trg = Some(parse_endpoint(a, n, rest.trim())?),
                "path" => {
                    let v: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
                    ids = Some(v.map_err(|_| format_err(n, "transition ids must be nonnegative integers"))?);
                }
                _ => return Err(format_err(n, format!("unknown key `{key}`"))),
            }
        }
        Ok(RunFile {
            src: src.ok_or_else(|| format_err(0, "missing src"))?,
            trg: trg.ok_or_else(|| format_err(0, "missing trg"))?,
            ids: ids.ok_or_else(|| format_err(0, "missing path"))?,
        })
    }

    /// Replays the path from `src`; the error names the first failing step.
    pub fn replay(&self, a: &Oca) -> Result<Run, String> {
        let path = Path::from_ids(a, self.src.state, &self.ids).map_err(|e| e.to_string())?;
        let run = apply_path(a, self.src, &path, Mode::Valid).map_err(|e| match e {
            crate::path::ApplyError::Violation { index, config } => {
                format!("configuration {index} ({}) is invalid", a.format_configuration(config))
            }
            crate::path::ApplyError::Path(e) => e.to_string(),
        })?;
        if run.last() != self.trg {
            return Err(format!("run ends at {}", a.format_configuration(run.last())));
        }
        Ok(run)
    }
}

/// Parses and replays a run file.
pub fn parse_run(a: &Oca, text: &str) -> Result<Run, FormatError> {
    RunFile::parse(a, text)?.replay(a).map_err(|m| format_err(0, m))
}

/// Witness file: endpoints, then one `query` block per certified pair with
/// progressions over the state names of that pair's normalized automaton.
pub fn evidence_to_text(a: &Oca, src: Configuration, trg: Configuration, ev: &Evidence) -> String {
    let split = Split::new(a, src, trg);
    let mut out = format!("witness\nsrc {}\ntrg {}\n", a.format_configuration(src), a.format_configuration(trg));
    for q in &ev.queries {
        out.push_str(&format!("query {} {}\n", a.format_configuration(q.from), a.format_configuration(q.to)));
        let (Some(c1), Some(d1)) = (split.local(q.from), split.local(q.to)) else {
            continue;
        };
        let norm = normalize_endpoints(&split.sub, c1, d1);
        for p in &q.witness.forward.progressions {
            out.push_str(&progression_line(&norm.oca, Side::Forward, p));
            out.push('\n');
        }
        for p in &q.witness.backward.progressions {
            out.push_str(&progression_line(&norm.oca, Side::Backward, p));
            out.push('\n');
        }
    }
    out
}

pub fn parse_evidence(a: &Oca, text: &str) -> Result<(Configuration, Configuration, Evidence), FormatError> {
    let mut lines = content_lines(text).peekable();
    match lines.next() {
        Some((_, "witness")) => {}
        Some((n, _)) => return Err(format_err(n, "expected `witness` header")),
        None => return Err(format_err(0, "empty witness file")),
    }
    let mut endpoint = |key: &str| -> Result<Configuration, FormatError> {
        match lines.next() {
            Some((n, l)) => match l.strip_prefix(key) {
                Some(rest) => parse_endpoint(a, n, rest.trim()),
                None => Err(format_err(n, format!("expected `{key}`"))),
            },
            None => Err(format_err(0, format!("missing `{key}`"))),
        }
    };
    let src = endpoint("src")?;
    let trg = endpoint("trg")?;
    let split = Split::new(a, src, trg);
    let mut ev = Evidence::default();
    let mut current: Option<(Oca, QueryWitness)> = None;
    let finish = |cur: Option<(Oca, QueryWitness)>, ev: &mut Evidence| {
        if let Some((_, mut q)) = cur {
            q.witness.forward = APSet::new(q.witness.forward.progressions);
            q.witness.backward = APSet::new(q.witness.backward.progressions);
            ev.queries.push(q);
        }
    };
    for (n, l) in lines {
        if let Some(rest) = l.strip_prefix("query") {
            finish(current.take(), &mut ev);
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [from, to] = parts.as_slice() else {
                return Err(format_err(n, "expected `query <from> <to>`"));
            };
            let from = parse_endpoint(a, n, from)?;
            let to = parse_endpoint(a, n, to)?;
            let (Some(c1), Some(d1)) = (split.local(from), split.local(to)) else {
                return Err(format_err(n, "query endpoints must avoid equality-tested states"));
            };
            let norm = normalize_endpoints(&split.sub, c1, d1);
            current = Some((norm.oca, QueryWitness { from, to, witness: NonReachabilityWitness::default() }));
        } else {
            let Some((norm, q)) = current.as_mut() else {
                return Err(format_err(n, "progression outside a query block"));
            };
            let (side, p) = parse_progression_line(norm, n, l).map_err(|e| format_err(e.line, e.message))?;
            match side {
                Side::Forward => q.witness.forward.progressions.push(p),
                Side::Backward => q.witness.backward.progressions.push(p),
            }
        }
    }
    finish(current, &mut ev);
    Ok((src, trg, ev))
}

//! One-counter automata with equality and disequality tests.
//!
//! An automaton is a finite set of states, a finite set of integer-weighted
//! transitions and one constraint per state. States are interned at parse time
//! and addressed by dense indices so graph algorithms can index plain vectors.
//!
//! The text format is line oriented, `#` starts a comment:
//!
//! ```text
//! states: q r s
//! guard q != 5
//! guard r == 7
//! trans q +2 r
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub type StateId = usize;

/// Per-state counter constraint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    #[default]
    True,
    Eq(i64),
    Neq(i64),
}

impl Constraint {
    pub fn allows(self, value: i64) -> bool {
        match self {
            Constraint::True => true,
            Constraint::Eq(k) => value == k,
            Constraint::Neq(k) => value != k,
        }
    }

    pub fn test_value(self) -> Option<i64> {
        match self {
            Constraint::True => None,
            Constraint::Eq(k) | Constraint::Neq(k) => Some(k),
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, Constraint::Eq(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub src: StateId,
    pub update: i64,
    pub dst: StateId,
}

impl Transition {
    pub fn new(src: StateId, update: i64, dst: StateId) -> Self {
        Transition { src, update, dst }
    }

    pub fn reversed(self) -> Self {
        Transition { src: self.dst, update: -self.update, dst: self.src }
    }
}

/// A state paired with a counter value. Candidate configurations may carry
/// negative values; validity is a property checked against an automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub state: StateId,
    pub value: i64,
}

impl Configuration {
    pub fn new(state: StateId, value: i64) -> Self {
        Configuration { state, value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared state `{name}`")]
    UndeclaredState { line: usize, name: String },
    #[error("line {line}: state `{name}` declared twice")]
    DuplicateState { line: usize, name: String },
    #[error("line {line}: state `{name}` already has a guard")]
    DuplicateGuard { line: usize, name: String },
    #[error("line {line}: negative guard value {value}")]
    NegativeGuard { line: usize, value: i64 },
    #[error("line {line}: integer `{text}` does not fit in 64 bits")]
    Overflow { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("state index {0} out of range")]
    UnknownState(StateId),
    #[error("state `{0}` already has a guard")]
    DuplicateGuard(String),
    #[error("negative guard value {0}")]
    NegativeGuard(i64),
}

/// Incremental constructor for [`Oca`].
#[derive(Debug, Default, Clone)]
pub struct OcaBuilder {
    names: Vec<String>,
    index: HashMap<String, StateId>,
    guards: Vec<Option<Constraint>>,
    transitions: Vec<Transition>,
}

impl OcaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: &str) -> Result<StateId, BuildError> {
        if self.index.contains_key(name) {
            return Err(BuildError::DuplicateState(name.to_string()));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.guards.push(None);
        Ok(id)
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn set_guard(&mut self, state: StateId, guard: Constraint) -> Result<(), BuildError> {
        let slot = self.guards.get_mut(state).ok_or(BuildError::UnknownState(state))?;
        if let Some(k) = guard.test_value() {
            if k < 0 {
                return Err(BuildError::NegativeGuard(k));
            }
        }
        if slot.is_some() {
            return Err(BuildError::DuplicateGuard(self.names[state].clone()));
        }
        *slot = Some(guard);
        Ok(())
    }

    pub fn add_transition(&mut self, src: StateId, update: i64, dst: StateId) -> Result<(), BuildError> {
        for s in [src, dst] {
            if s >= self.names.len() {
                return Err(BuildError::UnknownState(s));
            }
        }
        self.transitions.push(Transition::new(src, update, dst));
        Ok(())
    }

    pub fn build(self) -> Oca {
        let guards = self.guards.into_iter().map(Option::unwrap_or_default).collect();
        Oca::from_parts(self.names, guards, self.transitions)
    }
}

/// A one-counter automaton. Immutable once built.
#[derive(Debug, Clone)]
pub struct Oca {
    names: Vec<String>,
    index: HashMap<String, StateId>,
    guards: Vec<Constraint>,
    transitions: Vec<Transition>,
    transition_ids: HashMap<Transition, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    norm_delta: i64,
    norm_tau: i64,
}

impl PartialEq for Oca {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.guards == other.guards && self.transitions == other.transitions
    }
}

impl Eq for Oca {}

impl Oca {
    /// Duplicate transitions are collapsed; the transition relation is a set.
    pub fn from_parts(names: Vec<String>, guards: Vec<Constraint>, transitions: Vec<Transition>) -> Self {
        assert_eq!(names.len(), guards.len());
        let n = names.len();
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut deduped = Vec::with_capacity(transitions.len());
        let mut transition_ids = HashMap::new();
        for t in transitions {
            assert!(t.src < n && t.dst < n, "transition endpoint out of range");
            if let std::collections::hash_map::Entry::Vacant(e) = transition_ids.entry(t) {
                e.insert(deduped.len());
                deduped.push(t);
            }
        }
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (i, t) in deduped.iter().enumerate() {
            outgoing[t.src].push(i);
            incoming[t.dst].push(i);
        }
        let norm_delta = deduped.iter().map(|t| t.update.saturating_abs()).max().unwrap_or(0);
        let norm_tau = guards.iter().filter_map(|g| g.test_value()).max().unwrap_or(0);
        Oca {
            names,
            index,
            guards,
            transitions: deduped,
            transition_ids,
            outgoing,
            incoming,
            norm_delta,
            norm_tau,
        }
    }

    pub fn parse(text: &str) -> Result<Oca, ParseError> {
        parse_oca(text)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn states(&self) -> std::ops::Range<StateId> {
        0..self.names.len()
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.names[q]
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn guard(&self, q: StateId) -> Constraint {
        self.guards[q]
    }

    pub fn guards(&self) -> &[Constraint] {
        &self.guards
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, id: usize) -> Transition {
        self.transitions[id]
    }

    pub fn transition_id(&self, t: &Transition) -> Option<usize> {
        self.transition_ids.get(t).copied()
    }

    pub fn outgoing(&self, q: StateId) -> &[usize] {
        &self.outgoing[q]
    }

    pub fn incoming(&self, q: StateId) -> &[usize] {
        &self.incoming[q]
    }

    /// Largest absolute update, ‖Δ‖.
    pub fn norm_delta(&self) -> i64 {
        self.norm_delta
    }

    /// Largest test constant, ‖τ‖.
    pub fn norm_tau(&self) -> i64 {
        self.norm_tau
    }

    pub fn has_equality_tests(&self) -> bool {
        self.guards.iter().any(|g| g.is_equality())
    }

    pub fn is_valid(&self, c: Configuration) -> bool {
        c.value >= 0 && self.guards[c.state].allows(c.value)
    }

    /// Valid one-step successors of `c`, paired with the transition id used.
    pub fn successors(&self, c: Configuration) -> impl Iterator<Item = (usize, Configuration)> + '_ {
        self.outgoing[c.state].iter().filter_map(move |&id| {
            let t = self.transitions[id];
            let value = c.value.checked_add(t.update)?;
            let d = Configuration::new(t.dst, value);
            self.is_valid(d).then_some((id, d))
        })
    }

    /// Valid one-step predecessors of `c`, paired with the transition id used.
    pub fn predecessors(&self, c: Configuration) -> impl Iterator<Item = (usize, Configuration)> + '_ {
        self.incoming[c.state].iter().filter_map(move |&id| {
            let t = self.transitions[id];
            let value = c.value.checked_sub(t.update)?;
            let d = Configuration::new(t.src, value);
            self.is_valid(d).then_some((id, d))
        })
    }

    /// Same states and guards; every transition `(q, a, q')` becomes `(q', -a, q)`.
    /// Transition ids are preserved.
    pub fn reverse(&self) -> Oca {
        let transitions = self.transitions.iter().map(|t| t.reversed()).collect();
        Oca::from_parts(self.names.clone(), self.guards.clone(), transitions)
    }

    /// Sub-automaton on the states with `keep[q]`, with the transitions between
    /// them. Returns the automaton and the old-to-new state map.
    pub fn restrict(&self, keep: &[bool]) -> (Oca, Vec<Option<StateId>>) {
        let mut map = vec![None; self.num_states()];
        let mut names = Vec::new();
        let mut guards = Vec::new();
        for q in self.states() {
            if keep[q] {
                map[q] = Some(names.len());
                names.push(self.names[q].clone());
                guards.push(self.guards[q]);
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter_map(|t| Some(Transition::new(map[t.src]?, t.update, map[t.dst]?)))
            .collect();
        (Oca::from_parts(names, guards, transitions), map)
    }

    /// Parses a configuration literal such as `q:0`.
    pub fn parse_configuration(&self, text: &str) -> Result<Configuration, ParseError> {
        let err = |message: String| ParseError::Syntax { line: 0, message };
        let (name, value) = text
            .trim()
            .rsplit_once(':')
            .ok_or_else(|| err(format!("configuration `{text}` must look like `state:value`")))?;
        let state = self
            .state_id(name)
            .ok_or_else(|| ParseError::UndeclaredState { line: 0, name: name.to_string() })?;
        let value = parse_int(value, 0)?;
        Ok(Configuration::new(state, value))
    }

    pub fn format_configuration(&self, c: Configuration) -> String {
        format!("{}:{}", self.names[c.state], c.value)
    }

    /// Serializes back into the text format accepted by [`Oca::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("states:");
        for n in &self.names {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        for q in self.states() {
            match self.guards[q] {
                Constraint::True => {}
                Constraint::Eq(k) => out.push_str(&format!("guard {} == {}\n", self.names[q], k)),
                Constraint::Neq(k) => out.push_str(&format!("guard {} != {}\n", self.names[q], k)),
            }
        }
        for t in &self.transitions {
            out.push_str(&format!("trans {} {:+} {}\n", self.names[t.src], t.update, self.names[t.dst]));
        }
        out
    }
}

impl fmt::Display for Oca {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_int(text: &str, line: usize) -> Result<i64, ParseError> {
    let t = text.trim();
    let digits = t.strip_prefix('+').unwrap_or(t);
    let body = digits.strip_prefix('-').unwrap_or(digits);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::Syntax { line, message: format!("expected an integer, found `{t}`") });
    }
    digits.parse::<i64>().map_err(|_| ParseError::Overflow { line, text: t.to_string() })
}

fn is_identifier(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '\'' | '.' | '-'))
        && !name.contains(':')
}

/// Parses the line-oriented automaton format.
pub fn parse_oca(text: &str) -> Result<Oca, ParseError> {
    let mut builder = OcaBuilder::new();
    let mut pending_transitions = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: &str| ParseError::Syntax { line, message: message.to_string() };
        if let Some(rest) = content.strip_prefix("states:") {
            for name in rest.split_whitespace() {
                if !is_identifier(name) {
                    return Err(syntax(&format!("invalid state name `{name}`")));
                }
                builder
                    .add_state(name)
                    .map_err(|_| ParseError::DuplicateState { line, name: name.to_string() })?;
            }
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words.as_slice() {
            ["guard", name, op, value] => {
                let q = builder
                    .state(name)
                    .ok_or_else(|| ParseError::UndeclaredState { line, name: name.to_string() })?;
                let k = parse_int(value, line)?;
                if k < 0 {
                    return Err(ParseError::NegativeGuard { line, value: k });
                }
                let guard = match *op {
                    "!=" => Constraint::Neq(k),
                    "==" => Constraint::Eq(k),
                    _ => return Err(syntax(&format!("unknown guard operator `{op}`"))),
                };
                builder
                    .set_guard(q, guard)
                    .map_err(|_| ParseError::DuplicateGuard { line, name: name.to_string() })?;
            }
            ["trans", src, update, dst] => {
                pending_transitions.push((line, src.to_string(), parse_int(update, line)?, dst.to_string()));
            }
            [keyword, ..] if matches!(*keyword, "guard" | "trans") => {
                return Err(syntax(&format!("malformed `{keyword}` line")));
            }
            _ => return Err(syntax(&format!("unrecognised line `{content}`"))),
        }
    }

    for (line, src, update, dst) in pending_transitions {
        let lookup = |name: &str| {
            builder
                .state(name)
                .ok_or_else(|| ParseError::UndeclaredState { line, name: name.to_string() })
        };
        let (s, d) = (lookup(&src)?, lookup(&dst)?);
        builder.add_transition(s, update, d).expect("states resolved above");
    }
    Ok(builder.build())
}

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gen::{FuzzSpec, Instance};
use crate::automaton::{Configuration, Constraint, Oca, Transition};
use crate::oracle::{reach_oracle, OracleVerdict};
use crate::path::{apply_path, Mode};
use crate::solver::{decide_full, verify_unreachability, SolverOptions, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Reachable,
    Unreachable,
    /// Either side ran out of budget.
    Skipped,
    Disagree(String),
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "non-string panic".to_string())
}

/// Runs the solver on one instance and checks its answer and evidence
/// against the oracle.
pub fn check_instance(inst: &Instance, opts: &SolverOptions) -> Outcome {
    let opts = SolverOptions { cross_check: false, ..opts.clone() };
    let (a, src, trg) = (&inst.oca, inst.src, inst.trg);
    let verdict = match catch_unwind(AssertUnwindSafe(|| decide_full(a, src, trg, &opts))) {
        Ok(v) => v,
        Err(e) => return Outcome::Disagree(format!("solver panicked: {}", panic_message(e))),
    };
    let expected = match reach_oracle(a, src, trg, &opts.budget) {
        OracleVerdict::Reachable(_) => true,
        OracleVerdict::Unreachable => false,
        OracleVerdict::ResourceExceeded(_) => return Outcome::Skipped,
    };
    match verdict {
        Verdict::ResourceExceeded(_) => Outcome::Skipped,
        Verdict::Reachable(run) => {
            let replays = apply_path(a, src, &run.path, Mode::Valid).is_ok_and(|r| r.last() == trg);
            match (expected, replays) {
                (true, true) => Outcome::Reachable,
                (false, _) => Outcome::Disagree("solver reachable, oracle unreachable".to_string()),
                (true, false) => Outcome::Disagree("returned run does not replay".to_string()),
            }
        }
        Verdict::Unreachable(ev) => {
            if expected {
                return Outcome::Disagree("solver unreachable, oracle reachable".to_string());
            }
            match verify_unreachability(a, src, trg, &ev) {
                Ok(()) => Outcome::Unreachable,
                Err(e) => Outcome::Disagree(format!("evidence rejected: {e}")),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Disagreement {
    pub index: usize,
    pub reason: String,
    pub original: Instance,
    pub shrunk: Instance,
}

#[derive(Debug, Clone, Default)]
pub struct CampaignReport {
    pub seed: u64,
    pub count: usize,
    pub reachable: usize,
    pub unreachable: usize,
    pub skipped: usize,
    pub disagreements: Vec<Disagreement>,
}

impl fmt::Display for CampaignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "instances {}", self.count)?;
        writeln!(f, "reachable {}", self.reachable)?;
        writeln!(f, "unreachable {}", self.unreachable)?;
        writeln!(f, "skipped {}", self.skipped)?;
        writeln!(f, "disagreements {}", self.disagreements.len())?;
        for d in &self.disagreements {
            writeln!(f, "\ninstance {}: {}", d.index, d.reason)?;
            write!(f, "{}", d.shrunk)?;
        }
        Ok(())
    }
}

/// Instance `i` of a campaign is generated from seed `seed + i`, so any
/// single instance can be regenerated independently.
pub fn campaign_instance(spec: &FuzzSpec, seed: u64, i: usize) -> Instance {
    spec.generate(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64)))
}

pub fn run_campaign(spec: &FuzzSpec, count: usize, seed: u64, opts: &SolverOptions) -> CampaignReport {
    let outcomes: Vec<(Instance, Outcome)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let inst = campaign_instance(spec, seed, i);
            let out = check_instance(&inst, opts);
            (inst, out)
        })
        .collect();
    let mut report = CampaignReport { seed, count, ..Default::default() };
    for (index, (inst, out)) in outcomes.into_iter().enumerate() {
        match out {
            Outcome::Reachable => report.reachable += 1,
            Outcome::Unreachable => report.unreachable += 1,
            Outcome::Skipped => report.skipped += 1,
            Outcome::Disagree(reason) => {
                let shrunk = shrink(&inst, |c| matches!(check_instance(c, opts), Outcome::Disagree(_)));
                report.disagreements.push(Disagreement { index, reason, original: inst, shrunk });
            }
        }
    }
    report
}

fn without_state(inst: &Instance, q: usize) -> Option<Instance> {
    if q == inst.src.state || q == inst.trg.state {
        return None;
    }
    let keep: Vec<bool> = (0..inst.oca.num_states()).map(|r| r != q).collect();
    let (oca, map) = inst.oca.restrict(&keep);
    let remap = |c: Configuration| Configuration::new(map[c.state].expect("endpoint kept"), c.value);
    Some(Instance { oca, src: remap(inst.src), trg: remap(inst.trg) })
}

fn with_parts(inst: &Instance, guards: Vec<Constraint>, ts: Vec<Transition>) -> Instance {
    Instance { oca: Oca::from_parts(inst.oca.state_names().to_vec(), guards, ts), ..inst.clone() }
}

fn candidates(inst: &Instance) -> Vec<Instance> {
    let a = &inst.oca;
    let mut out: Vec<Instance> = a.states().rev().filter_map(|q| without_state(inst, q)).collect();
    let ts = a.transitions();
    for i in 0..ts.len() {
        let mut fewer = ts.to_vec();
        fewer.remove(i);
        out.push(with_parts(inst, a.guards().to_vec(), fewer));
    }
    for i in 0..ts.len() {
        let u = ts[i].update;
        for smaller in [u / 2, u - u.signum()] {
            if smaller != u {
                let mut changed = ts.to_vec();
                changed[i].update = smaller;
                out.push(with_parts(inst, a.guards().to_vec(), changed));
            }
        }
    }
    for q in a.states() {
        if a.guard(q) != Constraint::True {
            let mut guards = a.guards().to_vec();
            guards[q] = Constraint::True;
            out.push(with_parts(inst, guards, ts.to_vec()));
        }
    }
    for (is_src, c) in [(true, inst.src), (false, inst.trg)] {
        if c.value > 0 {
            let lower = Configuration::new(c.state, c.value - 1);
            let mut next = inst.clone();
            if is_src { next.src = lower } else { next.trg = lower }
            out.push(next);
        }
    }
    out
}

/// Greedily applies size-reducing edits while `keep` still holds.
pub fn shrink(inst: &Instance, keep: impl Fn(&Instance) -> bool) -> Instance {
    let mut cur = inst.clone();
    'outer: loop {
        for next in candidates(&cur) {
            if keep(&next) {
                cur = next;
                continue 'outer;
            }
        }
        return cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen_subset_sum;

    #[test]
    fn shrinker_reaches_a_local_minimum() {
        let inst = gen_subset_sum(&[4, 7, 9, 2], 13);
        // keep instances with at least one transition of update 7 or more
        let big = |i: &Instance| i.oca.transitions().iter().any(|t| t.update >= 7);
        let small = shrink(&inst, big);
        assert!(big(&small));
        assert_eq!(small.oca.transitions().len(), 1);
        assert_eq!(small.oca.transitions()[0].update, 7);
    }

    #[test]
    fn small_campaign_agrees() {
        let spec = FuzzSpec { max_states: 4, max_guard: 8, equality_rate: 0.2, ..FuzzSpec::default() };
        let report = run_campaign(&spec, 40, 11, &SolverOptions::default());
        assert!(report.disagreements.is_empty(), "{report}");
        assert_eq!(report.reachable + report.unreachable + report.skipped, 40);
        let again = run_campaign(&spec, 40, 11, &SolverOptions::default());
        assert_eq!(report.to_string(), again.to_string());
    }
}

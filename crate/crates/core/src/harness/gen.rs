use std::fmt;

use rand::Rng;

use crate::automaton::{Configuration, Constraint, Oca, Transition};

/// An automaton with a pair of endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub oca: Oca,
    pub src: Configuration,
    pub trg: Configuration,
}

impl Instance {
    /// Parses the automaton text with `# src` and `# trg` directive comments.
    pub fn parse(text: &str) -> Result<Instance, String> {
        let oca = Oca::parse(text).map_err(|e| e.to_string())?;
        let find = |key: &str| -> Result<Configuration, String> {
            let line = text
                .lines()
                .find_map(|l| l.trim().strip_prefix("#")?.trim().strip_prefix(key).map(str::trim))
                .ok_or_else(|| format!("missing `# {key}` line"))?;
            oca.parse_configuration(line).map_err(|e| e.to_string())
        };
        let src = find("src")?;
        let trg = find("trg")?;
        Ok(Instance { oca, src, trg })
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# src {}", self.oca.format_configuration(self.src))?;
        writeln!(f, "# trg {}", self.oca.format_configuration(self.trg))?;
        f.write_str(&self.oca.to_text())
    }
}

/// Chain of choices `s_{i-1} → s_i` adding `values[i]` or skipping it through
/// `m_i`, followed by a final step subtracting `target`. `(s0,0)` reaches
/// `(t,0)` iff some subset of `values` sums to `target`.
pub fn gen_subset_sum(values: &[i64], target: i64) -> Instance {
    let n = values.len();
    let mut names: Vec<String> = (0..=n).map(|i| format!("s{i}")).collect();
    names.extend((1..=n).map(|i| format!("m{i}")));
    names.push("t".to_string());
    let m = |i: usize| n + i;
    let t = 2 * n + 1;
    let mut ts = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        ts.push(Transition::new(i, v, i + 1));
        ts.push(Transition::new(i, 0, m(i + 1)));
        ts.push(Transition::new(m(i + 1), 0, i + 1));
    }
    ts.push(Transition::new(n, -target, t));
    let guards = vec![Constraint::True; names.len()];
    Instance {
        oca: Oca::from_parts(names, guards, ts),
        src: Configuration::new(0, 0),
        trg: Configuration::new(t, 0),
    }
}

/// Shape of random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzSpec {
    pub max_states: usize,
    pub max_update: i64,
    pub max_guard: i64,
    pub max_transitions: usize,
    /// Probability that a guarded state tests for equality.
    pub equality_rate: f64,
    /// Probability that a state carries a guard at all.
    pub guard_rate: f64,
}

impl Default for FuzzSpec {
    fn default() -> Self {
        FuzzSpec {
            max_states: 6,
            max_update: 8,
            max_guard: 20,
            max_transitions: 12,
            equality_rate: 0.0,
            guard_rate: 0.6,
        }
    }
}

impl FuzzSpec {
    pub fn generate<R: Rng>(&self, rng: &mut R) -> Instance {
        let n = rng.random_range(1..=self.max_states.max(1));
        let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let guards: Vec<Constraint> = (0..n)
            .map(|_| {
                if !rng.random_bool(self.guard_rate) {
                    return Constraint::True;
                }
                let g = rng.random_range(0..=self.max_guard);
                if rng.random_bool(self.equality_rate) { Constraint::Eq(g) } else { Constraint::Neq(g) }
            })
            .collect();
        let m = rng.random_range(1..=self.max_transitions.max(1));
        let ts: Vec<Transition> = (0..m)
            .map(|_| {
                let u = rng.random_range(-self.max_update..=self.max_update);
                Transition::new(rng.random_range(0..n), u, rng.random_range(0..n))
            })
            .collect();
        let oca = Oca::from_parts(names, guards, ts);
        // endpoint values cluster around the guard range, where the tests bite
        let endpoint = |rng: &mut R| {
            let q = rng.random_range(0..n);
            let v = match oca.guard(q) {
                Constraint::Eq(g) => g,
                Constraint::Neq(g) if rng.random_bool(0.5) => (g + rng.random_range(-3..=3)).max(0),
                _ => rng.random_range(0..=self.max_guard + 5),
            };
            Configuration::new(q, v)
        };
        let src = endpoint(rng);
        let trg = endpoint(rng);
        Instance { oca, src, trg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{reach_oracle, ExplorationBudget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subset_sum_reachability() {
        let inst = gen_subset_sum(&[3, 5, 9], 14);
        let b = ExplorationBudget::default();
        assert!(reach_oracle(&inst.oca, inst.src, inst.trg, &b).is_reachable());
        let inst = gen_subset_sum(&[3, 5, 9], 13);
        assert!(!reach_oracle(&inst.oca, inst.src, inst.trg, &b).is_reachable());
    }

    #[test]
    fn instance_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = FuzzSpec { equality_rate: 0.3, ..FuzzSpec::default() };
        for _ in 0..50 {
            let inst = spec.generate(&mut rng);
            assert_eq!(Instance::parse(&inst.to_string()).unwrap(), inst);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = FuzzSpec::default();
        let a = spec.generate(&mut ChaCha8Rng::seed_from_u64(3));
        let b = spec.generate(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}

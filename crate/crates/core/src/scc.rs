//! Strongly connected components of the state graph.

use std::collections::BTreeSet;

use crate::automaton::{Oca, StateId};

/// SCC partition in topological order: every condensation edge goes from a
/// lower component index to a higher one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sccs {
    pub components: Vec<Vec<StateId>>,
    pub component_of: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Sccs {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn same_component(&self, p: StateId, q: StateId) -> bool {
        self.component_of[p] == self.component_of[q]
    }

    /// Membership mask of the component containing `q`.
    pub fn mask_of(&self, q: StateId) -> Vec<bool> {
        let c = self.component_of[q];
        self.component_of.iter().map(|&d| d == c).collect()
    }
}

/// Iterative Tarjan over the successor lists of `adj`.
pub fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

pub fn scc_decompose(a: &Oca) -> Sccs {
    let adj: Vec<Vec<usize>> = a
        .states()
        .map(|q| a.outgoing(q).iter().map(|&t| a.transition(t).dst).collect())
        .collect();
    // Tarjan emits sink components first.
    let mut components = tarjan(&adj);
    components.reverse();
    let mut component_of = vec![0; a.num_states()];
    for (i, comp) in components.iter().enumerate() {
        for &q in comp {
            component_of[q] = i;
        }
    }
    let edges = a
        .transitions()
        .iter()
        .map(|t| (component_of[t.src], component_of[t.dst]))
        .filter(|(x, y)| x != y)
        .collect();
    Sccs { components, component_of, edges }
}

//! Adaptation properties and model checking over explored τ-graphs.
//!
//! Graphs may be truncated. Verdicts only claim what the explored part
//! proves: a violation needs a witness inside the graph, a success needs the
//! whole reachable space (or, for formulas, agreement of the under- and
//! over-approximations of the satisfaction set).

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::logic::Formula;
use crate::lts::StateGraph;
use crate::process::Barb;
use crate::verdict::{Status, Verdict};

fn error_states(g: &StateGraph, e: &Barb) -> Vec<bool> {
    g.barbs.iter().map(|b| b.contains(e)).collect()
}

// Shortest path from the root to `target` over the graph edges.
fn path_to(g: &StateGraph, target: usize) -> Vec<usize> {
    let mut parent: Vec<Option<usize>> = vec![None; g.len()];
    let mut seen = vec![false; g.len()];
    seen[g.root] = true;
    let mut queue = VecDeque::from([g.root]);
    while let Some(i) = queue.pop_front() {
        if i == target {
            break;
        }
        for &j in &g.succ[i] {
            if !seen[j] {
                seen[j] = true;
                parent[j] = Some(i);
                queue.push_back(j);
            }
        }
    }
    let mut path = vec![target];
    let mut cur = target;
    while let Some(p) = parent[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

/// Bounded adaptation: no run visits more than `k` consecutive error states.
pub fn check_ba(g: &StateGraph, e: &Barb, k: usize) -> Verdict {
    let property = format!("bounded-adaptation({e}, k={k})");
    let err = error_states(g, e);
    let limit = k + 1;
    // nodes are (state, length of the error run ending there)
    let start = (g.root, usize::from(err[g.root]));
    let mut parent: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut found = None;
    while let Some(node) = queue.pop_front() {
        if node.1 >= limit {
            found = Some(node);
            break;
        }
        for &j in &g.succ[node.0] {
            let next = (j, if err[j] { node.1 + 1 } else { 0 });
            if seen.insert(next) {
                parent.insert(next, node);
                queue.push_back(next);
            }
        }
    }
    let n = g.len();
    match found {
        Some(mut node) => {
            let mut path = vec![node.0];
            while let Some(&prev) = parent.get(&node) {
                path.push(prev.0);
                node = prev;
            }
            path.reverse();
            Verdict::new(property, Status::Violated, n, g.complete)
                .with_witness(path)
                .with_reason(format!("a run visits {limit} consecutive states with barb {e}"))
        }
        None if g.complete => Verdict::new(property, Status::Holds, n, true)
            .with_reason(format!("no run visits more than {k} consecutive states with barb {e}")),
        None => Verdict::new(property, Status::Unknown, n, false)
            .with_reason("no violation in the explored part, but exploration was truncated"),
    }
}

/// Eventual adaptation: no run stays in error states forever. A run that
/// deadlocks in an error state counts as staying there.
pub fn check_ea(g: &StateGraph, e: &Barb) -> Verdict {
    let property = format!("eventual-adaptation({e})");
    let err = error_states(g, e);
    let n = g.len();
    let on_cycle = error_cycle_states(g, &err);
    let terminal = |i: usize| err[i] && g.expanded[i] && g.succ[i].is_empty();
    // BFS order: the first bad state found is closest to the root
    let order = bfs_order(g);
    let bad = order.into_iter().find(|&i| on_cycle[i] || terminal(i));
    match bad {
        Some(t) => {
            let mut path = path_to(g, t);
            let reason = if on_cycle[t] {
                path.extend(error_cycle_from(g, &err, t));
                format!("a cycle of states with barb {e} is reachable")
            } else {
                format!("a deadlocked state with barb {e} is reachable")
            };
            Verdict::new(property, Status::Violated, n, g.complete).with_witness(path).with_reason(reason)
        }
        None if g.complete => Verdict::new(property, Status::Holds, n, true)
            .with_reason(format!("every error run reaches a state without barb {e}")),
        None => Verdict::new(property, Status::Unknown, n, false)
            .with_reason("no violation in the explored part, but exploration was truncated"),
    }
}

fn bfs_order(g: &StateGraph) -> Vec<usize> {
    let mut seen = vec![false; g.len()];
    seen[g.root] = true;
    let mut order = vec![g.root];
    let mut k = 0;
    while k < order.len() {
        let i = order[k];
        k += 1;
        for &j in &g.succ[i] {
            if !seen[j] {
                seen[j] = true;
                order.push(j);
            }
        }
    }
    order
}

// States lying on a cycle made only of error states (Tarjan on the error subgraph).
fn error_cycle_states(g: &StateGraph, err: &[bool]) -> Vec<bool> {
    let n = g.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut result = vec![false; n];
    let mut counter = 0;
    for root in 0..n {
        if !err[root] || index[root] != usize::MAX {
            continue;
        }
        // iterative DFS: (node, next successor position)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ: Vec<usize> = g.succ[v].iter().copied().filter(|&w| err[w]).collect();
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
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
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                let cyclic = component.len() > 1 || g.succ[v].contains(&v);
                if cyclic {
                    for w in component {
                        result[w] = true;
                    }
                }
            }
        }
    }
    result
}

// Error-only path from `t` back to itself, excluding the starting `t`.
fn error_cycle_from(g: &StateGraph, err: &[bool], t: usize) -> Vec<usize> {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut seen = BTreeSet::new();
    for &j in &g.succ[t] {
        if err[j] && seen.insert(j) {
            parent.insert(j, t);
            queue.push_back(j);
        }
    }
    while let Some(i) = queue.pop_front() {
        if i == t {
            let mut cycle = vec![t];
            let mut cur = parent[&t];
            while cur != t {
                cycle.push(cur);
                cur = parent[&cur];
            }
            cycle.reverse();
            return cycle;
        }
        for &j in &g.succ[i] {
            if err[j] && seen.insert(j) {
                parent.insert(j, i);
                queue.push_back(j);
            }
        }
    }
    Vec::new()
}

/// Result of model checking a formula on a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelCheck {
    /// States satisfying the formula on the explored graph taken as is.
    pub sat: BTreeSet<usize>,
    pub verdict: Verdict,
}

type StateSet = Vec<bool>;

struct Checker<'a> {
    g: &'a StateGraph,
    preds: Vec<Vec<usize>>,
    frontier: StateSet,
}

impl Checker<'_> {
    fn pred(&self, s: &StateSet) -> StateSet {
        let mut out = vec![false; s.len()];
        for (j, &inside) in s.iter().enumerate() {
            if inside {
                for &i in &self.preds[j] {
                    out[i] = true;
                }
            }
        }
        out
    }

    fn pred_star(&self, s: &StateSet) -> StateSet {
        let mut out = s.clone();
        let mut stack: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
        while let Some(j) = stack.pop() {
            for &i in &self.preds[j] {
                if !out[i] {
                    out[i] = true;
                    stack.push(i);
                }
            }
        }
        out
    }

    fn atom(&self, b: &Barb) -> StateSet {
        self.g.barbs.iter().map(|bs| bs.contains(b)).collect()
    }

    // Satisfaction on the explored graph as if it were the whole system.
    fn naive(&self, phi: &Formula) -> StateSet {
        let n = self.g.len();
        match phi {
            Formula::True => vec![true; n],
            Formula::Atom(b) => self.atom(b),
            Formula::Or(a, b) => zip(&self.naive(a), &self.naive(b), |x, y| x || y),
            Formula::And(a, b) => zip(&self.naive(a), &self.naive(b), |x, y| x && y),
            Formula::Not(a) => self.naive(a).iter().map(|x| !x).collect(),
            Formula::Next(a) => self.pred(&self.naive(a)),
            Formula::Ev(a) => self.pred_star(&self.naive(a)),
        }
    }

    // (certainly satisfied, possibly satisfied) given unexplored successors
    // of the frontier states.
    fn bounds(&self, phi: &Formula) -> (StateSet, StateSet) {
        let n = self.g.len();
        match phi {
            Formula::True => (vec![true; n], vec![true; n]),
            Formula::Atom(b) => {
                let s = self.atom(b);
                (s.clone(), s)
            }
            Formula::Or(a, b) => {
                let (ua, oa) = self.bounds(a);
                let (ub, ob) = self.bounds(b);
                (zip(&ua, &ub, |x, y| x || y), zip(&oa, &ob, |x, y| x || y))
            }
            Formula::And(a, b) => {
                let (ua, oa) = self.bounds(a);
                let (ub, ob) = self.bounds(b);
                (zip(&ua, &ub, |x, y| x && y), zip(&oa, &ob, |x, y| x && y))
            }
            Formula::Not(a) => {
                let (u, o) = self.bounds(a);
                (o.iter().map(|x| !x).collect(), u.iter().map(|x| !x).collect())
            }
            Formula::Next(a) => {
                let (u, o) = self.bounds(a);
                (self.pred(&u), zip(&self.pred(&o), &self.frontier, |x, y| x || y))
            }
            Formula::Ev(a) => {
                let (u, o) = self.bounds(a);
                (self.pred_star(&u), self.pred_star(&zip(&o, &self.frontier, |x, y| x || y)))
            }
        }
    }
}

fn zip(a: &StateSet, b: &StateSet, f: impl Fn(bool, bool) -> bool) -> StateSet {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Evaluates `phi` on every state and decides it at the root.
pub fn model_check(g: &StateGraph, phi: &Formula) -> ModelCheck {
    let checker = Checker { g, preds: g.preds(), frontier: g.expanded.iter().map(|e| !e).collect() };
    let naive = checker.naive(phi);
    let sat: BTreeSet<usize> = (0..g.len()).filter(|&i| naive[i]).collect();
    let (under, over) = checker.bounds(phi);
    let n = g.len();
    let property = phi.to_string();
    let verdict = if under[g.root] {
        Verdict::new(property, Status::Holds, n, g.complete).with_reason("the root satisfies the formula")
    } else if !over[g.root] {
        let witness = match phi {
            Formula::Not(inner) => match &**inner {
                Formula::Ev(psi) => {
                    let (u, _) = checker.bounds(psi);
                    let target = bfs_order(g).into_iter().find(|&i| u[i]).unwrap_or(g.root);
                    path_to(g, target)
                }
                _ => vec![g.root],
            },
            _ => vec![g.root],
        };
        Verdict::new(property, Status::Violated, n, g.complete)
            .with_witness(witness)
            .with_reason("the root does not satisfy the formula")
    } else {
        Verdict::new(property, Status::Unknown, n, false)
            .with_reason("the answer depends on the unexplored part of the state space")
    };
    ModelCheck { sat, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{schema, SchemaKind, SchemaParams};
    use crate::lts::{explore, ExploreOptions};
    use crate::syntax::{parse_formula, parse_process};

    fn graph(src: &str) -> StateGraph {
        explore(&parse_process(src).unwrap(), ExploreOptions::default()).unwrap()
    }

    fn e() -> Barb {
        Barb::output("e")
    }

    #[test]
    fn ba_examples() {
        let g = graph("^e.0");
        assert_eq!(check_ba(&g, &e(), 1).status, Status::Holds);
        let v = check_ba(&g, &e(), 0);
        assert_eq!(v.status, Status::Violated);
        assert_eq!(v.witness, Some(vec![0]));
        let g = graph("^e.0 | !a.0 | !^a.0");
        for k in [0, 1, 5] {
            assert_eq!(check_ba(&g, &e(), k).status, Status::Violated);
        }
        let g = graph("a.0 | ^a.0");
        assert!(check_ba(&g, &e(), 0).holds());
    }

    #[test]
    fn ba_counts_consecutive_states() {
        // error, error, clean
        let g = graph("^e.0 | a.b.0 | ^a.^b.0");
        let states_with_e = g.barbs.iter().filter(|b| b.contains(&e())).count();
        assert_eq!(states_with_e, 3);
        assert_eq!(check_ba(&g, &e(), 2).status, Status::Violated);
        assert!(check_ba(&g, &e(), 3).holds());
    }

    #[test]
    fn ea_examples() {
        let v = check_ea(&graph("^e.0 | !a.0 | !^a.0"), &e());
        assert_eq!(v.status, Status::Violated);
        assert_eq!(v.witness, Some(vec![0, 0]));
        assert_eq!(check_ea(&graph("^e.0"), &e()).status, Status::Violated);
        // the error is withdrawn by a τ step
        assert!(check_ea(&graph("(^e.0 + a.0) | ^a.0"), &e()).holds());
        assert!(check_ea(&graph("e.0 | ^e.0 | ^x.0"), &e()).holds());
    }

    #[test]
    fn ea_unknown_on_truncated_graph() {
        let g = explore(
            &parse_process("!a.^a.^b.0 | ^a.0").unwrap(),
            ExploreOptions { max_states: 4, max_depth: None },
        )
        .unwrap();
        assert_eq!(check_ea(&g, &Barb::output("zz")).status, Status::Unknown);
        assert_eq!(check_ba(&g, &Barb::output("zz"), 0).status, Status::Unknown);
    }

    #[test]
    fn model_check_examples() {
        let g = graph("a.0 | ^a.0");
        let all = model_check(&g, &Formula::True);
        assert_eq!(all.sat.len(), g.len());
        let phi = parse_formula("<> (not a and not ^a)").unwrap();
        assert!(model_check(&g, &phi).verdict.holds());

        let g = graph("^e.0 | !a.0 | !^a.0");
        let cb1 = schema(SchemaKind::Cb, &SchemaParams { error: Some(e()), ok: None, k: Some(1) }).unwrap();
        let r = model_check(&g, &cb1);
        assert_eq!(r.verdict.status, Status::Violated);
        assert!(r.sat.is_empty());
    }

    #[test]
    fn truncated_graphs_degrade_to_unknown() {
        let g = explore(
            &parse_process("!a.^a.^b.0 | ^a.0").unwrap(),
            ExploreOptions { max_states: 3, max_depth: None },
        )
        .unwrap();
        assert!(!g.complete);
        // never sees ^zz, but an unexplored state might
        let phi = parse_formula("not ev ^zz").unwrap();
        assert_eq!(model_check(&g, &phi).verdict.status, Status::Unknown);
        // monotone and witnessed: stays true
        let phi = parse_formula("ev ^a").unwrap();
        assert_eq!(model_check(&g, &phi).verdict.status, Status::Holds);
    }
}

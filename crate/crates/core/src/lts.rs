//! Labelled transitions of adaptable processes and exploration of the
//! τ-reachability graph.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::process::{barbs, canonicalize, fill, Barb, Name, Prefix, Process};

/// Default bound on explored states; overridden by `EVOVERIFY_MAX_STATES`.
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionLabel {
    In(Name),
    Out(Name),
    Tau,
    /// `a[P]`: the located process offers its current state; the target holds `⋆`.
    LocState(Name, Process),
    /// `a{U}`: an update offered to the locality `a`.
    UpdOffer(Name, Process),
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionLabel::In(a) => write!(f, "{a}"),
            TransitionLabel::Out(a) => write!(f, "^{a}"),
            TransitionLabel::Tau => write!(f, "tau"),
            TransitionLabel::LocState(a, p) => write!(f, "{a}[{p}]"),
            TransitionLabel::UpdOffer(a, u) => write!(f, "{a}{{{u}}}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtsError {
    #[error("placeholder leaked into successor `{target}` of `{state}`")]
    PlaceholderLeak { state: String, target: String },
}

/// All transitions of `p`, targets canonicalized, sorted and deduplicated.
pub fn transitions(p: &Process) -> Result<Vec<(TransitionLabel, Process)>, LtsError> {
    let mut out: Vec<(TransitionLabel, Process)> =
        derive(p).into_iter().map(|(l, q)| (l, canonicalize(&q))).collect();
    out.sort();
    out.dedup();
    for (l, q) in &out {
        let expected = usize::from(matches!(l, TransitionLabel::LocState(..)));
        if q.count_stars() != expected {
            return Err(LtsError::PlaceholderLeak { state: p.to_string(), target: q.to_string() });
        }
    }
    Ok(out)
}

/// τ-successors of `p`, canonical, sorted and deduplicated.
pub fn tau_successors(p: &Process) -> Result<Vec<Process>, LtsError> {
    let mut out: Vec<Process> = derive_tau(p).iter().map(canonicalize).collect();
    out.sort();
    out.dedup();
    if let Some(q) = out.iter().find(|q| q.contains_star()) {
        return Err(LtsError::PlaceholderLeak { state: p.to_string(), target: q.to_string() });
    }
    Ok(out)
}

fn prefix_label(pi: &Prefix) -> TransitionLabel {
    match pi {
        Prefix::Input(a) => TransitionLabel::In(a.clone()),
        Prefix::Output(a) => TransitionLabel::Out(a.clone()),
        Prefix::Update(a, u) => TransitionLabel::UpdOffer(a.clone(), (**u).clone()),
    }
}

fn flatten_par<'a>(p: &'a Process, out: &mut Vec<&'a Process>) {
    match p {
        Process::Par(ps) => ps.iter().for_each(|q| flatten_par(q, out)),
        other => out.push(other),
    }
}

fn replace_at(items: &[&Process], i: usize, with: Process) -> Vec<Process> {
    items.iter().enumerate().map(|(k, q)| if k == i { with.clone() } else { (*q).clone() }).collect()
}

// Raw derivations, targets not canonicalized.
fn derive(p: &Process) -> Vec<(TransitionLabel, Process)> {
    match p {
        Process::Nil | Process::Star | Process::Hole => Vec::new(),
        Process::Sum(branches) => branches.iter().map(|(pi, cont)| (prefix_label(pi), cont.clone())).collect(),
        Process::Repl(pi, cont) => {
            vec![(prefix_label(pi), Process::Par(vec![(**cont).clone(), p.clone()]))]
        }
        Process::Located(a, body) => {
            let mut out = vec![(TransitionLabel::LocState(a.clone(), (**body).clone()), Process::Star)];
            for (l, b2) in derive(body) {
                out.push((l, Process::located(a.clone(), b2)));
            }
            out
        }
        Process::Par(_) => derive_par(p, true),
    }
}

fn derive_tau(p: &Process) -> Vec<Process> {
    match p {
        Process::Par(_) => derive_par(p, false).into_iter().map(|(_, q)| q).collect(),
        Process::Located(a, body) => derive_tau(body).into_iter().map(|b| Process::located(a.clone(), b)).collect(),
        _ => Vec::new(),
    }
}

// Transitions of a parallel composition. Identical components move
// identically, so only one representative of each is derived (two when they
// synchronise with each other). With `labelled` false only τ moves are built.
fn derive_par(p: &Process, labelled: bool) -> Vec<(TransitionLabel, Process)> {
    let mut items = Vec::new();
    flatten_par(p, &mut items);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: HashMap<&Process, usize> = HashMap::new();
    for (k, q) in items.iter().enumerate() {
        let g = *group_of.entry(*q).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(k);
    }
    let moves: Vec<Vec<(TransitionLabel, Process)>> = groups.iter().map(|g| derive(items[g[0]])).collect();
    let mut out = Vec::new();
    for (g, ms) in moves.iter().enumerate() {
        for (l, q2) in ms {
            if labelled || *l == TransitionLabel::Tau {
                out.push((l.clone(), Process::Par(replace_at(&items, groups[g][0], q2.clone()))));
            }
        }
    }
    for (gi, mi) in moves.iter().enumerate() {
        for (gj, mj) in moves.iter().enumerate() {
            let (i, j) = if gi != gj {
                (groups[gi][0], groups[gj][0])
            } else if groups[gi].len() > 1 {
                (groups[gi][0], groups[gi][1])
            } else {
                continue;
            };
            for (li, qi) in mi {
                for (lj, qj) in mj {
                    let pair = match (li, lj) {
                        (TransitionLabel::In(a), TransitionLabel::Out(b)) if a == b => Some((qi.clone(), qj.clone())),
                        (TransitionLabel::LocState(a, q), TransitionLabel::UpdOffer(b, u)) if a == b => {
                            Some((qi.replace_star(&fill(u, q)), qj.clone()))
                        }
                        _ => None,
                    };
                    if let Some((ni, nj)) = pair {
                        let mut next = replace_at(&items, i, ni);
                        next[j] = nj;
                        out.push((TransitionLabel::Tau, Process::Par(next)));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsHit {
    None,
    MaxStates,
    MaxDepth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_states: DEFAULT_MAX_STATES, max_depth: None }
    }
}

impl ExploreOptions {
    /// Defaults, with `max_states` taken from `EVOVERIFY_MAX_STATES` when set.
    pub fn from_env() -> Self {
        let max_states = std::env::var("EVOVERIFY_MAX_STATES")
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&n: &usize| n >= 1)
            .unwrap_or(DEFAULT_MAX_STATES);
        ExploreOptions { max_states, max_depth: None }
    }
}

/// Explored τ-graph. State 0 is the root; states are numbered in BFS order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateGraph {
    pub states: Vec<Process>,
    /// Sorted successor lists.
    pub succ: Vec<Vec<usize>>,
    pub barbs: Vec<BTreeSet<Barb>>,
    /// Whether all τ-successors of the state are recorded.
    pub expanded: Vec<bool>,
    pub root: usize,
    pub complete: bool,
    pub bounds_hit: BoundsHit,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.succ.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&j| (i, j))).collect()
    }

    pub fn preds(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.len()];
        for (i, j) in self.edges() {
            preds[j].push(i);
        }
        preds
    }

    pub fn to_json(&self) -> serde_json::Value {
        let states: Vec<_> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let barbs: Vec<String> = self.barbs[i].iter().map(|b| b.to_string()).collect();
                json!({ "id": i, "term": p.to_string(), "barbs": barbs })
            })
            .collect();
        let edges: Vec<[usize; 2]> = self.edges().into_iter().map(|(i, j)| [i, j]).collect();
        json!({
            "states": states,
            "edges": edges,
            "root": self.root,
            "complete": self.complete,
            "bounds_hit": self.bounds_hit,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lts {\n");
        for (i, p) in self.states.iter().enumerate() {
            let barbs: Vec<String> = self.barbs[i].iter().map(|b| b.to_string()).collect();
            let label = format!("{p}\n{{{}}}", barbs.join(", "));
            let shape = if i == self.root { ", shape=doublecircle" } else { "" };
            out.push_str(&format!("  n{i} [label=\"{}\"{shape}];\n", escape(&label)));
        }
        for (i, j) in self.edges() {
            out.push_str(&format!("  n{i} -> n{j};\n"));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

// Expanding a small layer in parallel costs more than it saves.
const PARALLEL_LAYER: usize = 32;

/// Breadth-first exploration of the τ-graph of `canonicalize(p)`. The result
/// does not depend on how many threads rayon uses.
pub fn explore(p: &Process, opts: ExploreOptions) -> Result<StateGraph, LtsError> {
    let root = canonicalize(p);
    let mut g = StateGraph {
        states: vec![root.clone()],
        succ: vec![Vec::new()],
        barbs: vec![barbs(&root)],
        expanded: vec![false],
        root: 0,
        complete: true,
        bounds_hit: BoundsHit::None,
    };
    let mut index: HashMap<Process, usize> = HashMap::from([(root, 0)]);
    let mut layer: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let max_states = opts.max_states.max(1);
    while !layer.is_empty() {
        let expand = |&i: &usize| tau_successors(&g.states[i]);
        let succs: Vec<Vec<Process>> = if layer.len() >= PARALLEL_LAYER {
            layer.par_iter().map(expand).collect::<Result<_, _>>()?
        } else {
            layer.iter().map(expand).collect::<Result<_, _>>()?
        };
        let at_depth_bound = opts.max_depth.is_some_and(|d| depth >= d);
        let mut next_layer = Vec::new();
        for (&i, succ) in layer.iter().zip(succs) {
            if at_depth_bound {
                g.expanded[i] = succ.is_empty();
                if !succ.is_empty() {
                    g.complete = false;
                    g.bounds_hit = BoundsHit::MaxDepth;
                }
                continue;
            }
            let mut full = true;
            let mut targets = Vec::with_capacity(succ.len());
            for q in succ {
                if let Some(&j) = index.get(&q) {
                    targets.push(j);
                } else if g.states.len() < max_states {
                    let j = g.states.len();
                    g.barbs.push(barbs(&q));
                    g.states.push(q.clone());
                    g.succ.push(Vec::new());
                    g.expanded.push(false);
                    index.insert(q, j);
                    next_layer.push(j);
                    targets.push(j);
                } else {
                    full = false;
                    g.complete = false;
                    g.bounds_hit = BoundsHit::MaxStates;
                }
            }
            targets.sort_unstable();
            targets.dedup();
            g.succ[i] = targets;
            g.expanded[i] = full;
        }
        layer = next_layer;
        depth += 1;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn has(t: &[(TransitionLabel, Process)], l: TransitionLabel, q: &str) -> bool {
        t.contains(&(l, canonicalize(&p(q))))
    }

    #[test]
    fn synchronisation() {
        let t = transitions(&p("a.0 | ^a.0")).unwrap();
        assert!(has(&t, TransitionLabel::Tau, "0"));
        assert!(has(&t, TransitionLabel::In("a".into()), "^a.0"));
    }

    #[test]
    fn locality_offers_state() {
        let t = transitions(&p("a[b.0]")).unwrap();
        assert!(t.contains(&(TransitionLabel::LocState("a".into(), p("b.0")), Process::Star)));
        assert!(has(&t, TransitionLabel::In("b".into()), "a[0]"));
    }

    #[test]
    fn update_consumes_locality() {
        let t = transitions(&p("a[b.0] | a{0}.c.0")).unwrap();
        assert!(has(&t, TransitionLabel::Tau, "c.0"));
        let t = transitions(&p("a[b.0] | a{a[@ | ^x.0]}.0")).unwrap();
        assert!(has(&t, TransitionLabel::Tau, "a[b.0 | ^x.0]"));
    }

    #[test]
    fn nested_locality_is_updatable() {
        let t = tau_successors(&p("b[a[c.0]] | a{0}.0")).unwrap();
        assert_eq!(t, vec![p("b[0]")]);
        // a location cannot consume an update offered inside it
        assert!(tau_successors(&p("a[a{0}.0]")).unwrap().is_empty());
    }

    #[test]
    fn replication_unfolds_lazily() {
        let t = transitions(&p("!a.^b.0")).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].1, canonicalize(&p("^b.0 | !a.^b.0")));
    }

    #[test]
    fn loc_transparency() {
        let inner = transitions(&p("^e.0 + b.0")).unwrap();
        let outer = transitions(&p("a[^e.0 + b.0]")).unwrap();
        for (l, q) in inner {
            assert!(outer.contains(&(l, canonicalize(&Process::located("a", q)))));
        }
    }

    #[test]
    fn explore_examples() {
        let g = explore(&p("0"), ExploreOptions { max_states: 10, max_depth: Some(10) }).unwrap();
        assert_eq!((g.len(), g.edges().len(), g.complete), (1, 0, true));
        let g = explore(&p("a.0 | ^a.0"), ExploreOptions { max_states: 10, max_depth: Some(10) }).unwrap();
        assert_eq!((g.len(), g.edges().len(), g.complete), (2, 1, true));
        let g = explore(&p("!a.0 | !^a.0"), ExploreOptions { max_states: 100, max_depth: Some(100) }).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edges(), vec![(0, 0)]);
        assert!(g.complete);
    }

    #[test]
    fn bounds_are_reported() {
        // an unbounded producer
        let src = "!a.^a.^b.0 | ^a.0";
        let g = explore(&p(src), ExploreOptions { max_states: 5, max_depth: None }).unwrap();
        assert_eq!(g.len(), 5);
        assert!(!g.complete);
        assert_eq!(g.bounds_hit, BoundsHit::MaxStates);
        let g = explore(&p(src), ExploreOptions { max_states: 1000, max_depth: Some(2) }).unwrap();
        assert!(!g.complete);
        assert_eq!(g.bounds_hit, BoundsHit::MaxDepth);
        assert!(g.expanded.iter().any(|e| !e));
    }

    #[test]
    fn exports() {
        let g = explore(&p("a.0 | ^a.0"), ExploreOptions::default()).unwrap();
        let j = g.to_json();
        assert_eq!(j["edges"], json!([[0, 1]]));
        assert_eq!(j["root"], 0);
        assert_eq!(j["states"][0]["barbs"], json!(["a", "^a"]));
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("n0 -> n1;"));
    }
}

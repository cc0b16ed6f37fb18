//! Seeded generators and independent oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's algorithms: the LTS oracle
//! works on binary parallel compositions without canonical forms, BA/EA are
//! decided by enumerating walks, and formulas are evaluated with a
//! transitive-closure matrix.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use evoverify_core::choreo::Choreography;
use evoverify_core::logic::Formula;
use evoverify_core::lts::StateGraph;
use evoverify_core::process::{fill, Barb, Prefix, Process};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const CHANNELS: [&str; 4] = ["a", "b", "c", "e"];
const LOCATIONS: [&str; 2] = ["l", "m"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).unwrap()
}

fn gen_prefix<R: Rng>(rng: &mut R, depth: usize) -> Prefix {
    match rng.gen_range(0..10) {
        0..=3 => Prefix::Input(pick(rng, &CHANNELS).into()),
        4..=7 => Prefix::Output(pick(rng, &CHANNELS).into()),
        _ => Prefix::Update(pick(rng, &LOCATIONS).into(), Box::new(gen_term(rng, depth.saturating_sub(1), true))),
    }
}

fn gen_term<R: Rng>(rng: &mut R, depth: usize, holes: bool) -> Process {
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 if holes => Process::Hole,
            0 | 1 => Process::Nil,
            _ => Process::prefixed(gen_prefix(rng, 0), Process::Nil),
        };
    }
    match rng.gen_range(0..12) {
        0 => Process::Nil,
        1 if holes => Process::Hole,
        1..=3 => {
            let n = rng.gen_range(1..=2);
            Process::Sum((0..n).map(|_| (gen_prefix(rng, depth), gen_term(rng, depth - 1, holes))).collect())
        }
        4..=6 => Process::par(vec![gen_term(rng, depth - 1, holes), gen_term(rng, depth - 1, holes)]),
        7..=9 => Process::located(pick(rng, &LOCATIONS), gen_term(rng, depth - 1, holes)),
        _ => {
            // replication with a small body keeps many state spaces finite
            let pi = gen_prefix(rng, 1);
            Process::repl(pi, gen_term(rng, depth.min(2) - 1, holes))
        }
    }
}

/// Random process (no holes outside update prefixes).
pub fn gen_process<R: Rng>(rng: &mut R, depth: usize) -> Process {
    gen_term(rng, depth, false)
}

/// Random update pattern.
pub fn gen_pattern<R: Rng>(rng: &mut R, depth: usize) -> Process {
    gen_term(rng, depth, true)
}

pub fn barb_pool() -> Vec<Barb> {
    CHANNELS.iter().flat_map(|c| [Barb::input(*c), Barb::output(*c)]).collect()
}

pub fn gen_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    let pool = barb_pool();
    if depth == 0 {
        return match rng.gen_range(0..6) {
            0 => Formula::True,
            _ => Formula::Atom(pool.choose(rng).unwrap().clone()),
        };
    }
    match rng.gen_range(0..7) {
        0 => Formula::or(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        1 => Formula::and(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        2 => Formula::not(gen_formula(rng, depth - 1)),
        3 => Formula::next(gen_formula(rng, depth - 1)),
        4 => Formula::ev(gen_formula(rng, depth - 1)),
        _ => gen_formula(rng, 0),
    }
}

/// Random choreography over at most `roles` roles and `names` operation names.
pub fn gen_choreography<R: Rng>(rng: &mut R, depth: usize, roles: usize, names: usize) -> Choreography {
    const ROLES: [&str; 4] = ["r", "s", "t", "u"];
    const NAMES: [&str; 6] = ["a", "b", "c", "d", "f", "g"];
    let roles = &ROLES[..roles.clamp(2, 4)];
    let names = &NAMES[..names.clamp(1, 6)];
    if depth == 0 {
        if rng.gen_bool(0.05) {
            return Choreography::One;
        }
        let from = pick(rng, roles);
        let to = loop {
            let to = pick(rng, roles);
            if to != from {
                break to;
            }
        };
        return Choreography::interaction(pick(rng, names), from, to);
    }
    let sub = |rng: &mut R| {
        let d = rng.gen_range(0..depth);
        gen_choreography(rng, d, roles.len(), names.len())
    };
    match rng.gen_range(0..10) {
        0..=3 => Choreography::seq(sub(rng), sub(rng)),
        4..=5 => Choreography::choice(sub(rng), sub(rng)),
        6..=7 => Choreography::par(sub(rng), sub(rng)),
        8 => Choreography::star(sub(rng)),
        _ => sub(rng),
    }
}

// ---------------------------------------------------------------------------
// LTS oracle: direct reading of the rules over binary parallel composition.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OLabel {
    In(String),
    Out(String),
    Tau,
    Loc(String, Process),
    Upd(String, Process),
}

// n-ary parallel read as a right-nested binary tree
fn binary(ps: &[Process]) -> (Process, Process) {
    let rest = if ps.len() == 2 { ps[1].clone() } else { Process::Par(ps[1..].to_vec()) };
    (ps[0].clone(), rest)
}

pub fn oracle_steps(p: &Process) -> Vec<(OLabel, Process)> {
    match p {
        Process::Nil | Process::Hole | Process::Star => vec![],
        Process::Sum(bs) => bs.iter().map(|(pi, q)| (olabel(pi), q.clone())).collect(),
        Process::Repl(pi, q) => vec![(olabel(pi), Process::Par(vec![(**q).clone(), p.clone()]))],
        Process::Located(a, q) => {
            let mut out = vec![(OLabel::Loc(a.clone(), (**q).clone()), Process::Star)];
            for (l, q2) in oracle_steps(q) {
                out.push((l, Process::located(a.clone(), q2)));
            }
            out
        }
        Process::Par(ps) if ps.is_empty() => vec![],
        Process::Par(ps) if ps.len() == 1 => oracle_steps(&ps[0]),
        Process::Par(ps) => {
            let (p1, p2) = binary(ps);
            let s1 = oracle_steps(&p1);
            let s2 = oracle_steps(&p2);
            let mut out = Vec::new();
            for (l, q) in &s1 {
                out.push((l.clone(), Process::Par(vec![q.clone(), p2.clone()])));
            }
            for (l, q) in &s2 {
                out.push((l.clone(), Process::Par(vec![p1.clone(), q.clone()])));
            }
            for (l1, q1) in &s1 {
                for (l2, q2) in &s2 {
                    let pair = |x: &OLabel, px: &Process, y: &OLabel, py: &Process| match (x, y) {
                        (OLabel::In(a), OLabel::Out(b)) if a == b => Some((px.clone(), py.clone())),
                        (OLabel::Loc(a, q), OLabel::Upd(b, u)) if a == b => {
                            Some((px.replace_star(&fill(u, q)), py.clone()))
                        }
                        _ => None,
                    };
                    if let Some((a, b)) = pair(l1, q1, l2, q2) {
                        out.push((OLabel::Tau, Process::Par(vec![a, b])));
                    }
                    if let Some((b, a)) = pair(l2, q2, l1, q1) {
                        out.push((OLabel::Tau, Process::Par(vec![a, b])));
                    }
                }
            }
            out
        }
    }
}

fn olabel(pi: &Prefix) -> OLabel {
    match pi {
        Prefix::Input(a) => OLabel::In(a.clone()),
        Prefix::Output(a) => OLabel::Out(a.clone()),
        Prefix::Update(a, u) => OLabel::Upd(a.clone(), (**u).clone()),
    }
}

/// Barbs computed from the oracle's labels.
pub fn oracle_barbs(p: &Process) -> BTreeSet<Barb> {
    oracle_steps(p)
        .into_iter()
        .filter_map(|(l, _)| match l {
            OLabel::In(a) => Some(Barb::input(a)),
            OLabel::Out(a) => Some(Barb::output(a)),
            _ => None,
        })
        .collect()
}

/// Raw τ-reachable states (no canonical forms), or `None` past `cap` states.
pub fn oracle_reachable(p: &Process, cap: usize) -> Option<Vec<(Process, Vec<Process>)>> {
    let mut seen: HashSet<Process> = HashSet::from([p.clone()]);
    let mut order = vec![p.clone()];
    let mut out = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let s = order[k].clone();
        k += 1;
        let succ: Vec<Process> =
            oracle_steps(&s).into_iter().filter(|(l, _)| *l == OLabel::Tau).map(|(_, q)| q).collect();
        for q in &succ {
            if seen.insert(q.clone()) {
                if order.len() >= cap {
                    return None;
                }
                order.push(q.clone());
            }
        }
        out.push((s, succ));
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// BA / EA oracles by walk enumeration.

fn errors(g: &StateGraph, e: &Barb) -> Vec<bool> {
    (0..g.len()).map(|i| g.barbs[i].contains(e)).collect()
}

fn reachable(g: &StateGraph) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    let mut stack = vec![g.root];
    while let Some(i) = stack.pop() {
        if !seen[i] {
            seen[i] = true;
            stack.extend(g.succ[i].iter().copied());
        }
    }
    seen
}

// Whether an all-error walk of exactly `len` states starts at `x`.
fn error_walk(g: &StateGraph, err: &[bool], x: usize, len: usize) -> bool {
    if !err[x] {
        return false;
    }
    len <= 1 || g.succ[x].iter().any(|&y| error_walk(g, err, y, len - 1))
}

/// Longest run of consecutive error states is more than `k`.
pub fn oracle_ba_violated(g: &StateGraph, e: &Barb, k: usize) -> bool {
    let err = errors(g, e);
    let reach = reachable(g);
    (0..g.len()).any(|x| reach[x] && error_walk(g, &err, x, k + 1))
}

/// Some run ends in (or loops forever inside) error states.
pub fn oracle_ea_violated(g: &StateGraph, e: &Barb) -> bool {
    let err = errors(g, e);
    let reach = reachable(g);
    let n = g.len();
    // walk[x]: an all-error walk of `len` states starts at x
    let mut walk: Vec<bool> = err.clone();
    for _ in 1..=n {
        walk = (0..n).map(|x| err[x] && g.succ[x].iter().any(|&y| walk[y])).collect();
    }
    (0..n).any(|x| reach[x] && (walk[x] || (err[x] && g.succ[x].is_empty())))
}

/// Number of trailing consecutive error states on a path.
pub fn trailing_error_run(g: &StateGraph, e: &Barb, path: &[usize]) -> usize {
    path.iter().rev().take_while(|&&i| g.barbs[i].contains(e)).count()
}

pub fn is_path(g: &StateGraph, path: &[usize]) -> bool {
    path.first() == Some(&g.root) && path.windows(2).all(|w| g.succ[w[0]].contains(&w[1]))
}

// ---------------------------------------------------------------------------
// Model-checking oracle with an explicit closure matrix.

pub fn oracle_sat(g: &StateGraph, phi: &Formula) -> BTreeSet<usize> {
    let n = g.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for &j in &g.succ[i] {
            row[j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    eval(g, &reach, phi)
}

fn eval(g: &StateGraph, reach: &[Vec<bool>], phi: &Formula) -> BTreeSet<usize> {
    let n = g.len();
    let all: BTreeSet<usize> = (0..n).collect();
    match phi {
        Formula::True => all,
        Formula::Atom(b) => (0..n).filter(|&i| g.barbs[i].contains(b)).collect(),
        Formula::Or(a, b) => eval(g, reach, a).union(&eval(g, reach, b)).copied().collect(),
        Formula::And(a, b) => eval(g, reach, a).intersection(&eval(g, reach, b)).copied().collect(),
        Formula::Not(a) => all.difference(&eval(g, reach, a)).copied().collect(),
        Formula::Next(a) => {
            let s = eval(g, reach, a);
            (0..n).filter(|&i| g.succ[i].iter().any(|j| s.contains(j))).collect()
        }
        Formula::Ev(a) => {
            let s = eval(g, reach, a);
            (0..n).filter(|&i| s.iter().any(|&j| reach[i][j])).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Choreography trace oracle: bounded enumeration of complete traces.

/// All words `w √` of at most `max_len` interactions produced by `h`.
pub fn choreo_words(h: &Choreography, max_len: usize) -> BTreeSet<Vec<String>> {
    use evoverify_core::choreo::{choreo_transitions, ChoreoLabel};
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::from([(h.clone(), Vec::<String>::new())]);
    let mut seen: HashMap<(Choreography, Vec<String>), ()> = HashMap::new();
    while let Some((t, w)) = queue.pop_front() {
        for (l, t2) in choreo_transitions(&t) {
            if l == ChoreoLabel::Tick {
                let mut done = w.clone();
                done.push("√".into());
                out.insert(done);
            } else if w.len() < max_len {
                let mut w2 = w.clone();
                w2.push(l.to_string());
                if seen.insert((t2.clone(), w2.clone()), ()).is_none() {
                    queue.push_back((t2, w2));
                }
            }
        }
    }
    out
}

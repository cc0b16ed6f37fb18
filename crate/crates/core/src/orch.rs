//! Orchestrations (per-role behaviour), systems of located orchestrations,
//! their semantics, correct composition and the implementation relation.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automaton::{inclusion_counterexample, TraceAutomaton, TICK};
use crate::choreo::{choreo_transitions, ChoreoLabel, Choreography, OpName, Role, ScopeName};
use crate::verdict::{Status, Verdict};

/// Default bound on explored system / choreography states.
pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orchestration {
    /// Failed / finished without success.
    Zero,
    /// Successfully terminated.
    One,
    Tau,
    Receive(OpName),
    Send(OpName, Role),
    Seq(Box<Orchestration>, Box<Orchestration>),
    Choice(Box<Orchestration>, Box<Orchestration>),
    Par(Box<Orchestration>, Box<Orchestration>),
    Star(Box<Orchestration>),
    /// `X[C]`, or `X[C]@A` once started.
    Scope { name: ScopeName, body: Box<Orchestration>, active: bool },
    /// `X{(r1,..,rn): C1,..,Cn}`: new behaviour `Ci` for role `ri`.
    Update { scope: ScopeName, roles: Vec<Role>, bodies: Vec<Orchestration> },
}

impl Orchestration {
    pub fn seq(a: Self, b: Self) -> Self {
        Orchestration::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Self, b: Self) -> Self {
        Orchestration::Choice(Box::new(a), Box::new(b))
    }

    pub fn par(a: Self, b: Self) -> Self {
        Orchestration::Par(Box::new(a), Box::new(b))
    }

    pub fn star(a: Self) -> Self {
        Orchestration::Star(Box::new(a))
    }

    /// Drops `1` operands of `;` and `|`, re-associating both to the right,
    /// and folds `1 + 1` and `1*` to `1`.
    pub fn strip_units(&self) -> Orchestration {
        use Orchestration as C;
        match self {
            C::Seq(..) | C::Par(..) => {
                let is_seq = matches!(self, C::Seq(..));
                let mut items = Vec::new();
                self.flatten(is_seq, &mut items);
                let mut items: Vec<C> =
                    items.into_iter().map(|c| c.strip_units()).filter(|c| *c != C::One).collect();
                let Some(mut acc) = items.pop() else {
                    return C::One;
                };
                while let Some(prev) = items.pop() {
                    acc = if is_seq { C::seq(prev, acc) } else { C::par(prev, acc) };
                }
                acc
            }
            C::Choice(a, b) => match (a.strip_units(), b.strip_units()) {
                (C::One, C::One) => C::One,
                (a, b) => C::choice(a, b),
            },
            C::Star(a) => match a.strip_units() {
                C::One => C::One,
                a => C::star(a),
            },
            C::Scope { name, body, active } => {
                C::Scope { name: name.clone(), body: Box::new(body.strip_units()), active: *active }
            }
            C::Update { scope, roles, bodies } => C::Update {
                scope: scope.clone(),
                roles: roles.clone(),
                bodies: bodies.iter().map(|b| b.strip_units()).collect(),
            },
            other => other.clone(),
        }
    }

    /// `strip_units` followed by sorting the operands of every `|`, so that
    /// terms equal up to units and commutativity of `|` coincide.
    pub fn par_normal_form(&self) -> Orchestration {
        fn sort_par(c: &Orchestration) -> Orchestration {
            use Orchestration as C;
            match c {
                C::Par(..) => {
                    let mut items = Vec::new();
                    c.flatten(false, &mut items);
                    let mut items: Vec<C> = items.into_iter().map(sort_par).collect();
                    items.sort();
                    let mut acc = items.pop().expect("non-empty parallel");
                    while let Some(prev) = items.pop() {
                        acc = C::par(prev, acc);
                    }
                    acc
                }
                C::Seq(a, b) => C::seq(sort_par(a), sort_par(b)),
                C::Choice(a, b) => C::choice(sort_par(a), sort_par(b)),
                C::Star(a) => C::star(sort_par(a)),
                C::Scope { name, body, active } => {
                    C::Scope { name: name.clone(), body: Box::new(sort_par(body)), active: *active }
                }
                C::Update { scope, roles, bodies } => C::Update {
                    scope: scope.clone(),
                    roles: roles.clone(),
                    bodies: bodies.iter().map(sort_par).collect(),
                },
                other => other.clone(),
            }
        }
        sort_par(&self.strip_units())
    }

    fn flatten<'a>(&'a self, seq: bool, out: &mut Vec<&'a Orchestration>) {
        match (self, seq) {
            (Orchestration::Seq(a, b), true) | (Orchestration::Par(a, b), false) => {
                a.flatten(seq, out);
                b.flatten(seq, out);
            }
            _ => out.push(self),
        }
    }

    /// Whether a scope named `name` occurs outside update bodies, optionally
    /// restricted to a given activation flag.
    pub fn has_scope(&self, name: &str, active: Option<bool>) -> bool {
        use Orchestration as C;
        match self {
            C::Zero | C::One | C::Tau | C::Receive(_) | C::Send(..) | C::Update { .. } => false,
            C::Seq(a, b) | C::Choice(a, b) | C::Par(a, b) => {
                a.has_scope(name, active) || b.has_scope(name, active)
            }
            C::Star(a) => a.has_scope(name, active),
            C::Scope { name: n, body, active: f } => {
                (n == name && active.is_none_or(|want| want == *f)) || body.has_scope(name, active)
            }
        }
    }

    /// Replaces the body of every scope `name` (outside update bodies) with
    /// `body`, keeping the activation flag.
    pub fn substitute_scope(&self, name: &str, body: &Orchestration) -> Orchestration {
        use Orchestration as C;
        match self {
            C::Zero | C::One | C::Tau | C::Receive(_) | C::Send(..) | C::Update { .. } => self.clone(),
            C::Seq(a, b) => C::seq(a.substitute_scope(name, body), b.substitute_scope(name, body)),
            C::Choice(a, b) => C::choice(a.substitute_scope(name, body), b.substitute_scope(name, body)),
            C::Par(a, b) => C::par(a.substitute_scope(name, body), b.substitute_scope(name, body)),
            C::Star(a) => C::star(a.substitute_scope(name, body)),
            C::Scope { name: n, body: inner, active } => {
                let new_body = if n == name { body.clone() } else { inner.substitute_scope(name, body) };
                C::Scope { name: n.clone(), body: Box::new(new_body), active: *active }
            }
        }
    }

    /// Outputs addressed to `role`, update bodies for `role` included.
    pub(crate) fn sends_to(&self, role: &str) -> Option<OpName> {
        use Orchestration as C;
        match self {
            C::Send(op, to) if to == role => Some(op.clone()),
            C::Zero | C::One | C::Tau | C::Receive(_) | C::Send(..) => None,
            C::Seq(a, b) | C::Choice(a, b) | C::Par(a, b) => a.sends_to(role).or_else(|| b.sends_to(role)),
            C::Star(a) => a.sends_to(role),
            C::Scope { body, .. } => body.sends_to(role),
            C::Update { roles, bodies, .. } => roles
                .iter()
                .zip(bodies)
                .find_map(|(r, b)| if r == role { b.sends_to(role) } else { None }),
        }
    }
}

/// Labels of a single orchestration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrchLabel {
    Tick,
    Tau,
    Receive(OpName),
    Send(OpName, Role),
    Start(ScopeName),
    End(ScopeName),
    Update { scope: ScopeName, roles: Vec<Role>, bodies: Vec<Orchestration> },
}

impl fmt::Display for OrchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrchLabel::Tick => write!(f, "√"),
            OrchLabel::Tau => write!(f, "tau"),
            OrchLabel::Receive(a) => write!(f, "{a}?"),
            OrchLabel::Send(a, s) => write!(f, "{a}!{s}"),
            OrchLabel::Start(x) => write!(f, "start {x}"),
            OrchLabel::End(x) => write!(f, "end {x}"),
            OrchLabel::Update { scope, roles, bodies } => {
                write!(f, "{}", Orchestration::Update { scope: scope.clone(), roles: roles.clone(), bodies: bodies.clone() })
            }
        }
    }
}

/// One-step transitions of an orchestration.
pub fn orch_transitions(c: &Orchestration) -> Vec<(OrchLabel, Orchestration)> {
    use Orchestration as C;
    let mut out = Vec::new();
    match c {
        C::Zero => {}
        C::One => out.push((OrchLabel::Tick, C::Zero)),
        C::Tau => out.push((OrchLabel::Tau, C::One)),
        C::Receive(a) => out.push((OrchLabel::Receive(a.clone()), C::One)),
        C::Send(a, s) => out.push((OrchLabel::Send(a.clone(), s.clone()), C::One)),
        C::Update { scope, roles, bodies } => out.push((
            OrchLabel::Update { scope: scope.clone(), roles: roles.clone(), bodies: bodies.clone() },
            C::One,
        )),
        C::Choice(a, b) => {
            out.extend(orch_transitions(a));
            out.extend(orch_transitions(b));
        }
        C::Seq(a, b) => {
            for (l, a2) in orch_transitions(a) {
                if l == OrchLabel::Tick {
                    out.extend(orch_transitions(b));
                } else {
                    out.push((l, C::seq(a2, (**b).clone())));
                }
            }
        }
        C::Par(a, b) => {
            let ta = orch_transitions(a);
            let tb = orch_transitions(b);
            for (l, a2) in &ta {
                if *l == OrchLabel::Tick {
                    for (m, b2) in &tb {
                        if *m == OrchLabel::Tick {
                            out.push((OrchLabel::Tick, C::par(a2.clone(), b2.clone())));
                        }
                    }
                } else {
                    out.push((l.clone(), C::par(a2.clone(), (**b).clone())));
                }
            }
            for (l, b2) in tb {
                if l != OrchLabel::Tick {
                    out.push((l, C::par((**a).clone(), b2)));
                }
            }
        }
        C::Star(a) => {
            out.push((OrchLabel::Tick, C::Zero));
            for (l, a2) in orch_transitions(a) {
                if l != OrchLabel::Tick {
                    out.push((l, C::seq(a2, C::Star(a.clone()))));
                }
            }
        }
        C::Scope { name, body, active: false } => out.push((
            OrchLabel::Start(name.clone()),
            C::Scope { name: name.clone(), body: body.clone(), active: true },
        )),
        C::Scope { name, body, active: true } => {
            for (l, b2) in orch_transitions(body) {
                if l == OrchLabel::Tick {
                    out.push((OrchLabel::End(name.clone()), C::One));
                } else {
                    out.push((l, C::Scope { name: name.clone(), body: Box::new(b2), active: true }));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Parallel composition of orchestrations, each located at a distinct role.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct System {
    pub roles: Vec<(Role, Orchestration)>,
}

impl System {
    pub fn new(roles: Vec<(Role, Orchestration)>) -> Self {
        System { roles }
    }

    pub fn get(&self, role: &str) -> Option<&Orchestration> {
        self.roles.iter().find(|(r, _)| r == role).map(|(_, c)| c)
    }

    pub fn strip_units(&self) -> System {
        System { roles: self.roles.iter().map(|(r, c)| (r.clone(), c.strip_units())).collect() }
    }

    /// Roles sorted, each orchestration in [`Orchestration::par_normal_form`].
    pub fn normal_form(&self) -> System {
        let mut roles: Vec<(Role, Orchestration)> =
            self.roles.iter().map(|(r, c)| (r.clone(), c.par_normal_form())).collect();
        roles.sort();
        System { roles }
    }

    fn with(&self, idx: usize, c: Orchestration) -> System {
        let mut next = self.clone();
        next.roles[idx].1 = c;
        next
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SysLabel {
    Tau,
    Tick,
    Completed { op: OpName, from: Role, to: Role },
    /// Unmatched input `a` at role `at`.
    PendingIn { op: OpName, at: Role },
    /// Unmatched output `a` from `from` to `to`.
    PendingOut { op: OpName, from: Role, to: Role },
    /// Synchronised activation of every scope named `X`; silent.
    ScopeStart(ScopeName),
    /// Synchronised removal of every active scope `X`; silent.
    ScopeEnd(ScopeName),
    Update { scope: ScopeName, by: Role, roles: Vec<Role>, bodies: Vec<Orchestration> },
}

impl SysLabel {
    /// Labels observable on a completely specified system.
    pub fn is_closed(&self) -> bool {
        !matches!(self, SysLabel::PendingIn { .. } | SysLabel::PendingOut { .. })
    }

    /// Labels abstracted away by weak traces.
    pub fn is_silent(&self) -> bool {
        matches!(self, SysLabel::Tau | SysLabel::ScopeStart(_) | SysLabel::ScopeEnd(_))
    }
}

impl fmt::Display for SysLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SysLabel::Tau => write!(f, "tau"),
            SysLabel::Tick => write!(f, "√"),
            SysLabel::Completed { op, from, to } => write!(f, "{op}:{from}->{to}"),
            SysLabel::PendingIn { op, at } => write!(f, "{op}?@{at}"),
            SysLabel::PendingOut { op, from, to } => write!(f, "{op}!{to}@{from}"),
            SysLabel::ScopeStart(x) => write!(f, "start {x}"),
            SysLabel::ScopeEnd(x) => write!(f, "end {x}"),
            SysLabel::Update { scope, by, roles, bodies } => write!(
                f,
                "{}@{by}",
                Orchestration::Update { scope: scope.clone(), roles: roles.clone(), bodies: bodies.clone() }
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrchError {
    #[error("update on scope `{scope}` does not cover role `{role}`, which holds a scope `{scope}`")]
    RoleMismatch { scope: ScopeName, role: Role },
    #[error("state space exceeds the safety cap of {0} states")]
    StateBound(usize),
}

/// Replaces the scope bodies of `scope` at every listed role. Fails if some
/// role holding a scope `scope` is not listed; returns `None` when no role
/// holds such a scope (the update has no target).
pub fn apply_system_update(
    sys: &System,
    scope: &str,
    roles: &[Role],
    bodies: &[Orchestration],
) -> Result<Option<System>, OrchError> {
    let holders: Vec<&Role> =
        sys.roles.iter().filter(|(_, c)| c.has_scope(scope, None)).map(|(r, _)| r).collect();
    if holders.is_empty() {
        return Ok(None);
    }
    if let Some(missing) = holders.iter().find(|r| !roles.contains(r)) {
        return Err(OrchError::RoleMismatch { scope: scope.to_string(), role: (*missing).clone() });
    }
    let mut next = sys.clone();
    for (role, body) in roles.iter().zip(bodies) {
        if let Some(entry) = next.roles.iter_mut().find(|(r, _)| r == role) {
            entry.1 = entry.1.substitute_scope(scope, body);
        }
    }
    Ok(Some(next))
}

/// All transitions of a system, pending (unmatched) actions included.
pub fn system_transitions(sys: &System) -> Result<Vec<(SysLabel, System)>, OrchError> {
    let local: Vec<Vec<(OrchLabel, Orchestration)>> =
        sys.roles.iter().map(|(_, c)| orch_transitions(c)).collect();
    let mut out = Vec::new();

    for (i, (role, _)) in sys.roles.iter().enumerate() {
        for (l, c2) in &local[i] {
            match l {
                OrchLabel::Tau => out.push((SysLabel::Tau, sys.with(i, c2.clone()))),
                OrchLabel::Receive(a) => out.push((
                    SysLabel::PendingIn { op: a.clone(), at: role.clone() },
                    sys.with(i, c2.clone()),
                )),
                OrchLabel::Send(a, to) => {
                    out.push((
                        SysLabel::PendingOut { op: a.clone(), from: role.clone(), to: to.clone() },
                        sys.with(i, c2.clone()),
                    ));
                    let Some(j) = sys.roles.iter().position(|(r, _)| r == to) else {
                        continue;
                    };
                    if j == i {
                        continue;
                    }
                    for (m, d2) in &local[j] {
                        if *m == OrchLabel::Receive(a.clone()) {
                            let next = sys.with(i, c2.clone()).with(j, d2.clone());
                            out.push((
                                SysLabel::Completed { op: a.clone(), from: role.clone(), to: to.clone() },
                                next,
                            ));
                        }
                    }
                }
                OrchLabel::Update { scope, roles, bodies } => {
                    if let Some(next) = apply_system_update(&sys.with(i, c2.clone()), scope, roles, bodies)? {
                        out.push((
                            SysLabel::Update {
                                scope: scope.clone(),
                                by: role.clone(),
                                roles: roles.clone(),
                                bodies: bodies.clone(),
                            },
                            next,
                        ));
                    }
                }
                OrchLabel::Tick | OrchLabel::Start(_) | OrchLabel::End(_) => {}
            }
        }
    }

    // global √: every role ticks
    if sys.roles.is_empty() {
        // the empty system behaves as `1`
        out.push((SysLabel::Tick, sys.clone()));
    } else if let Some(next) = synchronise(sys, &local, |_, _| true, |l| *l == OrchLabel::Tick) {
        out.extend(next.into_iter().map(|s| (SysLabel::Tick, s)));
    }

    let mut scope_names = BTreeSet::new();
    for ts in &local {
        for (l, _) in ts {
            if let OrchLabel::Start(x) | OrchLabel::End(x) = l {
                scope_names.insert(x.clone());
            }
        }
    }
    for x in scope_names {
        let starts = synchronise(
            sys,
            &local,
            |_, c| c.has_scope(&x, Some(false)),
            |l| matches!(l, OrchLabel::Start(y) if *y == x),
        );
        if let Some(next) = starts {
            out.extend(next.into_iter().map(|s| (SysLabel::ScopeStart(x.clone()), s)));
        }
        let ends = synchronise(
            sys,
            &local,
            |_, c| c.has_scope(&x, Some(true)),
            |l| matches!(l, OrchLabel::End(y) if *y == x),
        );
        if let Some(next) = ends {
            out.extend(next.into_iter().map(|s| (SysLabel::ScopeEnd(x.clone()), s)));
        }
    }

    out.sort();
    out.dedup();
    Ok(out)
}

// Joint step of every participating role (as selected by `participates`)
// on a label matching `fires`. `None` if there is no participant or some
// participant cannot fire.
fn synchronise(
    sys: &System,
    local: &[Vec<(OrchLabel, Orchestration)>],
    participates: impl Fn(&Role, &Orchestration) -> bool,
    fires: impl Fn(&OrchLabel) -> bool,
) -> Option<Vec<System>> {
    let mut results = vec![sys.clone()];
    let mut any = false;
    for (i, (role, c)) in sys.roles.iter().enumerate() {
        if !participates(role, c) {
            continue;
        }
        any = true;
        let moves: Vec<&Orchestration> =
            local[i].iter().filter(|(l, _)| fires(l)).map(|(_, c2)| c2).collect();
        if moves.is_empty() {
            return None;
        }
        results = results
            .iter()
            .flat_map(|s| moves.iter().map(move |c2| s.with(i, (*c2).clone())))
            .collect();
    }
    any.then_some(results)
}

/// Closed-system transitions: no pending actions.
pub fn closed_transitions(sys: &System) -> Result<Vec<(SysLabel, System)>, OrchError> {
    Ok(system_transitions(sys)?.into_iter().filter(|(l, _)| l.is_closed()).collect())
}

/// Explored closed-system state graph. `√` transitions are recorded as
/// `can_tick` rather than as edges: the state reached by `√` has terminated.
#[derive(Clone, Debug)]
pub struct SystemGraph {
    pub states: Vec<System>,
    pub edges: Vec<Vec<(SysLabel, usize)>>,
    pub can_tick: Vec<bool>,
    pub parent: Vec<Option<(usize, SysLabel)>>,
}

impl SystemGraph {
    /// Labels and states on the BFS-tree path from the root to `target`.
    pub fn path_to(&self, target: usize) -> (Vec<usize>, Vec<SysLabel>) {
        let mut states = vec![target];
        let mut labels = Vec::new();
        let mut cur = target;
        while let Some((prev, l)) = &self.parent[cur] {
            labels.push(l.clone());
            states.push(*prev);
            cur = *prev;
        }
        states.reverse();
        labels.reverse();
        (states, labels)
    }
}

pub fn explore_system(sys: &System, cap: usize) -> Result<SystemGraph, OrchError> {
    let mut g = SystemGraph { states: Vec::new(), edges: Vec::new(), can_tick: Vec::new(), parent: Vec::new() };
    let mut index: HashMap<System, usize> = HashMap::new();
    index.insert(sys.clone(), 0);
    g.states.push(sys.clone());
    g.parent.push(None);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut edges = Vec::new();
        let mut tick = false;
        for (l, next) in closed_transitions(&g.states[i])? {
            if l == SysLabel::Tick {
                tick = true;
                continue;
            }
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if g.states.len() >= cap {
                        return Err(OrchError::StateBound(cap));
                    }
                    let j = g.states.len();
                    index.insert(next.clone(), j);
                    g.states.push(next);
                    g.parent.push(Some((i, l.clone())));
                    queue.push_back(j);
                    j
                }
            };
            edges.push((l, j));
        }
        g.edges.push(edges);
        g.can_tick.push(tick);
    }
    Ok(g)
}

fn label_symbol(l: &SysLabel) -> Option<String> {
    if l.is_silent() {
        None
    } else {
        Some(l.to_string())
    }
}

/// Correct composition: from every reachable state a `√`-enabled state stays reachable.
pub fn check_correct_composition(sys: &System) -> Result<Verdict, OrchError> {
    check_correct_composition_capped(sys, DEFAULT_STATE_CAP)
}

pub fn check_correct_composition_capped(sys: &System, cap: usize) -> Result<Verdict, OrchError> {
    let g = explore_system(sys, cap)?;
    Ok(correct_composition_on(&g))
}

fn correct_composition_on(g: &SystemGraph) -> Verdict {
    let n = g.states.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, es) in g.edges.iter().enumerate() {
        for (_, j) in es {
            preds[*j].push(i);
        }
    }
    let mut good = g.can_tick.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&i| good[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &preds[j] {
            if !good[i] {
                good[i] = true;
                stack.push(i);
            }
        }
    }
    // states are numbered in BFS order, so the first bad one is closest to the root
    match (0..n).find(|&i| !good[i]) {
        None => Verdict::new("correct-composition", Status::Holds, n, true)
            .with_reason("every reachable state can still reach successful termination"),
        Some(bad) => {
            let (path, labels) = g.path_to(bad);
            Verdict::new("correct-composition", Status::Violated, n, true)
                .with_witness(path)
                .with_trace(labels.iter().map(|l| l.to_string()).collect())
                .with_reason(format!("state `{}` can no longer terminate successfully", g.states[bad]))
        }
    }
}

/// Weak completed-interaction traces of a system, each ending in `√`.
pub fn system_automaton(g: &SystemGraph) -> TraceAutomaton {
    let mut a = TraceAutomaton::new();
    for _ in 0..g.states.len() {
        a.add_state(false);
    }
    let done = a.add_state(true);
    a.initial = 0;
    for (i, es) in g.edges.iter().enumerate() {
        for (l, j) in es {
            a.add_transition(i, label_symbol(l), *j);
        }
        if g.can_tick[i] {
            a.add_transition(i, Some(TICK.to_string()), done);
        }
    }
    a
}

/// Traces of a choreography, each ending in `√`.
pub fn choreography_automaton(h: &Choreography, cap: usize) -> Result<TraceAutomaton, OrchError> {
    choreography_automaton_with(h, cap, &|l: &ChoreoLabel| l.to_string())
}

/// As [`choreography_automaton`], rendering labels with `symbol`.
pub fn choreography_automaton_with(
    h: &Choreography,
    cap: usize,
    symbol: &dyn Fn(&ChoreoLabel) -> String,
) -> Result<TraceAutomaton, OrchError> {
    let mut a = TraceAutomaton::new();
    let mut index: HashMap<Choreography, usize> = HashMap::new();
    let mut terms = vec![h.clone()];
    index.insert(h.clone(), a.add_state(false));
    a.initial = 0;
    let done = usize::MAX;
    let mut pending: Vec<(usize, Option<String>, usize)> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (l, next) in choreo_transitions(&terms[i]) {
            if l == ChoreoLabel::Tick {
                pending.push((i, Some(TICK.to_string()), done));
                continue;
            }
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if terms.len() >= cap {
                        return Err(OrchError::StateBound(cap));
                    }
                    let j = a.add_state(false);
                    index.insert(next.clone(), j);
                    terms.push(next);
                    queue.push_back(j);
                    j
                }
            };
            pending.push((i, Some(symbol(&l)), j));
        }
    }
    let accept = a.add_state(true);
    for (i, sym, j) in pending {
        a.add_transition(i, sym, if j == done { accept } else { j });
    }
    Ok(a)
}

/// `P` implements `H`: `P` is a correct composition and every weak
/// `w √` trace of `P` is a trace of `H`.
pub fn check_implements(sys: &System, h: &Choreography) -> Result<Verdict, OrchError> {
    check_implements_capped(sys, h, DEFAULT_STATE_CAP)
}

pub fn check_implements_capped(sys: &System, h: &Choreography, cap: usize) -> Result<Verdict, OrchError> {
    let g = explore_system(sys, cap)?;
    let cc = correct_composition_on(&g);
    if cc.status == Status::Violated {
        let reason = format!("not a correct composition: {}", cc.reason);
        return Ok(Verdict { property: "implements".into(), reason, ..cc });
    }
    let sub = system_automaton(&g);
    let sup = choreography_automaton(h, cap)?;
    let n = g.states.len();
    Ok(match inclusion_counterexample(&sub, &sup) {
        None => Verdict::new("implements", Status::Holds, n, true)
            .with_reason("correct composition and trace inclusion hold"),
        Some(word) => {
            let path = witness_path(&g, &word);
            Verdict::new("implements", Status::Violated, n, true)
                .with_witness(path)
                .with_reason(format!("conversation `{}` is not admitted by the choreography", word.join(" ")))
                .with_trace(word)
        }
    })
}

// A run of the system graph producing `word` (silent moves interleaved).
fn witness_path(g: &SystemGraph, word: &[String]) -> Vec<usize> {
    // BFS over (state, position in word)
    let mut parent: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut seen = BTreeSet::from([(0usize, 0usize)]);
    let mut goal = None;
    while let Some((s, k)) = queue.pop_front() {
        if k + 1 == word.len() && word[k] == TICK && g.can_tick[s] {
            goal = Some((s, k));
            break;
        }
        for (l, t) in &g.edges[s] {
            let next = match label_symbol(l) {
                None => (*t, k),
                Some(sym) if k < word.len() && word[k] == sym => (*t, k + 1),
                Some(_) => continue,
            };
            if seen.insert(next) {
                parent.insert(next, (s, k));
                queue.push_back(next);
            }
        }
    }
    let Some(mut cur) = goal else {
        return vec![0];
    };
    let mut path = vec![cur.0];
    while let Some(&prev) = parent.get(&cur) {
        path.push(prev.0);
        cur = prev;
    }
    path.reverse();
    path
}

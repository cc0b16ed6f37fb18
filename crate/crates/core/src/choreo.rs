//! Choreographies: global descriptions of interactions `a:r->s` composed by
//! sequence, choice, parallel and Kleene star, optionally with named scopes
//! `X:{roles}[H]` and internal updates `X{r: H}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::orch::{Orchestration, System};
use crate::update::substitute_scope;

pub type Role = String;
pub type ScopeName = String;
pub type OpName = String;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choreography {
    /// Completed (no further behaviour).
    Zero,
    /// Successfully terminated.
    One,
    Interaction { op: OpName, from: Role, to: Role },
    Seq(Box<Choreography>, Box<Choreography>),
    Choice(Box<Choreography>, Box<Choreography>),
    Par(Box<Choreography>, Box<Choreography>),
    Star(Box<Choreography>),
    Scope { name: ScopeName, roles: BTreeSet<Role>, body: Box<Choreography> },
    Update { scope: ScopeName, role: Role, body: Box<Choreography> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChoreoLabel {
    Interaction { op: OpName, from: Role, to: Role },
    Tick,
    Update { scope: ScopeName, role: Role, body: Choreography },
}

impl fmt::Display for ChoreoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoreoLabel::Interaction { op, from, to } => write!(f, "{op}:{from}->{to}"),
            ChoreoLabel::Tick => write!(f, "√"),
            ChoreoLabel::Update { scope, role, body } => write!(f, "{scope}{{{role}: {body}}}"),
        }
    }
}

impl Choreography {
    pub fn interaction(op: &str, from: &str, to: &str) -> Self {
        Choreography::Interaction { op: op.into(), from: from.into(), to: to.into() }
    }

    pub fn seq(a: Self, b: Self) -> Self {
        Choreography::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Self, b: Self) -> Self {
        Choreography::Choice(Box::new(a), Box::new(b))
    }

    pub fn par(a: Self, b: Self) -> Self {
        Choreography::Par(Box::new(a), Box::new(b))
    }

    pub fn star(a: Self) -> Self {
        Choreography::Star(Box::new(a))
    }

    /// Every role mentioned: interaction endpoints, scope types and updating roles.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.visit(&mut |h| match h {
            Choreography::Interaction { from, to, .. } => {
                out.insert(from.clone());
                out.insert(to.clone());
            }
            Choreography::Scope { roles, .. } => out.extend(roles.iter().cloned()),
            Choreography::Update { role, .. } => {
                out.insert(role.clone());
            }
            _ => {}
        });
        out
    }

    /// Operation names of all interactions.
    pub fn ops(&self) -> BTreeSet<OpName> {
        let mut out = BTreeSet::new();
        self.visit(&mut |h| {
            if let Choreography::Interaction { op, .. } = h {
                out.insert(op.clone());
            }
        });
        out
    }

    /// True if the term uses scopes or updates.
    pub fn has_updates(&self) -> bool {
        let mut found = false;
        self.visit(&mut |h| {
            found |= matches!(h, Choreography::Scope { .. } | Choreography::Update { .. });
        });
        found
    }

    /// Pre-order traversal, entering update bodies as well.
    pub fn visit(&self, f: &mut dyn FnMut(&Choreography)) {
        f(self);
        match self {
            Choreography::Zero | Choreography::One | Choreography::Interaction { .. } => {}
            Choreography::Seq(a, b) | Choreography::Choice(a, b) | Choreography::Par(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Choreography::Star(a) => a.visit(f),
            Choreography::Scope { body, .. } | Choreography::Update { body, .. } => body.visit(f),
        }
    }

    /// `type(X)` for every scope name occurring in the term. The first
    /// occurrence wins when types disagree (see `validate_updatable`).
    pub fn scope_types(&self) -> BTreeMap<ScopeName, BTreeSet<Role>> {
        let mut out = BTreeMap::new();
        self.visit(&mut |h| {
            if let Choreography::Scope { name, roles, .. } = h {
                out.entry(name.clone()).or_insert_with(|| roles.clone());
            }
        });
        out
    }

    /// Removes units that do not affect behaviour: `1` operands of `;` and
    /// `|`, and `1 + 1` or `1*` as a whole. Sequences and parallels are
    /// re-associated to the right.
    pub fn strip_units(&self) -> Choreography {
        match self {
            Choreography::Seq(..) => {
                let mut items = Vec::new();
                self.flatten_seq(&mut items);
                let items: Vec<_> = items
                    .into_iter()
                    .map(|h| h.strip_units())
                    .filter(|h| *h != Choreography::One)
                    .collect();
                rebuild(items, Choreography::seq)
            }
            Choreography::Par(..) => {
                let mut items = Vec::new();
                self.flatten_par(&mut items);
                let items: Vec<_> = items
                    .into_iter()
                    .map(|h| h.strip_units())
                    .filter(|h| *h != Choreography::One)
                    .collect();
                rebuild(items, Choreography::par)
            }
            Choreography::Choice(a, b) => match (a.strip_units(), b.strip_units()) {
                (Choreography::One, Choreography::One) => Choreography::One,
                (a, b) => Choreography::choice(a, b),
            },
            Choreography::Star(a) => match a.strip_units() {
                Choreography::One => Choreography::One,
                a => Choreography::star(a),
            },
            Choreography::Scope { name, roles, body } => Choreography::Scope {
                name: name.clone(),
                roles: roles.clone(),
                body: Box::new(body.strip_units()),
            },
            Choreography::Update { scope, role, body } => Choreography::Update {
                scope: scope.clone(),
                role: role.clone(),
                body: Box::new(body.strip_units()),
            },
            other => other.clone(),
        }
    }

    fn flatten_seq<'a>(&'a self, out: &mut Vec<&'a Choreography>) {
        match self {
            Choreography::Seq(a, b) => {
                a.flatten_seq(out);
                b.flatten_seq(out);
            }
            other => out.push(other),
        }
    }

    fn flatten_par<'a>(&'a self, out: &mut Vec<&'a Choreography>) {
        match self {
            Choreography::Par(a, b) => {
                a.flatten_par(out);
                b.flatten_par(out);
            }
            other => out.push(other),
        }
    }
}

fn rebuild(mut items: Vec<Choreography>, op: fn(Choreography, Choreography) -> Choreography) -> Choreography {
    let Some(mut acc) = items.pop() else {
        return Choreography::One;
    };
    while let Some(prev) = items.pop() {
        acc = op(prev, acc);
    }
    acc
}

/// One-step transitions of a choreography, scopes and updates included.
pub fn choreo_transitions(h: &Choreography) -> Vec<(ChoreoLabel, Choreography)> {
    let mut out = Vec::new();
    derive(h, &mut out);
    out.sort();
    out.dedup();
    out
}

fn derive(h: &Choreography, out: &mut Vec<(ChoreoLabel, Choreography)>) {
    use Choreography as H;
    match h {
        H::Zero => {}
        H::One => out.push((ChoreoLabel::Tick, H::Zero)),
        H::Interaction { op, from, to } => out.push((
            ChoreoLabel::Interaction { op: op.clone(), from: from.clone(), to: to.clone() },
            H::One,
        )),
        H::Update { scope, role, body } => out.push((
            ChoreoLabel::Update { scope: scope.clone(), role: role.clone(), body: (**body).clone() },
            H::One,
        )),
        H::Choice(a, b) => {
            derive(a, out);
            derive(b, out);
        }
        H::Seq(a, b) => {
            for (eta, a2) in choreo_transitions(a) {
                match &eta {
                    ChoreoLabel::Tick => {
                        for (eta2, b2) in choreo_transitions(b) {
                            out.push((eta2, b2));
                        }
                    }
                    ChoreoLabel::Update { scope, body, .. } => {
                        let rest = substitute_scope(b, scope, body);
                        out.push((eta.clone(), H::seq(a2, rest)));
                    }
                    ChoreoLabel::Interaction { .. } => out.push((eta, H::seq(a2, (**b).clone()))),
                }
            }
        }
        H::Par(a, b) => {
            let ta = choreo_transitions(a);
            let tb = choreo_transitions(b);
            for (eta, a2) in &ta {
                match eta {
                    ChoreoLabel::Tick => {
                        for (eta2, b2) in &tb {
                            if *eta2 == ChoreoLabel::Tick {
                                out.push((ChoreoLabel::Tick, H::par(a2.clone(), b2.clone())));
                            }
                        }
                    }
                    ChoreoLabel::Update { scope, body, .. } => {
                        out.push((eta.clone(), H::par(a2.clone(), substitute_scope(b, scope, body))));
                    }
                    ChoreoLabel::Interaction { .. } => {
                        out.push((eta.clone(), H::par(a2.clone(), (**b).clone())));
                    }
                }
            }
            for (eta, b2) in tb {
                match &eta {
                    ChoreoLabel::Tick => {}
                    ChoreoLabel::Update { scope, body, .. } => {
                        out.push((eta.clone(), H::par(substitute_scope(a, scope, body), b2)));
                    }
                    ChoreoLabel::Interaction { .. } => out.push((eta, H::par((**a).clone(), b2))),
                }
            }
        }
        H::Star(a) => {
            out.push((ChoreoLabel::Tick, H::Zero));
            for (eta, a2) in choreo_transitions(a) {
                match &eta {
                    ChoreoLabel::Tick => {}
                    ChoreoLabel::Update { scope, body, .. } => {
                        let again = H::star(substitute_scope(a, scope, body));
                        out.push((eta.clone(), H::seq(a2, again)));
                    }
                    ChoreoLabel::Interaction { .. } => {
                        out.push((eta, H::seq(a2, H::Star(a.clone()))));
                    }
                }
            }
        }
        H::Scope { name, roles, body } => {
            for (eta, b2) in choreo_transitions(body) {
                let new_body = match &eta {
                    // the scope replaces its own body with the injected one
                    ChoreoLabel::Update { scope, body: injected, .. } if scope == name => injected.clone(),
                    _ => b2,
                };
                out.push((
                    eta,
                    H::Scope { name: name.clone(), roles: roles.clone(), body: Box::new(new_body) },
                ));
            }
        }
    }
}

/// Projection of `h` on role `r`: interactions become sends, receives or `1`,
/// every operator is mapped homomorphically. Scopes are kept only at roles
/// in their type; updates become orchestration updates at the offering role.
pub fn project(h: &Choreography, r: &str) -> Orchestration {
    let types = h.scope_types();
    project_with(h, r, &types)
}

/// `[⟦H⟧_r1]@r1 || ... || [⟦H⟧_rn]@rn` over the roles of `h`, in sorted order.
pub fn project_system(h: &Choreography) -> System {
    let types = h.scope_types();
    System::new(h.roles().into_iter().map(|r| {
        let c = project_with(h, &r, &types);
        (r, c)
    }).collect())
}

pub(crate) fn project_with(
    h: &Choreography,
    r: &str,
    types: &BTreeMap<ScopeName, BTreeSet<Role>>,
) -> Orchestration {
    use Choreography as H;
    use Orchestration as C;
    match h {
        H::Zero => C::Zero,
        H::One => C::One,
        H::Interaction { op, from, to } => {
            if from == r {
                C::Send(op.clone(), to.clone())
            } else if to == r {
                C::Receive(op.clone())
            } else {
                C::One
            }
        }
        H::Seq(a, b) => C::seq(project_with(a, r, types), project_with(b, r, types)),
        H::Choice(a, b) => C::choice(project_with(a, r, types), project_with(b, r, types)),
        H::Par(a, b) => C::par(project_with(a, r, types), project_with(b, r, types)),
        H::Star(a) => C::star(project_with(a, r, types)),
        H::Scope { name, roles, body } => {
            if roles.contains(r) {
                C::Scope { name: name.clone(), body: Box::new(project_with(body, r, types)), active: false }
            } else {
                C::One
            }
        }
        H::Update { scope, role, body } => {
            if role != r {
                return C::One;
            }
            let targets: Vec<Role> = match types.get(scope) {
                Some(t) => t.iter().cloned().collect(),
                None => body.roles().into_iter().collect(),
            };
            let inner_types = {
                let mut t = types.clone();
                for (k, v) in body.scope_types() {
                    t.entry(k).or_insert(v);
                }
                t
            };
            let bodies = targets.iter().map(|ri| project_with(body, ri, &inner_types)).collect();
            C::Update { scope: scope.clone(), roles: targets, bodies }
        }
    }
}

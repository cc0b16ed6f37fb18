//! Syntactic connectedness conditions on choreographies and the semantic
//! well-formedness check they approximate.
//!
//! * sequence: in `H1 ; H2`, for every interaction `l` that can come last in
//!   `H1` and `f` that can come first in `H2`, either the sender of `f` takes
//!   part in `l`, or the receiver of `f` does and only ever receives the
//!   operation of `f` from that sender; `H*` treats its body as followed by
//!   itself and may only occur where nothing follows it, since roles leave a
//!   loop independently;
//! * unique point of choice: in `H1 + H2`, both branches are non-nullable,
//!   start with sends of one common role `r`, use disjoint operation names
//!   and the same roles, and every other role starts each branch with a
//!   receive;
//! * no interference: the operands of `|` use disjoint operation names.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::choreo::{project, project_system, Choreography, OpName, Role};
use crate::orch::{check_implements, orch_transitions, OrchError, OrchLabel};
use crate::verdict::Verdict;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnectednessError {
    #[error("connectedness is defined for choreographies without scopes and updates")]
    UnsupportedConstruct,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConnectednessReport {
    pub seq: bool,
    pub choice: bool,
    pub interference: bool,
    /// One line per failing subterm.
    pub witnesses: Vec<String>,
}

impl ConnectednessReport {
    pub fn connected(&self) -> bool {
        self.seq && self.choice && self.interference
    }
}

type Interaction = (OpName, Role, Role);

// First/last interactions and nullability (can terminate without interacting).
struct Shape {
    first: BTreeSet<Interaction>,
    last: BTreeSet<Interaction>,
    nullable: bool,
}

fn shape(h: &Choreography) -> Shape {
    use Choreography as H;
    match h {
        H::Zero => Shape { first: BTreeSet::new(), last: BTreeSet::new(), nullable: false },
        H::One => Shape { first: BTreeSet::new(), last: BTreeSet::new(), nullable: true },
        H::Interaction { op, from, to } => {
            let i = BTreeSet::from([(op.clone(), from.clone(), to.clone())]);
            Shape { first: i.clone(), last: i, nullable: false }
        }
        H::Seq(a, b) => {
            let (sa, sb) = (shape(a), shape(b));
            let mut first = sa.first;
            if sa.nullable {
                first.extend(sb.first);
            }
            let mut last = sb.last;
            if sb.nullable {
                last.extend(sa.last);
            }
            Shape { first, last, nullable: sa.nullable && sb.nullable }
        }
        H::Choice(a, b) | H::Par(a, b) => {
            let (sa, sb) = (shape(a), shape(b));
            let nullable =
                if matches!(h, H::Choice(..)) { sa.nullable || sb.nullable } else { sa.nullable && sb.nullable };
            Shape {
                first: sa.first.union(&sb.first).cloned().collect(),
                last: sa.last.union(&sb.last).cloned().collect(),
                nullable,
            }
        }
        H::Star(a) => {
            let s = shape(a);
            Shape { first: s.first, last: s.last, nullable: true }
        }
        H::Scope { body, .. } | H::Update { body, .. } => shape(body),
    }
}

fn interactions(h: &Choreography) -> BTreeSet<Interaction> {
    let mut out = BTreeSet::new();
    h.visit(&mut |t| {
        if let Choreography::Interaction { op, from, to } = t {
            out.insert((op.clone(), from.clone(), to.clone()));
        }
    });
    out
}

fn show(i: &Interaction) -> String {
    format!("{}:{}->{}", i.0, i.1, i.2)
}

// Labels `q` can perform first in its part of `h`.
fn initial_actions(h: &Choreography, q: &str) -> Vec<OrchLabel> {
    orch_transitions(&project(h, q)).into_iter().map(|(l, _)| l).collect()
}

pub fn check_connectedness(h: &Choreography) -> Result<ConnectednessReport, ConnectednessError> {
    if h.has_updates() {
        return Err(ConnectednessError::UnsupportedConstruct);
    }
    let mut report = ConnectednessReport { seq: true, choice: true, interference: true, witnesses: Vec::new() };
    walk(h, true, &interactions(h), &mut report);
    Ok(report)
}

// `f` cannot overtake `l` when its sender takes part in `l`, or when its
// receiver does and cannot mistake `f` for another interaction on the same
// operation coming from a different sender.
fn ordered(l: &Interaction, f: &Interaction, all: &BTreeSet<Interaction>) -> bool {
    let (op, from, to) = f;
    if *from == l.1 || *from == l.2 {
        return true;
    }
    (*to == l.1 || *to == l.2) && all.iter().all(|i| i.0 != *op || i.2 != *to || i.1 == *from)
}

fn check_sequence(
    last: &BTreeSet<Interaction>,
    first: &BTreeSet<Interaction>,
    h: &Choreography,
    all: &BTreeSet<Interaction>,
    out: &mut ConnectednessReport,
) {
    for l in last {
        for f in first {
            if !ordered(l, f, all) {
                out.seq = false;
                out.witnesses.push(format!(
                    "sequence: `{}` may happen before `{}` in `{h}`",
                    show(f),
                    show(l)
                ));
            }
        }
    }
}

// `tail`: nothing can follow `h` except termination.
fn walk(h: &Choreography, tail: bool, all: &BTreeSet<Interaction>, out: &mut ConnectednessReport) {
    use Choreography as H;
    match h {
        H::Zero | H::One | H::Interaction { .. } | H::Scope { .. } | H::Update { .. } => {}
        H::Seq(a, b) => {
            check_sequence(&shape(a).last, &shape(b).first, h, all, out);
            walk(a, false, all, out);
            walk(b, tail, all, out);
        }
        H::Star(a) => {
            if !tail {
                out.seq = false;
                out.witnesses.push(format!("sequence: the loop `{h}` is followed by further interactions"));
            }
            let s = shape(a);
            check_sequence(&s.last, &s.first, h, all, out);
            walk(a, false, all, out);
        }
        H::Par(a, b) => {
            let shared: Vec<OpName> = a.ops().intersection(&b.ops()).cloned().collect();
            if !shared.is_empty() {
                out.interference = false;
                out.witnesses.push(format!(
                    "interference: operations {{{}}} occur on both sides of `{h}`",
                    shared.join(",")
                ));
            }
            walk(a, tail, all, out);
            walk(b, tail, all, out);
        }
        H::Choice(a, b) => {
            if let Err(why) = unique_point_of_choice(a, b) {
                out.choice = false;
                out.witnesses.push(format!("choice: {why} in `{h}`"));
            }
            walk(a, tail, all, out);
            walk(b, tail, all, out);
        }
    }
}

fn unique_point_of_choice(a: &Choreography, b: &Choreography) -> Result<(), String> {
    let (sa, sb) = (shape(a), shape(b));
    if sa.nullable || sb.nullable {
        return Err("a branch can terminate without interacting".into());
    }
    let senders: BTreeSet<&Role> = sa.first.iter().chain(&sb.first).map(|i| &i.1).collect();
    let [r] = senders.into_iter().collect::<Vec<_>>()[..] else {
        return Err("the branches do not start with sends of a single role".into());
    };
    let shared: Vec<OpName> = a.ops().intersection(&b.ops()).cloned().collect();
    if !shared.is_empty() {
        return Err(format!("operations {{{}}} occur in both branches", shared.join(",")));
    }
    let roles = a.roles();
    if roles != b.roles() {
        return Err("the branches involve different roles".into());
    }
    for branch in [a, b] {
        for q in &roles {
            let acts = initial_actions(branch, q);
            let ok = if q == r {
                acts.iter().all(|l| matches!(l, OrchLabel::Send(..)))
            } else {
                acts.iter().all(|l| matches!(l, OrchLabel::Receive(_)))
            };
            if !ok {
                return Err(format!("role `{q}` does not wait for the choice of `{r}` in `{branch}`"));
            }
        }
    }
    Ok(())
}

/// A choreography is well formed when the system of its projections implements it.
pub fn check_well_formed(h: &Choreography) -> Result<Verdict, OrchError> {
    let v = check_implements(&project_system(h), h)?;
    Ok(Verdict { property: "well-formed".into(), ..v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_choreography;
    use crate::verdict::Status;

    const BSB: &str = "Request:Buyer->Seller ; (Offer:Seller->Buyer | PayDescr:Seller->Bank) ; \
         Payment:Buyer->Bank ; (Confirm:Bank->Seller | Receipt:Bank->Buyer)";

    fn h(s: &str) -> Choreography {
        parse_choreography(s).unwrap()
    }

    #[test]
    fn sequence_examples() {
        let r = check_connectedness(&h("a:r->s ; b:t->u")).unwrap();
        assert!(!r.seq);
        assert!(r.choice && r.interference);
        assert_eq!(r.witnesses.len(), 1);
        let r = check_connectedness(&h("a:r->s ; b:s->u")).unwrap();
        assert!(r.connected());
        assert!(check_connectedness(&h(BSB)).unwrap().connected());
    }

    #[test]
    fn choice_and_interference() {
        assert!(check_connectedness(&h("a:r->s + b:r->s")).unwrap().connected());
        assert!(!check_connectedness(&h("a:r->s + b:s->r")).unwrap().choice);
        assert!(!check_connectedness(&h("a:r->s + 1")).unwrap().choice);
        assert!(!check_connectedness(&h("a:r->s + a:r->s")).unwrap().choice);
        assert!(!check_connectedness(&h("a:r->s | a:s->r")).unwrap().interference);
        assert!(check_connectedness(&h("(a:r->s ; b:s->r)*")).unwrap().connected());
        assert!(!check_connectedness(&h("(a:r->s ; b:t->u)*")).unwrap().seq);
        assert!(!check_connectedness(&h("(a:r->s)* ; b:s->r")).unwrap().seq);
        assert!(!check_connectedness(&h("a:r->s ; a:t->s")).unwrap().seq);
        assert!(check_connectedness(&h("a:r->s ; b:t->s")).unwrap().connected());
    }

    #[test]
    fn scopes_are_rejected() {
        assert_eq!(
            check_connectedness(&h("X:{r,s}[a:r->s]")),
            Err(ConnectednessError::UnsupportedConstruct)
        );
    }

    #[test]
    fn well_formedness() {
        assert!(check_well_formed(&h(BSB)).unwrap().holds());
        assert!(check_well_formed(&h("a:r->s")).unwrap().holds());
        let v = check_well_formed(&h("a:r->s ; b:t->u")).unwrap();
        assert_eq!(v.status, Status::Violated);
        assert_eq!(v.trace, Some(vec!["b:t->u".to_string(), "a:r->s".to_string(), "√".to_string()]));
    }
}

//! Scopes and dynamic updates: scope substitution, well-definedness of
//! updatable choreographies, external updates, scripted simulation and the
//! exploratory choreography/system trace correspondence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::inclusion_counterexample;
use crate::choreo::{choreo_transitions, project_system, project_with, ChoreoLabel, Choreography, Role};
use crate::orch::{
    apply_system_update, choreography_automaton_with, closed_transitions, explore_system,
    system_automaton, OrchError, Orchestration, SysLabel, System,
};
use crate::syntax::{parse_choreography, parse_orchestration, ParseError};

/// `H[H'/X]`: replaces the body of every scope `X` that is not inside an
/// update prefix.
pub fn substitute_scope(h: &Choreography, x: &str, new: &Choreography) -> Choreography {
    use Choreography as H;
    match h {
        H::Zero | H::One | H::Interaction { .. } | H::Update { .. } => h.clone(),
        H::Seq(a, b) => H::seq(substitute_scope(a, x, new), substitute_scope(b, x, new)),
        H::Choice(a, b) => H::choice(substitute_scope(a, x, new), substitute_scope(b, x, new)),
        H::Par(a, b) => H::par(substitute_scope(a, x, new), substitute_scope(b, x, new)),
        H::Star(a) => H::star(substitute_scope(a, x, new)),
        H::Scope { name, roles, body } => {
            let body = if name == x { new.clone() } else { substitute_scope(body, x, new) };
            H::Scope { name: name.clone(), roles: roles.clone(), body: Box::new(body) }
        }
    }
}

/// Choreography transitions including the update rules.
pub fn uchoreo_transitions(h: &Choreography) -> Vec<(ChoreoLabel, Choreography)> {
    choreo_transitions(h)
}

/// Projection with the scope and update clauses.
pub fn uproject(h: &Choreography, r: &str) -> Orchestration {
    crate::choreo::project(h, r)
}

/// System transitions including scope synchronisation and updates.
pub fn usystem_transitions(p: &System) -> Result<Vec<(SysLabel, System)>, OrchError> {
    crate::orch::system_transitions(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Two scopes with the same name carry different role sets.
    TypeMismatch,
    /// An update body mentions roles outside the scope type.
    RoleCoverage,
    /// An update targets a scope name that never occurs.
    MissingScope,
    /// Same-named scopes in both operands of `|`.
    ParallelScopes,
    /// A scope nested inside a scope with the same name.
    NestedScopes,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub scope: String,
    /// Child indices from the root to the offending subterm.
    pub position: Vec<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Checks that the update semantics is well defined on `h`.
pub fn validate_updatable(h: &Choreography) -> UpdateReport {
    let mut v = Validator { types: BTreeMap::new(), scopes: scope_names(h), violations: Vec::new() };
    v.collect(h, &mut Vec::new());
    v.check(h, &mut Vec::new(), &mut Vec::new());
    UpdateReport { valid: v.violations.is_empty(), violations: v.violations }
}

struct Validator {
    types: BTreeMap<String, BTreeSet<Role>>,
    // scope names occurring outside update bodies
    scopes: BTreeSet<String>,
    violations: Vec<Violation>,
}

fn children(h: &Choreography) -> Vec<&Choreography> {
    use Choreography as H;
    match h {
        H::Zero | H::One | H::Interaction { .. } => vec![],
        H::Seq(a, b) | H::Choice(a, b) | H::Par(a, b) => vec![a, b],
        H::Star(a) => vec![a],
        H::Scope { body, .. } | H::Update { body, .. } => vec![body],
    }
}

// Scope names occurring in `h`, update bodies excluded.
fn scope_names(h: &Choreography) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(h: &Choreography, out: &mut BTreeSet<String>) {
        match h {
            Choreography::Update { .. } => {}
            Choreography::Scope { name, body, .. } => {
                out.insert(name.clone());
                go(body, out);
            }
            _ => children(h).into_iter().for_each(|c| go(c, out)),
        }
    }
    go(h, &mut out);
    out
}

impl Validator {
    fn report(&mut self, kind: ViolationKind, scope: &str, position: &[usize], message: String) {
        self.violations.push(Violation { kind, scope: scope.to_string(), position: position.to_vec(), message });
    }

    fn collect(&mut self, h: &Choreography, path: &mut Vec<usize>) {
        if let Choreography::Scope { name, roles, .. } = h {
            match self.types.get(name) {
                None => {
                    self.types.insert(name.clone(), roles.clone());
                }
                Some(t) if t != roles => {
                    let message = format!(
                        "scope `{name}` has type {{{}}} here but {{{}}} elsewhere",
                        join(roles),
                        join(t)
                    );
                    self.report(ViolationKind::TypeMismatch, name, path, message);
                }
                Some(_) => {}
            }
        }
        for (i, c) in children(h).into_iter().enumerate() {
            path.push(i);
            self.collect(c, path);
            path.pop();
        }
    }

    fn check(&mut self, h: &Choreography, path: &mut Vec<usize>, enclosing: &mut Vec<String>) {
        match h {
            Choreography::Scope { name, .. } if enclosing.contains(name) => {
                self.report(
                    ViolationKind::NestedScopes,
                    name,
                    path,
                    format!("scope `{name}` occurs inside another scope `{name}`"),
                );
            }
            Choreography::Par(a, b) => {
                for x in scope_names(a).intersection(&scope_names(b)) {
                    self.report(
                        ViolationKind::ParallelScopes,
                        x,
                        path,
                        format!("scope `{x}` occurs in both operands of a parallel composition"),
                    );
                }
            }
            Choreography::Update { scope, role, body } => {
                if !self.scopes.contains(scope) {
                    self.report(
                        ViolationKind::MissingScope,
                        scope,
                        path,
                        format!("update on `{scope}` but no scope `{scope}` occurs"),
                    );
                }
                if let Some(t) = self.types.get(scope).cloned() {
                    let outside: Vec<Role> = body.roles().difference(&t).cloned().collect();
                    if !outside.is_empty() {
                        let message = format!(
                            "update `{scope}{{{role}: ..}}` mentions roles {{{}}} outside the scope type {{{}}}",
                            outside.join(","),
                            join(&t)
                        );
                        self.report(ViolationKind::RoleCoverage, scope, path, message);
                    }
                    if scope_names(body).contains(scope) {
                        self.report(
                            ViolationKind::NestedScopes,
                            scope,
                            path,
                            format!("update body injects a scope `{scope}` into scope `{scope}`"),
                        );
                    }
                }
            }
            _ => {}
        }
        let pushed = match h {
            Choreography::Scope { name, .. } => {
                enclosing.push(name.clone());
                true
            }
            _ => false,
        };
        for (i, c) in children(h).into_iter().enumerate() {
            path.push(i);
            self.check(c, path, enclosing);
            path.pop();
        }
        if pushed {
            enclosing.pop();
        }
    }
}

fn join(roles: &BTreeSet<Role>) -> String {
    roles.iter().cloned().collect::<Vec<_>>().join(",")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no enabled transition matches `{0}`")]
    NoSuchTransition(String),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Orch(#[from] OrchError),
}

/// Applies an update `X{role: body}` coming from the environment.
pub fn external_choreo_update(
    h: &Choreography,
    scope: &str,
    role: &str,
    body: &Choreography,
) -> Result<(ChoreoLabel, Choreography), SimError> {
    if !scope_names(h).contains(scope) {
        return Err(SimError::InvalidUpdate(format!("no scope `{scope}` occurs in the choreography")));
    }
    let types = h.scope_types();
    let t = &types[scope];
    let outside: Vec<Role> = body.roles().difference(t).cloned().collect();
    if !outside.is_empty() {
        return Err(SimError::InvalidUpdate(format!(
            "body mentions roles {{{}}} outside type({scope}) = {{{}}}",
            outside.join(","),
            join(t)
        )));
    }
    let label = ChoreoLabel::Update { scope: scope.to_string(), role: role.to_string(), body: body.clone() };
    Ok((label, substitute_scope(h, scope, body)))
}

/// Applies an environment update giving new bodies for the listed roles.
pub fn external_system_update(
    p: &System,
    scope: &str,
    roles: &[Role],
    bodies: &[Orchestration],
) -> Result<(SysLabel, System), SimError> {
    if roles.len() != bodies.len() {
        return Err(SimError::InvalidUpdate(format!("{} roles but {} bodies", roles.len(), bodies.len())));
    }
    if let Some(r) = roles.iter().find(|r| p.get(r).is_none()) {
        return Err(SimError::InvalidUpdate(format!("role `{r}` is not part of the system")));
    }
    match apply_system_update(p, scope, roles, bodies) {
        Ok(Some(next)) => {
            let label = SysLabel::Update {
                scope: scope.to_string(),
                by: "env".to_string(),
                roles: roles.to_vec(),
                bodies: bodies.to_vec(),
            };
            Ok((label, next))
        }
        Ok(None) => Err(SimError::InvalidUpdate(format!("no scope `{scope}` occurs in the system"))),
        Err(e) => Err(SimError::InvalidUpdate(e.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepSelector {
    /// Zero-based index into the sorted enabled transitions.
    Index(usize),
    /// A label, or just the operation name of an interaction.
    Label(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Directive {
    Step(StepSelector),
    /// `update X r1,..,rn payload`; the payload is term text or a file name.
    Update { scope: String, roles: Vec<Role>, payload: String },
    /// `auto [k]`: take the first enabled transition, `k` times or until stuck.
    Auto(Option<usize>),
}

/// Steps taken by `auto` without a count before giving up.
pub const AUTO_LIMIT: usize = 1000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Script {
    pub directives: Vec<(usize, Directive)>,
}

impl Script {
    /// Line-oriented: `step n|label`, `update X roles payload`, `auto [k]`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Script, SimError> {
        let mut directives = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| SimError::Script { line: line_no, message: message.to_string() };
            let mut words = line.splitn(2, char::is_whitespace);
            let cmd = words.next().unwrap_or("");
            let rest = words.next().unwrap_or("").trim();
            let d = match cmd {
                "step" if rest.is_empty() => return Err(err("`step` needs an index or a label")),
                "step" => match rest.parse::<usize>() {
                    Ok(n) => Directive::Step(StepSelector::Index(n)),
                    Err(_) => Directive::Step(StepSelector::Label(rest.to_string())),
                },
                "auto" if rest.is_empty() => Directive::Auto(None),
                "auto" => Directive::Auto(Some(rest.parse().map_err(|_| err("`auto` takes a step count"))?)),
                "update" => {
                    let mut parts = rest.splitn(3, char::is_whitespace);
                    let scope = parts.next().unwrap_or("");
                    let roles = parts.next().unwrap_or("");
                    let payload = parts.next().unwrap_or("").trim();
                    if scope.is_empty() || roles.is_empty() || payload.is_empty() {
                        return Err(err("expected `update X role[,role..] payload`"));
                    }
                    Directive::Update {
                        scope: scope.to_string(),
                        roles: roles.split(',').map(|r| r.trim().to_string()).collect(),
                        payload: payload.to_string(),
                    }
                }
                other => return Err(err(&format!("unknown directive `{other}`"))),
            };
            directives.push((line_no, d));
        }
        Ok(Script { directives })
    }

    /// Replaces update payloads naming an existing file (relative to `base`)
    /// by the file contents.
    pub fn resolve_files(&mut self, base: &Path) -> std::io::Result<()> {
        for (_, d) in &mut self.directives {
            if let Directive::Update { payload, .. } = d {
                let candidate = base.join(payload.as_str());
                if candidate.is_file() {
                    *payload = std::fs::read_to_string(candidate)?.trim().to_string();
                }
            }
        }
        Ok(())
    }
}

/// What a simulation runs on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subject {
    Choreography(Choreography),
    System(System),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Choreography(h) => write!(f, "{h}"),
            Subject::System(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunEntry {
    pub state: String,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RunLog {
    pub entries: Vec<RunEntry>,
}

impl RunLog {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run log serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            match &e.label {
                None => out.push_str(&format!("{i:>3}  {}\n", e.state)),
                Some(l) => out.push_str(&format!("     --{l}-->\n{i:>3}  {}\n", e.state)),
            }
        }
        out
    }
}

fn subject_transitions(s: &Subject) -> Result<Vec<(String, Option<String>, Subject)>, SimError> {
    Ok(match s {
        Subject::Choreography(h) => uchoreo_transitions(h)
            .into_iter()
            .map(|(l, h2)| {
                let op = match &l {
                    ChoreoLabel::Interaction { op, .. } => Some(op.clone()),
                    _ => None,
                };
                (l.to_string(), op, Subject::Choreography(h2))
            })
            .collect(),
        Subject::System(p) => closed_transitions(p)?
            .into_iter()
            .map(|(l, p2)| {
                let op = match &l {
                    SysLabel::Completed { op, .. } => Some(op.clone()),
                    _ => None,
                };
                (l.to_string(), op, Subject::System(p2))
            })
            .collect(),
    })
}

/// Replays `script` from `start`, logging every state and label.
pub fn simulate(start: &Subject, script: &Script) -> Result<RunLog, SimError> {
    let mut state = start.clone();
    let mut entries = vec![RunEntry { state: state.to_string(), label: None }];
    for (line, d) in &script.directives {
        match d {
            Directive::Step(sel) => {
                let ts = subject_transitions(&state)?;
                let pick = match sel {
                    StepSelector::Index(n) => ts.into_iter().nth(*n),
                    StepSelector::Label(l) => {
                        ts.into_iter().find(|(label, op, _)| label == l || op.as_deref() == Some(l.as_str()))
                    }
                };
                let Some((label, _, next)) = pick else {
                    let what = match sel {
                        StepSelector::Index(n) => format!("step {n} (line {line})"),
                        StepSelector::Label(l) => format!("{l} (line {line})"),
                    };
                    return Err(SimError::NoSuchTransition(what));
                };
                state = next;
                entries.push(RunEntry { state: state.to_string(), label: Some(label) });
            }
            Directive::Auto(k) => {
                for _ in 0..k.unwrap_or(AUTO_LIMIT) {
                    let Some((label, _, next)) = subject_transitions(&state)?.into_iter().next() else {
                        break;
                    };
                    state = next;
                    entries.push(RunEntry { state: state.to_string(), label: Some(label) });
                }
            }
            Directive::Update { scope, roles, payload } => {
                let (label, next) = match &state {
                    Subject::Choreography(h) => {
                        let [role] = roles.as_slice() else {
                            return Err(SimError::InvalidUpdate(
                                "a choreography update names exactly one role".into(),
                            ));
                        };
                        let body = parse_choreography(payload)?;
                        let (l, h2) = external_choreo_update(h, scope, role, &body)?;
                        (l.to_string(), Subject::Choreography(h2))
                    }
                    Subject::System(p) => {
                        let (l, p2) = system_update_from_payload(p, scope, roles, payload)?;
                        (l.to_string(), Subject::System(p2))
                    }
                };
                state = next;
                entries.push(RunEntry { state: state.to_string(), label: Some(label) });
            }
        }
    }
    Ok(RunLog { entries })
}

// A system update payload is either one orchestration per listed role
// (comma separated) or, with a single listed role, a choreography that is
// projected onto every role holding the scope.
fn system_update_from_payload(
    p: &System,
    scope: &str,
    roles: &[Role],
    payload: &str,
) -> Result<(SysLabel, System), SimError> {
    if let [_] = roles {
        if let Ok(body) = parse_choreography(payload) {
            let holders: Vec<Role> =
                p.roles.iter().filter(|(_, c)| c.has_scope(scope, None)).map(|(r, _)| r.clone()).collect();
            let types = body.scope_types();
            let bodies: Vec<Orchestration> = holders.iter().map(|r| project_with(&body, r, &types)).collect();
            return external_system_update(p, scope, &holders, &bodies);
        }
    }
    let bodies = split_top_level(payload)
        .iter()
        .map(|b| parse_orchestration(b))
        .collect::<Result<Vec<_>, _>>()?;
    external_system_update(p, scope, roles, &bodies)
}

// Splits on commas that are not nested in brackets.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

/// Result of comparing the traces of a projected system with its choreography.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrespondenceReport {
    pub corresponds: bool,
    /// Shortest system trace (common alphabet) the choreography cannot produce.
    pub counterexample: Option<Vec<String>>,
    pub states_explored: usize,
}

/// Update labels of both calculi are rendered in the orchestration update
/// syntax, with the choreography body projected on the scope type.
pub fn common_update_symbol(
    scope: &str,
    by: &str,
    roles: &[Role],
    bodies: &[Orchestration],
) -> String {
    SysLabel::Update { scope: scope.into(), by: by.into(), roles: roles.to_vec(), bodies: bodies.to_vec() }
        .to_string()
}

/// Exploratory check that every completed-interaction/update trace of the
/// projected system is a trace of `h`.
pub fn trace_correspondence(h: &Choreography, cap: usize) -> Result<CorrespondenceReport, OrchError> {
    let p = project_system(h);
    let g = explore_system(&p, cap)?;
    let types = h.scope_types();
    let sub = system_automaton(&g);
    let sup = choreography_automaton_with(h, cap, &|l: &ChoreoLabel| match l {
        ChoreoLabel::Update { scope, role, body } => {
            let mut inner = types.clone();
            for (k, v) in body.scope_types() {
                inner.entry(k).or_insert(v);
            }
            let targets: Vec<Role> = match types.get(scope) {
                Some(t) => t.iter().cloned().collect(),
                None => body.roles().into_iter().collect(),
            };
            let bodies: Vec<Orchestration> = targets.iter().map(|r| project_with(body, r, &inner)).collect();
            common_update_symbol(scope, role, &targets, &bodies)
        }
        other => other.to_string(),
    })?;
    let counterexample = inclusion_counterexample(&sub, &sup);
    Ok(CorrespondenceReport {
        corresponds: counterexample.is_none(),
        counterexample,
        states_explored: g.states.len(),
    })
}

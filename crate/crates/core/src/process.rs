//! Terms of the adaptable-process calculus: located processes, update
//! prefixes, guarded sums, guarded replication and parallel composition.
//!
//! Update patterns share the [`Process`] type; they are processes that may
//! contain [`Process::Hole`]. The transient placeholder [`Process::Star`] only
//! appears inside the LTS while an update is being derived.

use std::collections::BTreeSet;
use std::fmt;

/// A channel / locality name.
pub type Name = String;

/// Prefix of a guarded sum or of a replication.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prefix {
    Input(Name),
    Output(Name),
    /// `a{U}`; the body is an update pattern and may contain holes.
    Update(Name, Box<Process>),
}

impl Prefix {
    pub fn name(&self) -> &str {
        match self {
            Prefix::Input(a) | Prefix::Output(a) | Prefix::Update(a, _) => a,
        }
    }
}

/// The derived `Ord` is the total AST order used for canonical forms:
/// constructor tag first, then names, then children, lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Nil,
    Located(Name, Box<Process>),
    Par(Vec<Process>),
    Repl(Prefix, Box<Process>),
    Sum(Vec<(Prefix, Process)>),
    /// Placeholder left behind by a located process that offered itself for update.
    Star,
    /// Hole of an update pattern.
    Hole,
}

/// Which update-pattern disciplines a pattern (or every pattern of a process) obeys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct VariantClass {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub static_ok: bool,
}

impl VariantClass {
    const TOP: VariantClass = VariantClass { e1: true, e2: true, e3: true, static_ok: true };

    fn meet(self, other: VariantClass) -> VariantClass {
        VariantClass {
            e1: self.e1 && other.e1,
            e2: self.e2 && other.e2,
            e3: self.e3 && other.e3,
            static_ok: self.static_ok && other.static_ok,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    In,
    Out,
}

/// An observable barb: the process can perform input or output on `name`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Barb {
    pub polarity: Polarity,
    pub name: Name,
}

impl Barb {
    pub fn input(name: impl Into<Name>) -> Self {
        Barb { polarity: Polarity::In, name: name.into() }
    }

    pub fn output(name: impl Into<Name>) -> Self {
        Barb { polarity: Polarity::Out, name: name.into() }
    }
}

impl fmt::Display for Barb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::In => write!(f, "{}", self.name),
            Polarity::Out => write!(f, "^{}", self.name),
        }
    }
}

impl std::str::FromStr for Barb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (polarity, name) = match s.strip_prefix('^') {
            Some(rest) => (Polarity::Out, rest),
            None => (Polarity::In, s),
        };
        let mut chars = name.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(format!("invalid barb `{s}`: expected `name` or `^name`"));
        }
        Ok(Barb { polarity, name: name.to_string() })
    }
}

impl Process {
    pub fn located(name: impl Into<Name>, body: Process) -> Process {
        Process::Located(name.into(), Box::new(body))
    }

    pub fn prefixed(prefix: Prefix, cont: Process) -> Process {
        Process::Sum(vec![(prefix, cont)])
    }

    pub fn repl(prefix: Prefix, cont: Process) -> Process {
        Process::Repl(prefix, Box::new(cont))
    }

    pub fn par(items: Vec<Process>) -> Process {
        Process::Par(items)
    }

    /// True if a `Star` occurs anywhere, update bodies included.
    pub fn contains_star(&self) -> bool {
        self.count(&|p| matches!(p, Process::Star), true) > 0
    }

    pub fn count_stars(&self) -> usize {
        self.count(&|p| matches!(p, Process::Star), true)
    }

    /// Number of holes that `fill` would replace.
    pub fn fillable_holes(&self) -> usize {
        self.count(&|p| matches!(p, Process::Hole), false)
    }

    fn count(&self, pred: &dyn Fn(&Process) -> bool, into_updates: bool) -> usize {
        let here = usize::from(pred(self));
        let prefix_count = |pi: &Prefix| match pi {
            Prefix::Update(_, body) if into_updates => body.count(pred, into_updates),
            _ => 0,
        };
        here + match self {
            Process::Nil | Process::Star | Process::Hole => 0,
            Process::Located(_, p) => p.count(pred, into_updates),
            Process::Par(ps) => ps.iter().map(|p| p.count(pred, into_updates)).sum(),
            Process::Repl(pi, p) => prefix_count(pi) + p.count(pred, into_updates),
            Process::Sum(branches) => branches
                .iter()
                .map(|(pi, p)| prefix_count(pi) + p.count(pred, into_updates))
                .sum(),
        }
    }

    /// Replaces every `Star` with `with`.
    pub fn replace_star(&self, with: &Process) -> Process {
        self.map_leaves(&|p| match p {
            Process::Star => Some(with.clone()),
            _ => None,
        })
    }

    // Rebuilds the term, substituting leaves outside update bodies.
    fn map_leaves(&self, f: &dyn Fn(&Process) -> Option<Process>) -> Process {
        if let Some(p) = f(self) {
            return p;
        }
        match self {
            Process::Nil | Process::Star | Process::Hole => self.clone(),
            Process::Located(a, p) => Process::Located(a.clone(), Box::new(p.map_leaves(f))),
            Process::Par(ps) => Process::Par(ps.iter().map(|p| p.map_leaves(f)).collect()),
            Process::Repl(pi, p) => Process::Repl(pi.clone(), Box::new(p.map_leaves(f))),
            Process::Sum(branches) => Process::Sum(
                branches.iter().map(|(pi, p)| (pi.clone(), p.map_leaves(f))).collect(),
            ),
        }
    }

    /// All update prefixes `(name, pattern)` in the term, nested ones included.
    pub fn update_prefixes(&self) -> Vec<(&Name, &Process)> {
        let mut out = Vec::new();
        self.collect_updates(&mut out);
        out
    }

    fn collect_updates<'a>(&'a self, out: &mut Vec<(&'a Name, &'a Process)>) {
        let visit_prefix = |pi: &'a Prefix, out: &mut Vec<(&'a Name, &'a Process)>| {
            if let Prefix::Update(a, body) = pi {
                out.push((a, body));
                body.collect_updates(out);
            }
        };
        match self {
            Process::Nil | Process::Star | Process::Hole => {}
            Process::Located(_, p) => p.collect_updates(out),
            Process::Par(ps) => ps.iter().for_each(|p| p.collect_updates(out)),
            Process::Repl(pi, p) => {
                visit_prefix(pi, out);
                p.collect_updates(out);
            }
            Process::Sum(branches) => {
                for (pi, p) in branches {
                    visit_prefix(pi, out);
                    p.collect_updates(out);
                }
            }
        }
    }

    fn contains_located(&self) -> bool {
        self.count(&|p| matches!(p, Process::Located(..)), false) > 0
    }

    fn par_components(&self) -> Vec<&Process> {
        match self {
            Process::Par(ps) => ps.iter().flat_map(|p| p.par_components()).collect(),
            Process::Nil => Vec::new(),
            p => vec![p],
        }
    }
}

/// `U{{Q}}`: fills with `filler` the holes of `pattern` that are not inside
/// update prefixes. Holes under ordinary prefixes are filled too.
pub fn fill(pattern: &Process, filler: &Process) -> Process {
    pattern.map_leaves(&|p| match p {
        Process::Hole => Some(filler.clone()),
        _ => None,
    })
}

/// Classifies one update pattern against the three pattern grammars and the
/// static-topology check. The static check needs the updated locality's name,
/// which is not known here, so it is evaluated by [`classify_update`].
pub fn classify_pattern(pattern: &Process) -> VariantClass {
    let e2 = fits_unguarded(pattern);
    let e3 = e2 && pattern.fillable_holes() == 1 && fits_preserving(pattern);
    VariantClass { e1: true, e2, e3, static_ok: false }
}

/// Classification of the update prefix `name{pattern}`, static check included.
pub fn classify_update(name: &str, pattern: &Process) -> VariantClass {
    VariantClass { static_ok: static_ok(name, pattern), ..classify_pattern(pattern) }
}

/// Meet of [`classify_update`] over every update prefix of `p`.
pub fn classify_process(p: &Process) -> VariantClass {
    p.update_prefixes()
        .into_iter()
        .fold(VariantClass::TOP, |acc, (a, u)| acc.meet(classify_update(a, u)))
}

// U ::= P | a[U] | U || U | hole
fn fits_unguarded(u: &Process) -> bool {
    match u {
        Process::Hole | Process::Nil => true,
        Process::Located(_, body) => fits_unguarded(body),
        Process::Par(ps) => ps.iter().all(fits_unguarded),
        Process::Star => false,
        Process::Repl(..) | Process::Sum(_) => u.fillable_holes() == 0,
    }
}

// U ::= a[U] | U || P | hole, with the single hole checked by the caller.
fn fits_preserving(u: &Process) -> bool {
    match u {
        Process::Hole => true,
        Process::Located(_, body) => fits_preserving(body),
        Process::Par(ps) => {
            let holed: Vec<_> = ps.iter().filter(|p| p.fillable_holes() > 0).collect();
            holed.len() == 1 && fits_preserving(holed[0])
        }
        _ => false,
    }
}

// Conservative static-topology check for `a{U}`: the pattern must re-create
// the locality `a` around the old state (`a[hole || R] || S`), and the added
// behaviour `R`, `S` must not contain localities.
fn static_ok(name: &str, pattern: &Process) -> bool {
    let top = pattern.par_components();
    let mut recreated = 0;
    for comp in &top {
        match comp {
            Process::Located(b, body) if b == name && body.fillable_holes() > 0 => {
                let inner = body.par_components();
                let holes = inner.iter().filter(|p| matches!(p, Process::Hole)).count();
                let rest_ok = inner
                    .iter()
                    .filter(|p| !matches!(p, Process::Hole))
                    .all(|p| p.fillable_holes() == 0 && !p.contains_located());
                if holes != 1 || !rest_ok {
                    return false;
                }
                recreated += 1;
            }
            p if p.fillable_holes() == 0 && !p.contains_located() => {}
            _ => return false,
        }
    }
    recreated == 1
}

/// Canonical representative of the structural class of `p`: parallel
/// compositions and sums flattened and sorted, `0` units dropped, duplicate
/// identical replications folded. Replication is never unfolded.
pub fn canonicalize(p: &Process) -> Process {
    match p {
        Process::Nil | Process::Star | Process::Hole => p.clone(),
        Process::Located(a, body) => Process::Located(a.clone(), Box::new(canonicalize(body))),
        Process::Repl(pi, cont) => Process::Repl(canonical_prefix(pi), Box::new(canonicalize(cont))),
        Process::Sum(branches) => {
            let mut items: Vec<(Prefix, Process)> = branches
                .iter()
                .map(|(pi, cont)| (canonical_prefix(pi), canonicalize(cont)))
                .collect();
            items.sort();
            if items.is_empty() {
                Process::Nil
            } else {
                Process::Sum(items)
            }
        }
        Process::Par(ps) => {
            let mut items = Vec::with_capacity(ps.len());
            for child in ps {
                match canonicalize(child) {
                    Process::Nil => {}
                    Process::Par(inner) => items.extend(inner),
                    other => items.push(other),
                }
            }
            items.sort();
            // !pi.P || !pi.P behaves exactly as !pi.P
            items.dedup_by(|a, b| matches!(a, Process::Repl(..)) && a == b);
            match items.len() {
                0 => Process::Nil,
                1 => items.pop().unwrap(),
                _ => Process::Par(items),
            }
        }
    }
}

fn canonical_prefix(pi: &Prefix) -> Prefix {
    match pi {
        Prefix::Update(a, body) => Prefix::Update(a.clone(), Box::new(canonicalize(body))),
        other => other.clone(),
    }
}

/// Input and output barbs of `p`.
pub fn barbs(p: &Process) -> BTreeSet<Barb> {
    let mut out = BTreeSet::new();
    collect_barbs(p, &mut out);
    out
}

// Barbs are the In/Out labels of the LTS; only enabled prefixes contribute,
// and localities are transparent.
fn collect_barbs(p: &Process, out: &mut BTreeSet<Barb>) {
    let mut add = |pi: &Prefix| match pi {
        Prefix::Input(a) => {
            out.insert(Barb::input(a.clone()));
        }
        Prefix::Output(a) => {
            out.insert(Barb::output(a.clone()));
        }
        Prefix::Update(..) => {}
    };
    match p {
        Process::Nil | Process::Star | Process::Hole => {}
        Process::Located(_, body) => collect_barbs(body, out),
        Process::Par(ps) => ps.iter().for_each(|q| collect_barbs(q, out)),
        Process::Repl(pi, _) => add(pi),
        Process::Sum(branches) => branches.iter().for_each(|(pi, _)| add(pi)),
    }
}

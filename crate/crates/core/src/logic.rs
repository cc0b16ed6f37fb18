//! Temporal logic over reduction graphs: barb predicates, boolean
//! connectives, one-step possibility and eventuality.

use serde::Serialize;
use thiserror::Error;

use crate::process::Barb;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(Barb),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    /// `<> phi`: some immediate successor satisfies `phi`.
    Next(Box<Formula>),
    /// `ev phi`: some reachable state (including the current one) satisfies `phi`.
    Ev(Box<Formula>),
}

impl Formula {
    pub fn atom(b: Barb) -> Formula {
        Formula::Atom(b)
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn ev(a: Formula) -> Formula {
        Formula::Ev(Box::new(a))
    }

    /// `<>+ phi`, i.e. `<> ev phi`.
    pub fn next_ev(a: Formula) -> Formula {
        Formula::next(Formula::ev(a))
    }

    pub fn is_predicate(&self) -> bool {
        matches!(self, Formula::True | Formula::Atom(_))
    }

    /// No negation anywhere.
    pub fn is_monotone(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(_) => false,
            Formula::Or(a, b) | Formula::And(a, b) => a.is_monotone() && b.is_monotone(),
            Formula::Next(a) | Formula::Ev(a) => a.is_monotone(),
        }
    }

    /// Monotone, and every conjunction has a predicate operand.
    pub fn is_restricted(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(_) => false,
            Formula::Or(a, b) => a.is_restricted() && b.is_restricted(),
            Formula::And(a, b) => {
                (a.is_predicate() || b.is_predicate()) && a.is_restricted() && b.is_restricted()
            }
            Formula::Next(a) | Formula::Ev(a) => a.is_restricted(),
        }
    }

    pub fn contains_not(&self) -> bool {
        !self.is_monotone()
    }

    pub fn contains_ev(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => false,
            Formula::Ev(_) => true,
            Formula::Or(a, b) | Formula::And(a, b) => a.contains_ev() || b.contains_ev(),
            Formula::Not(a) | Formula::Next(a) => a.contains_ev(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaClass {
    General,
    Monotone,
    Restricted,
    /// Negation of a restricted monotone formula.
    RestrictedNegation,
}

impl FormulaClass {
    /// Member of the restricted fragment (restricted formulas and their negations).
    pub fn in_restricted_logic(self) -> bool {
        matches!(self, FormulaClass::Restricted | FormulaClass::RestrictedNegation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaClass::General => "general",
            FormulaClass::Monotone => "monotone",
            FormulaClass::Restricted => "restricted",
            FormulaClass::RestrictedNegation => "restricted_negation",
        }
    }
}

/// Most specific class of `phi`.
pub fn classify_formula(phi: &Formula) -> FormulaClass {
    if phi.is_restricted() {
        return FormulaClass::Restricted;
    }
    if let Formula::Not(inner) = phi {
        if inner.is_restricted() {
            return FormulaClass::RestrictedNegation;
        }
    }
    if phi.is_monotone() {
        FormulaClass::Monotone
    } else {
        FormulaClass::General
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaKind {
    /// Absence of `k` consecutive error barbs.
    Cb,
    /// Once solved, errors do not reappear.
    Mc,
    /// Restricted variant of `Mc` using a designated `ok` barb.
    Mcr,
    /// `Mcr` generalised to `k` error phases.
    Mcrk,
}

impl std::str::FromStr for SchemaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cb" => Ok(SchemaKind::Cb),
            "mc" => Ok(SchemaKind::Mc),
            "mcr" => Ok(SchemaKind::Mcr),
            "mcrk" => Ok(SchemaKind::Mcrk),
            other => Err(format!("unknown schema `{other}` (expected cb, mc, mcr or mcrk)")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SchemaParams {
    pub error: Option<Barb>,
    pub ok: Option<Barb>,
    pub k: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("bad arity: {0}")]
    BadArity(String),
}

/// Instantiates one of the property schemas.
pub fn schema(kind: SchemaKind, params: &SchemaParams) -> Result<Formula, SchemaError> {
    let need_error = || {
        params.error.clone().map(Formula::Atom).ok_or_else(|| {
            SchemaError::BadArity("an error barb is required".to_string())
        })
    };
    let need_ok = || {
        params
            .ok
            .clone()
            .map(Formula::Atom)
            .ok_or_else(|| SchemaError::BadArity("an ok barb is required".to_string()))
    };
    let need_k = || match params.k {
        Some(k) if k >= 1 => Ok(k),
        Some(k) => Err(SchemaError::BadArity(format!("k must be at least 1, got {k}"))),
        None => Err(SchemaError::BadArity("k is required".to_string())),
    };
    match kind {
        SchemaKind::Cb => Ok(consecutive_barbs(need_error()?, need_k()?)),
        SchemaKind::Mc => {
            let e = need_error()?;
            let inner = Formula::and(
                e.clone(),
                Formula::next_ev(Formula::and(Formula::not(e.clone()), Formula::next_ev(e))),
            );
            Ok(Formula::not(Formula::ev(inner)))
        }
        SchemaKind::Mcr => Ok(monotone_correctness(need_ok()?, need_error()?, 1)),
        SchemaKind::Mcrk => Ok(monotone_correctness(need_ok()?, need_error()?, need_k()?)),
    }
}

/// `not ev (e and <> (e and <> ( ... e)))` with `k` occurrences of `e`.
pub fn consecutive_barbs(e: Formula, k: usize) -> Formula {
    assert!(k >= 1);
    let mut chain = e.clone();
    for _ in 1..k {
        chain = Formula::and(e.clone(), Formula::next(chain));
    }
    Formula::not(Formula::ev(chain))
}

fn monotone_correctness(ok: Formula, e: Formula, k: usize) -> Formula {
    // innermost phase ends with `ok and ev e`
    let mut tail = e.clone();
    for _ in 0..k {
        tail = Formula::and(e.clone(), Formula::next_ev(Formula::and(ok.clone(), Formula::ev(tail))));
    }
    Formula::not(Formula::ev(tail))
}

//! Concrete ASCII syntax for processes, update patterns, formulas,
//! choreographies, orchestrations and systems.
//!
//! Every `Display` impl in this module prints text that parses back to an
//! equal AST.

mod choreo;
mod formula;
mod lexer;
mod process;

use thiserror::Error;

pub use self::choreo::{parse_choreography, parse_orchestration, parse_system};
pub use self::formula::parse_formula;
pub use self::process::{parse_pattern, parse_process};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {position}: expected {expected}, found {found}")]
    Syntax { position: usize, expected: String, found: String },
    #[error("hole `@` outside an update pattern at offset {0}")]
    HoleOutsidePattern(usize),
    #[error("reserved symbol `{symbol}` at offset {position}")]
    ReservedSymbol { position: usize, symbol: String },
    #[error("role `{0}` occurs more than once in the system")]
    DuplicateRole(String),
    #[error("output `{op}!{role}` occurs inside the orchestration of role `{role}`")]
    SelfAddressedOutput { role: String, op: String },
}

impl ParseError {
    pub(crate) fn syntax(position: usize, expected: &str, found: &str) -> Self {
        ParseError::Syntax {
            position,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

/// What a piece of source text is expected to contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Process,
    Pattern,
    Formula,
    Choreography,
    Orchestration,
    System,
}

impl std::str::FromStr for TermKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "process" => TermKind::Process,
            "pattern" => TermKind::Pattern,
            "formula" => TermKind::Formula,
            "choreography" => TermKind::Choreography,
            "orchestration" => TermKind::Orchestration,
            "system" => TermKind::System,
            other => return Err(format!("unknown term kind `{other}`")),
        })
    }
}

/// Source text tagged with the language it is written in.
#[derive(Clone, Debug)]
pub struct SourceTerm {
    pub text: String,
    pub kind: TermKind,
}

impl SourceTerm {
    /// Parses and pretty-prints the term.
    pub fn normalize(&self) -> Result<String, ParseError> {
        Ok(match self.kind {
            TermKind::Process => parse_process(&self.text)?.to_string(),
            TermKind::Pattern => parse_pattern(&self.text)?.to_string(),
            TermKind::Formula => parse_formula(&self.text)?.to_string(),
            TermKind::Choreography => parse_choreography(&self.text)?.to_string(),
            TermKind::Orchestration => parse_orchestration(&self.text)?.to_string(),
            TermKind::System => parse_system(&self.text)?.to_string(),
        })
    }
}

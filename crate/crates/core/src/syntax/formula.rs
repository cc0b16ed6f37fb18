use std::fmt;

use super::lexer::{Cursor, Tok};
use super::ParseError;
use crate::logic::Formula;
use crate::process::Barb;

const KEYWORDS: [&str; 5] = ["tt", "or", "and", "not", "ev"];

/// Parses a formula. `or` binds loosest, then `and`; `not`, `<>` and `ev`
/// are prefix operators binding tightest.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut cur = Cursor::new(text)?;
    let phi = disjunction(&mut cur)?;
    cur.finish()?;
    Ok(phi)
}

fn is_kw(cur: &Cursor, kw: &str) -> bool {
    matches!(cur.peek(), Tok::Ident(s) if s == kw)
}

fn disjunction(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = conjunction(cur)?;
    while is_kw(cur, "or") {
        cur.bump();
        lhs = Formula::or(lhs, conjunction(cur)?);
    }
    Ok(lhs)
}

fn conjunction(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = unary(cur)?;
    while is_kw(cur, "and") {
        cur.bump();
        lhs = Formula::and(lhs, unary(cur)?);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor) -> Result<Formula, ParseError> {
    if is_kw(cur, "not") {
        cur.bump();
        return Ok(Formula::not(unary(cur)?));
    }
    if is_kw(cur, "ev") {
        cur.bump();
        return Ok(Formula::ev(unary(cur)?));
    }
    if cur.eat(&Tok::Diamond) {
        return Ok(Formula::next(unary(cur)?));
    }
    if is_kw(cur, "tt") {
        cur.bump();
        return Ok(Formula::True);
    }
    if cur.eat(&Tok::LParen) {
        let phi = disjunction(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(phi);
    }
    let output = cur.eat(&Tok::Caret);
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::Ident(name)
            if name.starts_with(|c: char| c.is_ascii_lowercase())
                && !KEYWORDS.contains(&name.as_str()) =>
        {
            cur.bump();
            Ok(Formula::Atom(if output { Barb::output(name) } else { Barb::input(name) }))
        }
        _ => Err(ParseError::syntax(pos, "a formula", &cur.peek().describe())),
    }
}

fn prec(phi: &Formula) -> u8 {
    match phi {
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        _ => 3,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, phi: &Formula, min: u8) -> fmt::Result {
    if prec(phi) < min {
        write!(f, "({phi})")
    } else {
        write!(f, "{phi}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "tt"),
            Formula::Atom(b) => write!(f, "{b}"),
            // left-associative: the right operand needs strictly higher precedence
            Formula::Or(a, b) => {
                write_at(f, a, 1)?;
                write!(f, " or ")?;
                write_at(f, b, 2)
            }
            Formula::And(a, b) => {
                write_at(f, a, 2)?;
                write!(f, " and ")?;
                write_at(f, b, 3)
            }
            Formula::Not(a) => {
                write!(f, "not ")?;
                write_at(f, a, 3)
            }
            Formula::Next(a) => {
                write!(f, "<> ")?;
                write_at(f, a, 3)
            }
            Formula::Ev(a) => {
                write!(f, "ev ")?;
                write_at(f, a, 3)
            }
        }
    }
}

use std::fmt;

use super::lexer::{Cursor, Tok};
use super::ParseError;
use crate::process::{Prefix, Process};

/// Parses a user-facing process: no holes outside update prefixes, no placeholder.
pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let mut cur = Cursor::new(text)?;
    let p = par(&mut cur, false)?;
    cur.finish()?;
    Ok(p)
}

/// Parses an update pattern: holes `@` are allowed anywhere.
pub fn parse_pattern(text: &str) -> Result<Process, ParseError> {
    let mut cur = Cursor::new(text)?;
    let p = par(&mut cur, true)?;
    cur.finish()?;
    Ok(p)
}

fn par(cur: &mut Cursor, holes: bool) -> Result<Process, ParseError> {
    let mut items = vec![sum(cur, holes)?];
    while cur.eat(&Tok::Bar) {
        items.push(sum(cur, holes)?);
    }
    Ok(if items.len() == 1 { items.pop().unwrap() } else { Process::Par(items) })
}

fn sum(cur: &mut Cursor, holes: bool) -> Result<Process, ParseError> {
    let start = cur.pos();
    let (first, first_is_summand) = unary(cur, holes)?;
    if *cur.peek() != Tok::Plus {
        return Ok(first);
    }
    if !first_is_summand {
        return Err(ParseError::syntax(start, "a prefixed summand `pi.P` before `+`", "another term"));
    }
    let mut branches = summand_branches(first);
    while cur.eat(&Tok::Plus) {
        let at = cur.pos();
        let (next, ok) = unary(cur, holes)?;
        if !ok {
            return Err(ParseError::syntax(at, "a prefixed summand `pi.P`", "another term"));
        }
        branches.extend(summand_branches(next));
    }
    Ok(Process::Sum(branches))
}

fn summand_branches(p: Process) -> Vec<(Prefix, Process)> {
    match p {
        Process::Sum(b) => b,
        _ => unreachable!("summand flag guarantees a prefixed term"),
    }
}

// Returns the term and whether it is a bare `pi.P` (eligible as a summand).
fn unary(cur: &mut Cursor, holes: bool) -> Result<(Process, bool), ParseError> {
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::Zero => {
            cur.bump();
            Ok((Process::Nil, false))
        }
        Tok::At => {
            cur.bump();
            if holes {
                Ok((Process::Hole, false))
            } else {
                Err(ParseError::HoleOutsidePattern(pos))
            }
        }
        Tok::Placeholder | Tok::Kleene => Err(ParseError::ReservedSymbol {
            position: pos,
            symbol: if *cur.peek() == Tok::Placeholder { "⋆" } else { "*" }.to_string(),
        }),
        Tok::LParen => {
            cur.bump();
            let p = par(cur, holes)?;
            cur.expect(&Tok::RParen)?;
            Ok((p, false))
        }
        Tok::Bang => {
            cur.bump();
            let pi = prefix(cur)?;
            cur.expect(&Tok::Dot)?;
            let (cont, _) = unary(cur, holes)?;
            Ok((Process::Repl(pi, Box::new(cont)), false))
        }
        Tok::Ident(name) if matches!(cur.peek_at(1), Tok::LBrack) => {
            check_name(&name, pos)?;
            cur.bump();
            cur.bump();
            let body = par(cur, holes)?;
            cur.expect(&Tok::RBrack)?;
            Ok((Process::Located(name, Box::new(body)), false))
        }
        Tok::Ident(_) | Tok::Caret => {
            let pi = prefix(cur)?;
            cur.expect(&Tok::Dot)?;
            let (cont, _) = unary(cur, holes)?;
            Ok((Process::Sum(vec![(pi, cont)]), true))
        }
        _ => Err(cur.unexpected("a process")),
    }
}

fn prefix(cur: &mut Cursor) -> Result<Prefix, ParseError> {
    let output = cur.eat(&Tok::Caret);
    let pos = cur.pos();
    let name = cur.ident("a name")?;
    check_name(&name, pos)?;
    if output {
        return Ok(Prefix::Output(name));
    }
    if cur.eat(&Tok::LBrace) {
        // update bodies are patterns whatever the surrounding context
        let body = par(cur, true)?;
        cur.expect(&Tok::RBrace)?;
        return Ok(Prefix::Update(name, Box::new(body)));
    }
    Ok(Prefix::Input(name))
}

fn check_name(name: &str, pos: usize) -> Result<(), ParseError> {
    if name.starts_with(|c: char| c.is_ascii_lowercase()) {
        Ok(())
    } else {
        Err(ParseError::syntax(pos, "a name starting with a lowercase letter", &format!("`{name}`")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Par,
    Sum,
    Unary,
}

fn level(p: &Process) -> Level {
    match p {
        Process::Par(ps) if ps.len() > 1 => Level::Par,
        Process::Sum(bs) if bs.len() > 1 => Level::Sum,
        _ => Level::Unary,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, p: &Process, min: Level) -> fmt::Result {
    if level(p) < min {
        write!(f, "(")?;
        write_term(f, p)?;
        write!(f, ")")
    } else {
        write_term(f, p)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, p: &Process) -> fmt::Result {
    match p {
        Process::Nil => write!(f, "0"),
        Process::Hole => write!(f, "@"),
        Process::Star => write!(f, "⋆"),
        Process::Located(a, body) => {
            write!(f, "{a}[")?;
            write_term(f, body)?;
            write!(f, "]")
        }
        Process::Par(ps) => match ps.as_slice() {
            [] => write!(f, "0"),
            [only] => write_term(f, only),
            _ => {
                for (i, q) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    // nested parallels keep their grouping
                    write_at(f, q, Level::Sum)?;
                }
                Ok(())
            }
        },
        Process::Sum(bs) => {
            if bs.is_empty() {
                return write!(f, "0");
            }
            for (i, (pi, cont)) in bs.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "{pi}.")?;
                write_at(f, cont, Level::Unary)?;
            }
            Ok(())
        }
        Process::Repl(pi, cont) => {
            write!(f, "!{pi}.")?;
            write_at(f, cont, Level::Unary)
        }
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefix::Input(a) => write!(f, "{a}"),
            Prefix::Output(a) => write!(f, "^{a}"),
            Prefix::Update(a, body) => write!(f, "{a}{{{body}}}"),
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self)
    }
}

use std::collections::BTreeSet;
use std::fmt;

use super::lexer::{Cursor, Tok};
use super::ParseError;
use crate::choreo::Choreography;
use crate::orch::{Orchestration, System};

// Both languages share the operator layer: `|` loosest, then `+`, then `;`,
// then postfix `*`. Binary operators associate to the right.
trait Lang: Sized {
    fn atom(cur: &mut Cursor) -> Result<Self, ParseError>;
    fn seq(a: Self, b: Self) -> Self;
    fn choice(a: Self, b: Self) -> Self;
    fn par(a: Self, b: Self) -> Self;
    fn star(a: Self) -> Self;
}

fn par_level<L: Lang>(cur: &mut Cursor) -> Result<L, ParseError> {
    let lhs = choice_level::<L>(cur)?;
    if cur.eat(&Tok::Bar) {
        Ok(L::par(lhs, par_level::<L>(cur)?))
    } else {
        Ok(lhs)
    }
}

fn choice_level<L: Lang>(cur: &mut Cursor) -> Result<L, ParseError> {
    let lhs = seq_level::<L>(cur)?;
    if cur.eat(&Tok::Plus) {
        Ok(L::choice(lhs, choice_level::<L>(cur)?))
    } else {
        Ok(lhs)
    }
}

fn seq_level<L: Lang>(cur: &mut Cursor) -> Result<L, ParseError> {
    let lhs = postfix::<L>(cur)?;
    if cur.eat(&Tok::Semi) {
        Ok(L::seq(lhs, seq_level::<L>(cur)?))
    } else {
        Ok(lhs)
    }
}

fn postfix<L: Lang>(cur: &mut Cursor) -> Result<L, ParseError> {
    let mut t = if cur.eat(&Tok::LParen) {
        let inner = par_level::<L>(cur)?;
        cur.expect(&Tok::RParen)?;
        inner
    } else {
        L::atom(cur)?
    };
    while cur.eat(&Tok::Kleene) {
        t = L::star(t);
    }
    Ok(t)
}

fn scope_name(cur: &mut Cursor) -> Result<String, ParseError> {
    let pos = cur.pos();
    let name = cur.ident("a scope name")?;
    if name.starts_with(|c: char| c.is_ascii_uppercase()) {
        Ok(name)
    } else {
        Err(ParseError::syntax(pos, "a capitalised scope name", &format!("`{name}`")))
    }
}

fn reject_placeholder(cur: &Cursor) -> Result<(), ParseError> {
    if *cur.peek() == Tok::Placeholder {
        return Err(cur.unexpected("a term"));
    }
    Ok(())
}

impl Lang for Choreography {
    fn atom(cur: &mut Cursor) -> Result<Self, ParseError> {
        reject_placeholder(cur)?;
        if cur.eat(&Tok::Zero) {
            return Ok(Choreography::Zero);
        }
        if cur.eat(&Tok::One) {
            return Ok(Choreography::One);
        }
        match (cur.peek_at(1).clone(), cur.peek_at(2).clone()) {
            (Tok::Colon, Tok::LBrace) => {
                let name = scope_name(cur)?;
                cur.expect(&Tok::Colon)?;
                cur.expect(&Tok::LBrace)?;
                let mut roles = BTreeSet::new();
                roles.insert(cur.ident("a role")?);
                while cur.eat(&Tok::Comma) {
                    roles.insert(cur.ident("a role")?);
                }
                cur.expect(&Tok::RBrace)?;
                cur.expect(&Tok::LBrack)?;
                let body = par_level::<Choreography>(cur)?;
                cur.expect(&Tok::RBrack)?;
                Ok(Choreography::Scope { name, roles, body: Box::new(body) })
            }
            (Tok::LBrace, _) => {
                let scope = scope_name(cur)?;
                cur.expect(&Tok::LBrace)?;
                let role = cur.ident("a role")?;
                cur.expect(&Tok::Colon)?;
                let body = par_level::<Choreography>(cur)?;
                cur.expect(&Tok::RBrace)?;
                Ok(Choreography::Update { scope, role, body: Box::new(body) })
            }
            _ => {
                let op = cur.ident("an interaction, scope or update")?;
                cur.expect(&Tok::Colon)?;
                let from = cur.ident("a role")?;
                cur.expect(&Tok::Arrow)?;
                let to = cur.ident("a role")?;
                Ok(Choreography::Interaction { op, from, to })
            }
        }
    }

    fn seq(a: Self, b: Self) -> Self {
        Choreography::seq(a, b)
    }

    fn choice(a: Self, b: Self) -> Self {
        Choreography::choice(a, b)
    }

    fn par(a: Self, b: Self) -> Self {
        Choreography::par(a, b)
    }

    fn star(a: Self) -> Self {
        Choreography::star(a)
    }
}

impl Lang for Orchestration {
    fn atom(cur: &mut Cursor) -> Result<Self, ParseError> {
        reject_placeholder(cur)?;
        if cur.eat(&Tok::Zero) {
            return Ok(Orchestration::Zero);
        }
        if cur.eat(&Tok::One) {
            return Ok(Orchestration::One);
        }
        let next = cur.peek_at(1).clone();
        let pos = cur.pos();
        let name = cur.ident("an orchestration")?;
        match next {
            Tok::Question => {
                cur.bump();
                Ok(Orchestration::Receive(name))
            }
            Tok::Bang => {
                cur.bump();
                let to = cur.ident("a role")?;
                Ok(Orchestration::Send(name, to))
            }
            _ if name == "tau" => Ok(Orchestration::Tau),
            Tok::LBrack | Tok::LBrace if !name.starts_with(|c: char| c.is_ascii_uppercase()) => {
                Err(ParseError::syntax(pos, "a capitalised scope name", &format!("`{name}`")))
            }
            Tok::LBrack => {
                cur.bump();
                let body = par_level::<Orchestration>(cur)?;
                cur.expect(&Tok::RBrack)?;
                let active = *cur.peek() == Tok::At && *cur.peek_at(1) == Tok::Ident("A".into());
                if active {
                    cur.bump();
                    cur.bump();
                }
                Ok(Orchestration::Scope { name, body: Box::new(body), active })
            }
            Tok::LBrace => {
                cur.bump();
                cur.expect(&Tok::LParen)?;
                let mut roles = vec![cur.ident("a role")?];
                while cur.eat(&Tok::Comma) {
                    roles.push(cur.ident("a role")?);
                }
                cur.expect(&Tok::RParen)?;
                cur.expect(&Tok::Colon)?;
                let mut bodies = vec![par_level::<Orchestration>(cur)?];
                while cur.eat(&Tok::Comma) {
                    bodies.push(par_level::<Orchestration>(cur)?);
                }
                if bodies.len() != roles.len() {
                    return Err(cur.unexpected(&format!("{} update bodies", roles.len())));
                }
                cur.expect(&Tok::RBrace)?;
                Ok(Orchestration::Update { scope: name, roles, bodies })
            }
            _ => Err(ParseError::syntax(pos, "an orchestration", &format!("`{name}`"))),
        }
    }

    fn seq(a: Self, b: Self) -> Self {
        Orchestration::seq(a, b)
    }

    fn choice(a: Self, b: Self) -> Self {
        Orchestration::choice(a, b)
    }

    fn par(a: Self, b: Self) -> Self {
        Orchestration::par(a, b)
    }

    fn star(a: Self) -> Self {
        Orchestration::star(a)
    }
}

pub fn parse_choreography(text: &str) -> Result<Choreography, ParseError> {
    let mut cur = Cursor::new(text)?;
    let h = par_level::<Choreography>(&mut cur)?;
    cur.finish()?;
    Ok(h)
}

pub fn parse_orchestration(text: &str) -> Result<Orchestration, ParseError> {
    let mut cur = Cursor::new(text)?;
    let c = par_level::<Orchestration>(&mut cur)?;
    cur.finish()?;
    Ok(c)
}

/// Parses `[C1]@r1 || ... || [Cn]@rn`, rejecting repeated roles and
/// outputs a role addresses to itself.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut roles: Vec<(String, Orchestration)> = Vec::new();
    loop {
        cur.expect(&Tok::LBrack)?;
        let c = par_level::<Orchestration>(&mut cur)?;
        cur.expect(&Tok::RBrack)?;
        cur.expect(&Tok::At)?;
        let role = cur.ident("a role")?;
        if roles.iter().any(|(r, _)| *r == role) {
            return Err(ParseError::DuplicateRole(role));
        }
        if let Some(op) = c.sends_to(&role) {
            return Err(ParseError::SelfAddressedOutput { role, op });
        }
        roles.push((role, c));
        if !cur.eat(&Tok::BarBar) {
            break;
        }
    }
    cur.finish()?;
    Ok(System::new(roles))
}

// Printing: level 1 `|`, 2 `+`, 3 `;`, 4 atoms.
enum Shape<'a, T> {
    Bin(u8, &'a str, &'a T, &'a T),
    Star(&'a T),
    Atom,
}

fn shape_h(h: &Choreography) -> Shape<'_, Choreography> {
    match h {
        Choreography::Par(a, b) => Shape::Bin(1, " | ", a, b),
        Choreography::Choice(a, b) => Shape::Bin(2, " + ", a, b),
        Choreography::Seq(a, b) => Shape::Bin(3, " ; ", a, b),
        Choreography::Star(a) => Shape::Star(a),
        _ => Shape::Atom,
    }
}

fn shape_c(c: &Orchestration) -> Shape<'_, Orchestration> {
    match c {
        Orchestration::Par(a, b) => Shape::Bin(1, " | ", a, b),
        Orchestration::Choice(a, b) => Shape::Bin(2, " + ", a, b),
        Orchestration::Seq(a, b) => Shape::Bin(3, " ; ", a, b),
        Orchestration::Star(a) => Shape::Star(a),
        _ => Shape::Atom,
    }
}

fn level<T>(s: &Shape<'_, T>) -> u8 {
    match s {
        Shape::Bin(l, ..) => *l,
        _ => 4,
    }
}

fn write_term<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    t: &T,
    shape: fn(&T) -> Shape<'_, T>,
    atom: fn(&mut fmt::Formatter<'_>, &T) -> fmt::Result,
) -> fmt::Result {
    let operand = |f: &mut fmt::Formatter<'_>, x: &T, min: u8| {
        if level(&shape(x)) < min {
            write!(f, "({x})")
        } else {
            write!(f, "{x}")
        }
    };
    match shape(t) {
        Shape::Bin(l, sym, a, b) => {
            operand(f, a, l + 1)?;
            write!(f, "{sym}")?;
            operand(f, b, l)
        }
        Shape::Star(a) => write!(f, "({a})*"),
        Shape::Atom => atom(f, t),
    }
}

fn write_h_atom(f: &mut fmt::Formatter<'_>, h: &Choreography) -> fmt::Result {
    match h {
        Choreography::Zero => write!(f, "0"),
        Choreography::One => write!(f, "1"),
        Choreography::Interaction { op, from, to } => write!(f, "{op}:{from}->{to}"),
        Choreography::Scope { name, roles, body } => {
            let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
            write!(f, "{name}:{{{}}}[{body}]", roles.join(","))
        }
        Choreography::Update { scope, role, body } => write!(f, "{scope}{{{role}: {body}}}"),
        _ => unreachable!("composite choreography printed as atom"),
    }
}

fn write_c_atom(f: &mut fmt::Formatter<'_>, c: &Orchestration) -> fmt::Result {
    match c {
        Orchestration::Zero => write!(f, "0"),
        Orchestration::One => write!(f, "1"),
        Orchestration::Tau => write!(f, "tau"),
        Orchestration::Receive(a) => write!(f, "{a}?"),
        Orchestration::Send(a, s) => write!(f, "{a}!{s}"),
        Orchestration::Scope { name, body, active } => {
            write!(f, "{name}[{body}]{}", if *active { "@A" } else { "" })
        }
        Orchestration::Update { scope, roles, bodies } => {
            let bodies: Vec<String> = bodies.iter().map(|b| b.to_string()).collect();
            write!(f, "{scope}{{({}): {}}}", roles.join(","), bodies.join(", "))
        }
        _ => unreachable!("composite orchestration printed as atom"),
    }
}

impl fmt::Display for Choreography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, shape_h, write_h_atom)
    }
}

impl fmt::Display for Orchestration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, shape_c, write_c_atom)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (role, c)) in self.roles.iter().enumerate() {
            if i > 0 {
                write!(f, " || ")?;
            }
            write!(f, "[{c}]@{role}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choreography_precedence() {
        let h = parse_choreography("a:r->s ; b:s->r + c:r->s | d:t->u*").unwrap();
        let a = Choreography::interaction("a", "r", "s");
        let b = Choreography::interaction("b", "s", "r");
        let c = Choreography::interaction("c", "r", "s");
        let d = Choreography::interaction("d", "t", "u");
        assert_eq!(
            h,
            Choreography::par(Choreography::choice(Choreography::seq(a, b), c), Choreography::star(d))
        );
        let h = parse_choreography("a:r->s ; b:s->r ; c:r->s").unwrap();
        assert!(matches!(h, Choreography::Seq(_, ref rest) if matches!(**rest, Choreography::Seq(..))));
    }

    #[test]
    fn scopes_and_updates() {
        let h = parse_choreography("X:{Buyer,Bank}[Payment:Buyer->Bank] ; X{Bank: 1}").unwrap();
        let Choreography::Seq(scope, upd) = h else { panic!() };
        assert!(matches!(*scope, Choreography::Scope { ref roles, .. } if roles.len() == 2));
        assert!(matches!(*upd, Choreography::Update { ref role, .. } if role == "Bank"));
        assert!(parse_choreography("x:{r}[a:r->s]").is_err());
    }

    #[test]
    fn orchestrations() {
        let c = parse_orchestration("a? ; b!s + tau | X[c?]@A ; Y{(r,s): 1, d?}").unwrap();
        assert_eq!(parse_orchestration(&c.to_string()).unwrap(), c);
        assert_eq!(parse_orchestration("X[1]@A").unwrap(), Orchestration::Scope {
            name: "X".into(),
            body: Box::new(Orchestration::One),
            active: true
        });
        assert!(parse_orchestration("X{(r,s): 1}").is_err());
        assert!(parse_orchestration("a").is_err());
        assert!(parse_orchestration("x[a?]").is_err());
    }

    #[test]
    fn systems() {
        let p = parse_system("[a!s]@r || [a?]@s").unwrap();
        assert_eq!(p.to_string(), "[a!s]@r || [a?]@s");
        assert_eq!(parse_system("[a?]@r || [a?]@r"), Err(ParseError::DuplicateRole("r".into())));
        assert_eq!(
            parse_system("[a!r]@r"),
            Err(ParseError::SelfAddressedOutput { role: "r".into(), op: "a".into() })
        );
        assert_eq!(parse_system("[X[a?]@A]@A").unwrap().roles[0].0, "A");
        assert!(parse_system("[a?]@r ||").is_err());
    }

    #[test]
    fn round_trips() {
        for src in [
            "(a:r->s | b:s->r) ; c:r->s",
            "(a:r->s + b:r->s) + c:r->s",
            "a:r->s + (b:r->s + c:r->s)",
            "((a:r->s)*)*",
            "(a:r->s ; b:s->r)*",
            "X:{r,s}[a:r->s | 1] ; X{r: 0 + b:s->r}",
            "Request:Buyer->Seller ; (Offer:Seller->Buyer | PayDescr:Seller->Bank)",
        ] {
            let h = parse_choreography(src).unwrap();
            assert_eq!(parse_choreography(&h.to_string()).unwrap(), h, "{src}");
        }
        let h = parse_choreography("(a:r->s ; b:s->r) ; c:r->s").unwrap();
        assert_eq!(h.to_string(), "(a:r->s ; b:s->r) ; c:r->s");
    }

    #[test]
    fn placeholder_rejected() {
        assert!(parse_choreography("⋆").is_err());
        assert!(parse_orchestration("a? ; ⋆").is_err());
    }
}

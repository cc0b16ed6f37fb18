use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Zero,
    One,
    LBrack,
    RBrack,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Dot,
    Plus,
    Bar,
    BarBar,
    Bang,
    Caret,
    At,
    Colon,
    Semi,
    Comma,
    Kleene,
    Question,
    Arrow,
    Diamond,
    /// The unicode placeholder `⋆`, never valid in input.
    Placeholder,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::Zero => "0",
            Tok::One => "1",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Bar => "|",
            Tok::BarBar => "||",
            Tok::Bang => "!",
            Tok::Caret => "^",
            Tok::At => "@",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Kleene => "*",
            Tok::Question => "?",
            Tok::Arrow => "->",
            Tok::Diamond => "<>",
            Tok::Placeholder => "⋆",
            Tok::Eof => "",
        }
    }
}

/// Splits `src` into tokens with their byte offsets. `#` starts a line comment.
pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut ident = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(ident), pos));
            continue;
        }
        chars.next();
        let next = chars.peek().map(|&(_, c)| c);
        let tok = match c {
            '0' | '1' if next.is_some_and(|n| n.is_ascii_digit()) => {
                return Err(ParseError::syntax(pos, "`0` or `1`", "a multi-digit number"));
            }
            '0' => Tok::Zero,
            '1' => Tok::One,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '|' if next == Some('|') => {
                chars.next();
                Tok::BarBar
            }
            '|' => Tok::Bar,
            '!' => Tok::Bang,
            '^' => Tok::Caret,
            '@' => Tok::At,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '*' => Tok::Kleene,
            '?' => Tok::Question,
            '-' if next == Some('>') => {
                chars.next();
                Tok::Arrow
            }
            '<' if next == Some('>') => {
                chars.next();
                Tok::Diamond
            }
            '⋆' => Tok::Placeholder,
            other => {
                return Err(ParseError::syntax(pos, "a token", &format!("`{other}`")));
            }
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

/// Cursor over a token stream.
pub(crate) struct Cursor {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: tokenize(src)?, at: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.at + ahead).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    pub(crate) fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::syntax(self.pos(), expected, &self.peek().describe())
    }

    pub(crate) fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

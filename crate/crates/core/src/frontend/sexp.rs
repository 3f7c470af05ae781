//! S-expression reader with SMT-LIB string and symbol conventions.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbols, numerals and `#x`/`#b` literals.
    Atom(String, Pos),
    /// A string literal, already unescaped.
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l, _) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => f.write_str(a),
            Sexp::Str(s, _) => write!(f, "{}", crate::semantics::Value::str(s)),
            Sexp::List(l, _) => {
                f.write_str("(")?;
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn err<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError { pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn string(&mut self, start: Pos) -> Result<Sexp, SyntaxError> {
        let mut out = String::new();
        loop {
            let here = self.pos;
            match self.bump() {
                None => return self.err(start, "unterminated string literal"),
                Some('"') => {
                    if self.chars.peek() == Some(&'"') {
                        self.bump();
                        out.push('"');
                    } else {
                        return Ok(Sexp::Str(out, start));
                    }
                }
                Some('\\') if self.chars.peek() == Some(&'u') => {
                    self.bump();
                    out.push(self.unicode_escape(here)?);
                }
                Some(c) if c.is_ascii() => out.push(c),
                Some(c) => return self.err(here, format!("non-ASCII character {c:?} in string literal")),
            }
        }
    }

    // \u{h..h} or \udddd
    fn unicode_escape(&mut self, at: Pos) -> Result<char, SyntaxError> {
        let mut hex = String::new();
        if self.chars.peek() == Some(&'{') {
            self.bump();
            loop {
                match self.bump() {
                    Some('}') => break,
                    Some(c) if c.is_ascii_hexdigit() && hex.len() < 5 => hex.push(c),
                    _ => return self.err(at, "malformed \\u{...} escape"),
                }
            }
        } else {
            for _ in 0..4 {
                match self.bump() {
                    Some(c) if c.is_ascii_hexdigit() => hex.push(c),
                    _ => return self.err(at, "malformed \\u escape"),
                }
            }
        }
        let code = u32::from_str_radix(&hex, 16).map_err(|_| SyntaxError { pos: at, message: "empty escape".into() })?;
        match char::from_u32(code) {
            Some(c) if c.is_ascii() => Ok(c),
            _ => self.err(at, format!("escape \\u{{{hex}}} is outside ASCII")),
        }
    }

    fn expr(&mut self) -> Result<Sexp, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.peek().copied() {
            None => self.err(start, "unexpected end of input"),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return self.err(start, "unclosed parenthesis"),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        _ => items.push(self.expr()?),
                    }
                }
            }
            Some(')') => self.err(start, "unexpected ')'"),
            Some('"') => {
                self.bump();
                self.string(start)
            }
            Some('|') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated quoted symbol"),
                        Some('|') => return Ok(Sexp::Atom(s, start)),
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(s, start))
            }
        }
    }
}

/// Read every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut r = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, col: 1 } };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(r.expr()?);
    }
}

/// Read exactly one expression.
pub fn parse_one(text: &str) -> Result<Sexp, SyntaxError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(SyntaxError { pos: Pos { line: 1, col: 1 }, message: "empty input".into() }),
        _ => Err(SyntaxError { pos: all[1].pos(), message: "trailing input".into() }),
    }
}

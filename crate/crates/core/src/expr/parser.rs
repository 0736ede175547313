//! Recursive descent parser for coefficient expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers resolve against the coordinate names given by the caller and
//! the built-in functions `sin cos exp log sqrt`. Exponents are integer
//! literals, optionally negative.

use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid coordinate name `{0}`")]
    InvalidCoordinate(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(offset: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax(msg.into()),
        offset,
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match b {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integral = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lexeme = &text[start..i];
                let value: f64 = lexeme
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lexeme}`")))?;
                out.push((Tok::Num(value, integral), start));
                continue;
            }
            b if is_ident_start(b) => {
                while i < bytes.len() && is_ident_continue(bytes[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.0)
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!(
                    "expected {}, found {}",
                    want.describe(),
                    self.peek().describe()
                ),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.factor()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.factor()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // `-2` is the literal −2, but `-2^2` is −(2²)
            if let Tok::Num(v, _) = *self.peek() {
                if self.peek_at(1) != Some(&Tok::Caret) {
                    self.bump();
                    return Ok(Expr::constant(-v));
                }
            }
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v, true) if v <= i32::MAX as f64 => {
                let n = v as i32;
                Ok(base.powi(if negative { -n } else { n }))
            }
            Tok::Num(..) => Err(syntax(at, "exponent must be an integer literal")),
            other => Err(syntax(
                at,
                format!("expected integer exponent, found {}", other.describe()),
            )),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v, _) => Ok(Expr::constant(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, at),
            other => Err(syntax(at, format!("unexpected {}", other.describe()))),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        let called = *self.peek() == Tok::LParen;
        if let Some(index) = self.names.iter().position(|n| *n == name) {
            if called {
                let found = self.arguments()?.len();
                return Err(ParseError {
                    kind: ParseErrorKind::Arity {
                        name,
                        expected: 0,
                        found,
                    },
                    offset: at,
                });
            }
            return Ok(Expr::var(index));
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ParseError {
                kind: ParseErrorKind::UnknownIdentifier(name),
                offset: at,
            });
        };
        if !called {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    name,
                    expected: 1,
                    found: 0,
                },
                offset: at,
            });
        }
        let mut args = self.arguments()?;
        if args.len() != 1 {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    name,
                    expected: 1,
                    found: args.len(),
                },
                offset: at,
            });
        }
        Ok(Expr::new(Node::Call(func, args.remove(0))))
    }

    /// Parses `'(' expr (',' expr)* ')'`.
    fn arguments(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }
}

/// Parses `text` with variables resolved against `coordinates` (variable
/// `coordinates[i]` becomes index `i`).
pub fn parse(text: &str, coordinates: &[String]) -> Result<Expr, ParseError> {
    for name in coordinates {
        let valid = name.bytes().next().is_some_and(is_ident_start)
            && name.bytes().all(is_ident_continue)
            && Func::from_name(name).is_none();
        if !valid {
            return Err(ParseError {
                kind: ParseErrorKind::InvalidCoordinate(name.clone()),
                offset: 0,
            });
        }
    }
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        names: coordinates,
    };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(syntax(
            parser.offset(),
            format!("unexpected {}", parser.peek().describe()),
        ));
    }
    Ok(e)
}

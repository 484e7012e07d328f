//! Recursive-descent parser for signatures.
//!
//! ```text
//! decl  ::= IDENT ':' expr ('=' expr)? '.'
//! expr  ::= '{' IDENT (':' expr)? '}' expr
//!         | '[' IDENT ']' expr
//!         | app ('->' expr)?
//! app   ::= atom+ ('[' IDENT ']' expr)?
//! atom  ::= IDENT | '_' | 'type' | 'cotype' | '(' expr ')'
//! ```

use std::fmt;

use crate::surface::{is_capitalized, Expr, ExprKind, Name, SurfaceDecl};
use crate::token::{lex, Pos, Span, Token, TokenKind};

/// Maximum nesting of binders, arrows and parentheses.
pub const MAX_DEPTH: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    IllegalChar(char),
    InvalidUtf8,
    Unexpected { found: String, expected: String },
    UnexpectedEof { expected: String },
    Unbalanced { open: char, open_pos: Pos },
    TooDeep,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
    /// Name of the declaration being parsed, when it got that far.
    pub decl: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.pos)?;
        match &self.kind {
            ParseErrorKind::IllegalChar(c) => write!(f, "illegal character {c:?}"),
            ParseErrorKind::InvalidUtf8 => f.write_str("input is not valid UTF-8"),
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnexpectedEof { expected } => {
                write!(f, "expected {expected}, found end of input")
            }
            ParseErrorKind::Unbalanced { open, open_pos } => {
                write!(f, "unbalanced `{open}` opened at {open_pos}")
            }
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH}"),
        }
    }
}

/// Result of parsing a whole file with recovery.
#[derive(Clone, Debug, Default)]
pub struct Parsed {
    pub decls: Vec<SurfaceDecl>,
    pub errors: Vec<ParseError>,
}

/// Parse a signature, failing on the first error.
pub fn parse_signature(text: &str) -> Result<Vec<SurfaceDecl>, ParseError> {
    let parsed = parse_recovering(text);
    match parsed.errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(parsed.decls),
    }
}

/// Parse raw bytes; invalid UTF-8 is reported at its location.
pub fn parse_bytes(bytes: &[u8]) -> Parsed {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_recovering(text),
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let text = std::str::from_utf8(good).unwrap_or_default();
            let mut pos = Pos {
                offset: good.len(),
                line: 1,
                col: 1,
            };
            for c in text.chars() {
                if c == '\n' {
                    pos.line += 1;
                    pos.col = 1;
                } else {
                    pos.col += 1;
                }
            }
            Parsed {
                decls: Vec::new(),
                errors: vec![ParseError {
                    pos,
                    kind: ParseErrorKind::InvalidUtf8,
                    decl: None,
                }],
            }
        }
    }
}

/// Parse a signature. A malformed declaration is skipped up to the next
/// period and parsing resumes after it.
pub fn parse_recovering(text: &str) -> Parsed {
    let tokens = lex(text);
    let end = tokens.last().map(|t| t.span.end).unwrap_or(Pos {
        offset: 0,
        line: 1,
        col: 1,
    });
    let mut p = Parser {
        tokens,
        i: 0,
        end,
        depth: 0,
        bound: Vec::new(),
    };
    let mut out = Parsed::default();
    while p.i < p.tokens.len() {
        let start = p.i;
        match p.decl() {
            Ok(d) => out.decls.push(d),
            Err(mut e) => {
                if e.decl.is_none() {
                    if let Some(TokenKind::Ident(n)) = p.tokens.get(start).map(|t| &t.kind) {
                        e.decl = Some(n.clone());
                    }
                }
                out.errors.push(e);
                let mut j = p.i.max(start);
                while j < p.tokens.len() && p.tokens[j].kind != TokenKind::Period {
                    j += 1;
                }
                p.i = j + 1;
            }
        }
    }
    out
}

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    end: Pos,
    depth: usize,
    bound: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.i)
    }

    fn err_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => match t.kind {
                TokenKind::Illegal(c) => ParseError {
                    pos: t.span.start,
                    kind: ParseErrorKind::IllegalChar(c),
                    decl: None,
                },
                _ => ParseError {
                    pos: t.span.start,
                    kind: ParseErrorKind::Unexpected {
                        found: t.kind.to_string(),
                        expected: expected.to_string(),
                    },
                    decl: None,
                },
            },
            None => ParseError {
                pos: self.end,
                kind: ParseErrorKind::UnexpectedEof {
                    expected: expected.to_string(),
                },
                decl: None,
            },
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> Option<Span> {
        match self.peek() {
            Some(t) if &t.kind == kind => {
                let s = t.span;
                self.i += 1;
                Some(s)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> PResult<Span> {
        self.eat(kind).ok_or_else(|| self.err_here(expected))
    }

    fn close(&mut self, kind: &TokenKind, open: char, open_span: Span) -> PResult<Span> {
        match self.eat(kind) {
            Some(s) => Ok(s),
            None => {
                let mut e = self.err_here(&kind.to_string());
                if matches!(
                    e.kind,
                    ParseErrorKind::Unexpected { .. } | ParseErrorKind::UnexpectedEof { .. }
                ) {
                    e.kind = ParseErrorKind::Unbalanced {
                        open,
                        open_pos: open_span.start,
                    };
                }
                Err(e)
            }
        }
    }

    fn ident(&mut self, expected: &str) -> PResult<Name> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                span,
            }) => {
                let n = Name::new(s.clone(), *span);
                self.i += 1;
                Ok(n)
            }
            _ => Err(self.err_here(expected)),
        }
    }

    fn decl(&mut self) -> PResult<SurfaceDecl> {
        self.bound.clear();
        self.depth = 0;
        let name = self.ident("a declaration name")?;
        let attach = |mut e: ParseError, n: &Name| {
            e.decl = Some(n.text.clone());
            e
        };
        self.expect(&TokenKind::Colon, "`:`")
            .map_err(|e| attach(e, &name))?;
        let class = self.expr().map_err(|e| attach(e, &name))?;
        let body = if self.eat(&TokenKind::Equals).is_some() {
            Some(self.expr().map_err(|e| attach(e, &name))?)
        } else {
            None
        };
        let end = self
            .expect(&TokenKind::Period, "`.`")
            .map_err(|e| attach(e, &name))?;
        Ok(SurfaceDecl {
            span: name.span.to(end),
            name,
            class,
            body,
            implicit: 0,
        })
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let pos = self.peek().map(|t| t.span.start).unwrap_or(self.end);
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::TooDeep,
                decl: None,
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.expr_inner();
        self.depth -= 1;
        r
    }

    fn with_bound<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.bound.push(name.to_string());
        let r = f(self);
        self.bound.pop();
        r
    }

    fn expr_inner(&mut self) -> PResult<Expr> {
        match self.peek().map(|t| (t.kind.clone(), t.span)) {
            Some((TokenKind::LBrace, open)) => {
                self.i += 1;
                let x = self.ident("a binder name")?;
                let dom = if self.eat(&TokenKind::Colon).is_some() {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.close(&TokenKind::RBrace, '{', open)?;
                let body = self.with_bound(&x.text, |p| p.expr())?;
                let span = open.to(body.span);
                Ok(Expr::new(
                    match dom {
                        Some(a) => ExprKind::PiExplicit(x, Box::new(a), Box::new(body)),
                        None => ExprKind::PiBare(x, Box::new(body)),
                    },
                    span,
                ))
            }
            Some((TokenKind::LBracket, _)) => self.lambda(),
            _ => {
                let lhs = self.app()?;
                if self.eat(&TokenKind::Arrow).is_some() {
                    let rhs = self.expr()?;
                    let span = lhs.span.to(rhs.span);
                    Ok(Expr::new(
                        ExprKind::Arrow(Box::new(lhs), Box::new(rhs)),
                        span,
                    ))
                } else {
                    Ok(lhs)
                }
            }
        }
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let open = self.expect(&TokenKind::LBracket, "`[`")?;
        let x = self.ident("a bound variable")?;
        self.close(&TokenKind::RBracket, '[', open)?;
        let body = self.with_bound(&x.text, |p| p.expr())?;
        let span = open.to(body.span);
        Ok(Expr::new(ExprKind::LamBracket(x, Box::new(body)), span))
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek().map(|t| &t.kind),
            Some(
                TokenKind::Ident(_)
                    | TokenKind::Underscore
                    | TokenKind::Type
                    | TokenKind::Cotype
                    | TokenKind::LParen
            )
        )
    }

    fn app(&mut self) -> PResult<Expr> {
        let mut items = vec![self.atom()?];
        loop {
            if self.starts_atom() {
                items.push(self.atom()?);
            } else if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LBracket)) {
                self.enter()?;
                let lam = self.lambda();
                self.depth -= 1;
                items.push(lam?);
                break;
            } else {
                break;
            }
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        let span = items[0].span.to(items.last().unwrap().span);
        let head = items.remove(0);
        let mut flat = match head.kind {
            ExprKind::Application(inner) => inner,
            _ => vec![head],
        };
        flat.extend(items);
        Ok(Expr::new(ExprKind::Application(flat), span))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err_here("an expression"));
        };
        let kind = match tok.kind {
            TokenKind::Ident(s) => {
                if is_capitalized(&s) && !self.bound.contains(&s) {
                    ExprKind::CapitalVar(s)
                } else {
                    ExprKind::Ident(s)
                }
            }
            TokenKind::Underscore => ExprKind::Underscore,
            TokenKind::Type => ExprKind::Type,
            TokenKind::Cotype => ExprKind::Cotype,
            TokenKind::LParen => {
                self.i += 1;
                let inner = self.expr()?;
                let close = self.close(&TokenKind::RParen, '(', tok.span)?;
                return Ok(Expr::new(inner.kind, tok.span.to(close)));
            }
            _ => return Err(self.err_here("an expression")),
        };
        self.i += 1;
        Ok(Expr::new(kind, tok.span))
    }
}

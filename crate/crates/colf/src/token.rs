//! Lexer for the concrete syntax.

use std::fmt;

/// A position in the source text. Lines and columns count from 1.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A half-open source range.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Span {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start.offset <= other.start.offset && other.end.offset <= self.end.offset
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Colon,
    Period,
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Equals,
    Underscore,
    Type,
    Cotype,
    Illegal(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Period => f.write_str("`.`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Equals => f.write_str("`=`"),
            TokenKind::Underscore => f.write_str("`_`"),
            TokenKind::Type => f.write_str("`type`"),
            TokenKind::Cotype => f.write_str("`cotype`"),
            TokenKind::Illegal(c) => write!(f, "illegal character {c:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: illegal character {ch:?}")]
pub struct LexError {
    pub pos: Pos,
    pub ch: char,
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '/' | '_' | '\'' | '*')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        self.pos.offset += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }
}

/// Split `text` into tokens. Whitespace and `%` line comments are skipped.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let toks = lex(text);
    match toks.iter().find_map(|t| match t.kind {
        TokenKind::Illegal(ch) => Some(LexError {
            pos: t.span.start,
            ch,
        }),
        _ => None,
    }) {
        Some(e) => Err(e),
        None => Ok(toks),
    }
}

/// Like [`tokenize`], but illegal characters become [`TokenKind::Illegal`]
/// tokens so that the parser can resynchronise after them.
pub fn lex(text: &str) -> Vec<Token> {
    let mut cur = Cursor {
        chars: text.char_indices().peekable(),
        pos: Pos {
            offset: 0,
            line: 1,
            col: 1,
        },
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.pos;
        if c.is_ascii_whitespace() {
            cur.bump();
            continue;
        }
        if c == '%' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let single = match c {
            ':' => Some(TokenKind::Colon),
            '.' => Some(TokenKind::Period),
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            '[' => Some(TokenKind::LBracket),
            ']' => Some(TokenKind::RBracket),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            '=' => Some(TokenKind::Equals),
            _ => None,
        };
        if let Some(kind) = single {
            cur.bump();
            out.push(Token {
                kind,
                span: Span::new(start, cur.pos),
            });
            continue;
        }
        if c == '-' {
            cur.bump();
            if cur.peek() == Some('>') {
                cur.bump();
                out.push(Token {
                    kind: TokenKind::Arrow,
                    span: Span::new(start, cur.pos),
                });
                continue;
            }
            out.push(Token {
                kind: TokenKind::Illegal('-'),
                span: Span::new(start, cur.pos),
            });
            continue;
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                cur.bump();
            }
            let kind = match s.as_str() {
                "_" => TokenKind::Underscore,
                "type" => TokenKind::Type,
                "cotype" => TokenKind::Cotype,
                _ => TokenKind::Ident(s),
            };
            out.push(Token {
                kind,
                span: Span::new(start, cur.pos),
            });
            continue;
        }
        cur.bump();
        out.push(Token {
            kind: TokenKind::Illegal(c),
            span: Span::new(start, cur.pos),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn slash_names_are_single_identifiers() {
        assert_eq!(kinds("subtp/arr"), vec![TokenKind::Ident("subtp/arr".into())]);
        assert_eq!(kinds("s_sub_t r'"), vec![
            TokenKind::Ident("s_sub_t".into()),
            TokenKind::Ident("r'".into())
        ]);
    }

    #[test]
    fn delimiters_split() {
        assert_eq!(
            kinds("{x : A2} K"),
            vec![
                TokenKind::LBrace,
                TokenKind::Ident("x".into()),
                TokenKind::Colon,
                TokenKind::Ident("A2".into()),
                TokenKind::RBrace,
                TokenKind::Ident("K".into()),
            ]
        );
    }

    #[test]
    fn eleven_tokens() {
        let toks = tokenize("ev_s : odd X -> even (cosucc X).").unwrap();
        assert_eq!(toks.len(), 11);
        assert_eq!(toks.last().unwrap().kind, TokenKind::Period);
    }

    #[test]
    fn comments_and_keywords() {
        assert_eq!(
            kinds("% a comment\nnat : type. % trailing\n"),
            vec![
                TokenKind::Ident("nat".into()),
                TokenKind::Colon,
                TokenKind::Type,
                TokenKind::Period
            ]
        );
        assert_eq!(kinds("_ cotype"), vec![TokenKind::Underscore, TokenKind::Cotype]);
    }

    #[test]
    fn positions_are_tracked() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].span.start.line, 2);
        assert_eq!(toks[1].span.start.col, 3);
    }

    #[test]
    fn illegal_characters_are_located() {
        let e = tokenize("a : b ; c").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col, e.ch), (1, 7, ';'));
        assert!(tokenize("é").is_err());
        assert!(tokenize("a - b").is_err());
    }
}

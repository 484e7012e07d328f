//! Surface syntax trees produced by the parser.

use std::fmt;

use crate::token::Span;

/// An identifier occurrence together with its location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

impl Name {
    pub fn new(text: impl Into<String>, span: Span) -> Name {
        Name {
            text: text.into(),
            span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Ident(String),
    /// A capitalised identifier not bound by any enclosing binder.
    CapitalVar(String),
    /// Head followed by at least one argument.
    Application(Vec<Expr>),
    Arrow(Box<Expr>, Box<Expr>),
    PiExplicit(Name, Box<Expr>, Box<Expr>),
    PiBare(Name, Box<Expr>),
    LamBracket(Name, Box<Expr>),
    Underscore,
    Type,
    Cotype,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// The same tree with every span reset, for structural comparison.
    pub fn strip_spans(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Application(items) => {
                ExprKind::Application(items.iter().map(Expr::strip_spans).collect())
            }
            ExprKind::Arrow(a, b) => {
                ExprKind::Arrow(Box::new(a.strip_spans()), Box::new(b.strip_spans()))
            }
            ExprKind::PiExplicit(x, a, b) => ExprKind::PiExplicit(
                strip_name(x),
                Box::new(a.strip_spans()),
                Box::new(b.strip_spans()),
            ),
            ExprKind::PiBare(x, b) => ExprKind::PiBare(strip_name(x), Box::new(b.strip_spans())),
            ExprKind::LamBracket(x, b) => {
                ExprKind::LamBracket(strip_name(x), Box::new(b.strip_spans()))
            }
            other => other.clone(),
        };
        Expr {
            kind,
            span: Span::default(),
        }
    }

    fn is_binder_form(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Arrow(..)
                | ExprKind::PiExplicit(..)
                | ExprKind::PiBare(..)
                | ExprKind::LamBracket(..)
        )
    }

    /// Visit every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Application(items) => items.iter().for_each(|e| e.walk(f)),
            ExprKind::Arrow(a, b) | ExprKind::PiExplicit(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::PiBare(_, b) | ExprKind::LamBracket(_, b) => b.walk(f),
            _ => {}
        }
    }
}

fn strip_name(n: &Name) -> Name {
    Name::new(n.text.clone(), Span::default())
}

/// One top-level declaration `name : class.` or `name : class = body.`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceDecl {
    pub name: Name,
    pub class: Expr,
    pub body: Option<Expr>,
    pub span: Span,
    /// Number of leading binders that were introduced for capitalised free
    /// variables and therefore receive implicit arguments at use sites.
    pub implicit: usize,
}

impl SurfaceDecl {
    pub fn strip_spans(&self) -> SurfaceDecl {
        SurfaceDecl {
            name: strip_name(&self.name),
            class: self.class.strip_spans(),
            body: self.body.as_ref().map(Expr::strip_spans),
            span: Span::default(),
            implicit: self.implicit,
        }
    }

    pub fn is_recdef(&self) -> bool {
        self.body.is_some()
    }
}

fn write_arg(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if e.is_binder_form() || matches!(e.kind, ExprKind::Application(_)) {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Ident(s) | ExprKind::CapitalVar(s) => f.write_str(s),
            ExprKind::Underscore => f.write_str("_"),
            ExprKind::Type => f.write_str("type"),
            ExprKind::Cotype => f.write_str("cotype"),
            ExprKind::Application(items) => {
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write_arg(f, e)?;
                }
                Ok(())
            }
            ExprKind::Arrow(a, b) => {
                if a.is_binder_form() {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
            ExprKind::PiExplicit(x, a, b) => write!(f, "{{{} : {a}}} {b}", x.text),
            ExprKind::PiBare(x, b) => write!(f, "{{{}}} {b}", x.text),
            ExprKind::LamBracket(x, b) => write!(f, "[{}] {b}", x.text),
        }
    }
}

impl fmt::Display for SurfaceDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.name.text, self.class)?;
        if let Some(body) = &self.body {
            write!(f, " = {body}")?;
        }
        f.write_str(".")
    }
}

/// Print a whole file, one declaration per line.
pub fn print_decls(decls: &[SurfaceDecl]) -> String {
    let mut out = String::new();
    for d in decls {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

pub fn is_capitalized(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

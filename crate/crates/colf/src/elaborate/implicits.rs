use std::collections::HashSet;

use crate::surface::{Expr, ExprKind, Name, SurfaceDecl};

/// Bind every free capitalised identifier of a family or constructor
/// declaration with an outermost `{X : _}`, in order of first occurrence.
/// Capitalised names that are declared constants are left as constants.
pub fn abstract_implicits(d: &SurfaceDecl, constants: &HashSet<String>) -> SurfaceDecl {
    if d.body.is_some() {
        return d.clone();
    }
    let mut found: Vec<Name> = Vec::new();
    d.class.walk(&mut |e| {
        if let ExprKind::CapitalVar(n) = &e.kind {
            if !constants.contains(n) && !found.iter().any(|f| &f.text == n) {
                found.push(Name::new(n.clone(), e.span));
            }
        }
    });
    let mut class = resolve_capitals(&d.class);
    for name in found.iter().rev() {
        let span = name.span;
        class = Expr::new(
            ExprKind::PiExplicit(
                name.clone(),
                Box::new(Expr::new(ExprKind::Underscore, span)),
                Box::new(class),
            ),
            d.class.span,
        );
    }
    SurfaceDecl {
        class,
        implicit: d.implicit + found.len(),
        ..d.clone()
    }
}

fn resolve_capitals(e: &Expr) -> Expr {
    let kind = match &e.kind {
        ExprKind::CapitalVar(n) => ExprKind::Ident(n.clone()),
        ExprKind::Application(items) => {
            ExprKind::Application(items.iter().map(resolve_capitals).collect())
        }
        ExprKind::Arrow(a, b) => {
            ExprKind::Arrow(Box::new(resolve_capitals(a)), Box::new(resolve_capitals(b)))
        }
        ExprKind::PiExplicit(x, a, b) => ExprKind::PiExplicit(
            x.clone(),
            Box::new(resolve_capitals(a)),
            Box::new(resolve_capitals(b)),
        ),
        ExprKind::PiBare(x, b) => ExprKind::PiBare(x.clone(), Box::new(resolve_capitals(b))),
        ExprKind::LamBracket(x, b) => {
            ExprKind::LamBracket(x.clone(), Box::new(resolve_capitals(b)))
        }
        other => other.clone(),
    };
    Expr::new(kind, e.span)
}

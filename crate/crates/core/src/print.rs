//! Printing core syntax in the concrete syntax accepted by the parser.
//!
//! Bound variables get names that are unique in scope and never clash with
//! a declared constant. Non-dependent Π-types print as arrows. Π flavors are
//! not shown: the elaborator re-infers them.

use crate::syntax::*;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

/// Stateful printer. Names chosen for free variables are stable across
/// calls on the same printer.
#[derive(Default)]
pub struct Printer {
    reserved: BTreeSet<String>,
    names: BTreeMap<Var, String>,
    in_use: BTreeMap<String, usize>,
}

impl Printer {
    pub fn new() -> Printer {
        Printer::default()
    }

    /// A printer that will not reuse any constant name of `sig`.
    pub fn for_signature(sig: &Signature) -> Printer {
        let mut p = Printer::new();
        for d in sig.decls() {
            p.reserved.insert(d.name.to_string());
        }
        p
    }

    pub fn reserve(&mut self, name: &str) {
        self.reserved.insert(name.to_string());
    }

    fn taken(&self, name: &str) -> bool {
        self.reserved.contains(name)
            || self.in_use.get(name).is_some_and(|n| *n > 0)
            || matches!(name, "type" | "cotype" | "_")
    }

    fn choose(&self, base: &str) -> String {
        let base = if base.is_empty() || base == "_" {
            "x"
        } else {
            base
        };
        if !self.taken(base) {
            return base.to_string();
        }
        let mut i = 1usize;
        loop {
            let candidate = format!("{base}_{i}");
            if !self.taken(&candidate) {
                return candidate;
            }
            i += 1;
        }
    }

    fn bind(&mut self, x: &Var) -> String {
        let name = self.choose(x.name());
        *self.in_use.entry(name.clone()).or_insert(0) += 1;
        self.names.insert(x.clone(), name.clone());
        name
    }

    fn unbind(&mut self, x: &Var) {
        if let Some(name) = self.names.remove(x) {
            if let Some(n) = self.in_use.get_mut(&name) {
                *n -= 1;
            }
        }
    }

    fn var(&mut self, x: &Var) -> String {
        if let Some(n) = self.names.get(x) {
            return n.clone();
        }
        // Free variable: name it permanently.
        self.bind(x)
    }

    pub fn term(&mut self, m: &Term) -> String {
        let mut s = String::new();
        self.write_term(&mut s, m, false);
        s
    }

    pub fn neutral(&mut self, r: &Neutral) -> String {
        let mut s = String::new();
        self.write_neutral(&mut s, r, false);
        s
    }

    pub fn spine(&mut self, sp: &Spine) -> String {
        let mut s = String::from("(");
        for (i, e) in sp.iter().enumerate() {
            if i > 0 {
                s.push_str("; ");
            }
            match e {
                SpineEntry::Term(m) => self.write_term(&mut s, m, false),
                SpineEntry::Prepat(x) => {
                    let n = self.var(x);
                    let _ = write!(s, "[{n}]");
                }
            }
        }
        s.push(')');
        s
    }

    pub fn ty(&mut self, a: &Type) -> String {
        let mut s = String::new();
        self.write_type(&mut s, a, false);
        s
    }

    pub fn kind(&mut self, k: &Kind) -> String {
        let mut s = String::new();
        self.write_kind(&mut s, k);
        s
    }

    pub fn decl(&mut self, d: &Decl) -> String {
        let mut s = String::new();
        s.push_str(&d.name);
        s.push_str(" : ");
        match &d.kind {
            DeclKind::Family(k) => self.write_kind(&mut s, k),
            DeclKind::Constructor(a) => self.write_type(&mut s, a, false),
            DeclKind::RecDef { ty, body } => {
                self.write_type(&mut s, ty, false);
                s.push_str(" = ");
                self.write_term(&mut s, body, false);
            }
        }
        s.push('.');
        s
    }

    pub fn signature(&mut self, sig: &Signature) -> String {
        let mut s = String::new();
        for d in sig.decls() {
            s.push_str(&self.decl(d));
            s.push('\n');
        }
        s
    }

    fn write_term(&mut self, s: &mut String, m: &Term, atomic: bool) {
        match m {
            Term::Lam(x, body) => {
                if atomic {
                    s.push('(');
                }
                let n = self.bind(x);
                let _ = write!(s, "[{n}] ");
                self.write_term(s, body, false);
                self.unbind(x);
                if atomic {
                    s.push(')');
                }
            }
            Term::Neutral(r) => self.write_neutral(s, r, atomic),
        }
    }

    fn write_neutral(&mut self, s: &mut String, r: &Neutral, atomic: bool) {
        let paren = atomic && !r.spine.is_empty();
        if paren {
            s.push('(');
        }
        match &r.head {
            Head::Var(x) => {
                let n = self.var(x);
                s.push_str(&n);
            }
            Head::Const(c) | Head::Rec(c) => s.push_str(c),
        }
        self.write_args(s, &r.spine);
        if paren {
            s.push(')');
        }
    }

    fn write_args(&mut self, s: &mut String, spine: &Spine) {
        for e in spine {
            s.push(' ');
            match e {
                SpineEntry::Term(m) => self.write_term(s, m, true),
                SpineEntry::Prepat(x) => {
                    let n = self.var(x);
                    s.push_str(&n);
                }
            }
        }
    }

    fn write_type(&mut self, s: &mut String, a: &Type, left_of_arrow: bool) {
        match a {
            Type::Atomic(p) => {
                s.push_str(&p.family);
                self.write_args(s, &p.spine);
            }
            Type::Pi(b, body) => {
                if left_of_arrow {
                    s.push('(');
                }
                if body.free_vars().contains(&b.var) {
                    let mut dom = String::new();
                    self.write_type(&mut dom, &b.ty, false);
                    let n = self.bind(&b.var);
                    let _ = write!(s, "{{{n} : {dom}}} ");
                    self.write_type(s, body, false);
                    self.unbind(&b.var);
                } else {
                    self.write_type(s, &b.ty, true);
                    s.push_str(" -> ");
                    self.write_type(s, body, false);
                }
                if left_of_arrow {
                    s.push(')');
                }
            }
        }
    }

    fn write_kind(&mut self, s: &mut String, k: &Kind) {
        match k {
            Kind::Type => s.push_str("type"),
            Kind::Cotype => s.push_str("cotype"),
            Kind::Pi(b, body) => {
                if body.free_vars().contains(&b.var) {
                    let mut dom = String::new();
                    self.write_type(&mut dom, &b.ty, false);
                    let n = self.bind(&b.var);
                    let _ = write!(s, "{{{n} : {dom}}} ");
                    self.write_kind(s, body);
                    self.unbind(&b.var);
                } else {
                    self.write_type(s, &b.ty, true);
                    s.push_str(" -> ");
                    self.write_kind(s, body);
                }
            }
        }
    }
}

macro_rules! display_via {
    ($ty:ty, $method:ident) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&Printer::new().$method(self))
            }
        }
    };
}

display_via!(Term, term);
display_via!(Neutral, neutral);
display_via!(Type, ty);
display_via!(Kind, kind);
display_via!(Decl, decl);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Printer::for_signature(self).signature(self))
    }
}

/// Render a spine in `(M; [x]; ...)` notation.
pub fn spine_to_string(s: &Spine) -> String {
    Printer::new().spine(s)
}

/// Render a list of variables as `x, y, z`.
pub fn vars_to_string(vs: &[Var]) -> String {
    let mut p = Printer::new();
    let names: Vec<String> = vs.iter().map(|v| p.var(v)).collect();
    names.join(", ")
}

//! Intermediate syntax used while elaborating: core syntax extended with
//! metavariables, and with Π-binders whose flavour is decided later.

use std::collections::{HashMap, HashSet};
use std::fmt;

use colf_core::{Sym, Var};

pub type MetaId = usize;

/// Identity of a Π-binder occurrence. Cells are keyed by the declaration
/// that created them and a per-declaration counter so that they are stable
/// across elaboration rounds.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub decl: usize,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub enum ETerm {
    Lam(Var, Box<ETerm>),
    App(EHead, Vec<EArg>),
}

#[derive(Clone, Debug)]
pub enum EHead {
    Var(Var),
    Const(Sym),
    Rec(Sym),
    /// A metavariable under an explicit substitution for its scope.
    Meta(MetaId, Vec<ETerm>),
}

#[derive(Clone, Debug)]
pub enum EArg {
    Term(ETerm),
    Prepat(Var),
}

/// Kinds and types share one representation.
#[derive(Clone, Debug)]
pub enum EClass {
    Type,
    Cotype,
    Pi {
        cell: CellId,
        var: Var,
        dom: Box<EClass>,
        cod: Box<EClass>,
    },
    Atom(Sym, Vec<EArg>),
    Meta(MetaId, Vec<ETerm>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IrError {
    /// A prepattern argument was replaced by something other than a variable.
    PrepatNonVar(String),
    /// Reduction ran out of fuel, which only happens on ill-typed input.
    Diverged,
}

impl ETerm {
    pub fn var(x: &Var) -> ETerm {
        ETerm::App(EHead::Var(x.clone()), Vec::new())
    }

    pub fn meta(m: MetaId, args: Vec<ETerm>) -> ETerm {
        ETerm::App(EHead::Meta(m, args), Vec::new())
    }
}

impl EArg {
    pub fn to_term(&self) -> ETerm {
        match self {
            EArg::Term(t) => t.clone(),
            EArg::Prepat(x) => ETerm::var(x),
        }
    }
}

/// If `t` is an η-expansion of a variable, return that variable.
pub fn eta_contract(t: &ETerm) -> Option<Var> {
    let mut binders = Vec::new();
    let mut cur = t;
    while let ETerm::Lam(y, b) = cur {
        binders.push(y);
        cur = b;
    }
    let ETerm::App(EHead::Var(x), args) = cur else {
        return None;
    };
    if args.len() != binders.len() || binders.contains(&x) {
        return None;
    }
    for (a, y) in args.iter().zip(&binders) {
        let z = match a {
            EArg::Prepat(z) => z.clone(),
            EArg::Term(t) => eta_contract(t)?,
        };
        if &&z != y {
            return None;
        }
    }
    Some(x.clone())
}

/// Simultaneous substitution of terms for variables.
#[derive(Clone, Default)]
pub struct Sub {
    map: HashMap<Var, ETerm>,
    range_fv: HashSet<Var>,
}

pub const SUBST_FUEL: usize = 2_000_000;

impl Sub {
    pub fn new() -> Sub {
        Sub::default()
    }

    pub fn single(x: &Var, n: ETerm) -> Sub {
        let mut s = Sub::new();
        s.insert(x.clone(), n);
        s
    }

    pub fn insert(&mut self, x: Var, n: ETerm) {
        fv_term(&n, &mut self.range_fv);
        self.map.insert(x, n);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn binder(&self, y: &Var) -> (Var, Option<Sub>) {
        if self.range_fv.contains(y) || self.map.contains_key(y) {
            let y2 = y.refresh();
            let mut s = self.clone();
            s.insert(y.clone(), ETerm::var(&y2));
            (y2, Some(s))
        } else {
            (y.clone(), None)
        }
    }

    pub fn term(&self, t: &ETerm, fuel: &mut usize) -> Result<ETerm, IrError> {
        if self.is_empty() {
            return Ok(t.clone());
        }
        match t {
            ETerm::Lam(y, b) => {
                let (y2, s2) = self.binder(y);
                let body = s2.as_ref().unwrap_or(self).term(b, fuel)?;
                Ok(ETerm::Lam(y2, Box::new(body)))
            }
            ETerm::App(h, args) => {
                let args = self.args(args, fuel)?;
                match h {
                    EHead::Var(x) => match self.map.get(x) {
                        Some(n) => apply(n.clone(), args, fuel),
                        None => Ok(ETerm::App(h.clone(), args)),
                    },
                    EHead::Meta(m, sigma) => {
                        let sigma = sigma
                            .iter()
                            .map(|s| self.term(s, fuel))
                            .collect::<Result<_, _>>()?;
                        Ok(ETerm::App(EHead::Meta(*m, sigma), args))
                    }
                    _ => Ok(ETerm::App(h.clone(), args)),
                }
            }
        }
    }

    pub fn args(&self, args: &[EArg], fuel: &mut usize) -> Result<Vec<EArg>, IrError> {
        args.iter()
            .map(|a| match a {
                EArg::Term(t) => Ok(EArg::Term(self.term(t, fuel)?)),
                EArg::Prepat(x) => match self.map.get(x) {
                    None => Ok(EArg::Prepat(x.clone())),
                    Some(n) => match eta_contract(n) {
                        Some(y) => Ok(EArg::Prepat(y)),
                        None => Err(IrError::PrepatNonVar(n.to_string())),
                    },
                },
            })
            .collect()
    }

    pub fn class(&self, c: &EClass, fuel: &mut usize) -> Result<EClass, IrError> {
        if self.is_empty() {
            return Ok(c.clone());
        }
        Ok(match c {
            EClass::Type => EClass::Type,
            EClass::Cotype => EClass::Cotype,
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => {
                let dom = self.class(dom, fuel)?;
                let (v2, s2) = self.binder(var);
                let cod = s2.as_ref().unwrap_or(self).class(cod, fuel)?;
                EClass::Pi {
                    cell: *cell,
                    var: v2,
                    dom: Box::new(dom),
                    cod: Box::new(cod),
                }
            }
            EClass::Atom(a, args) => EClass::Atom(a.clone(), self.args(args, fuel)?),
            EClass::Meta(m, sigma) => EClass::Meta(
                *m,
                sigma
                    .iter()
                    .map(|s| self.term(s, fuel))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

/// Apply `n` to `args`, reducing β-redexes as they arise.
pub fn apply(mut n: ETerm, args: Vec<EArg>, fuel: &mut usize) -> Result<ETerm, IrError> {
    let mut rest = args.into_iter();
    while let Some(a) = rest.next() {
        if *fuel == 0 {
            return Err(IrError::Diverged);
        }
        *fuel -= 1;
        n = match n {
            ETerm::Lam(y, b) => Sub::single(&y, a.to_term()).term(&b, fuel)?,
            ETerm::App(h, mut sp) => {
                sp.push(a);
                sp.extend(rest);
                return Ok(ETerm::App(h, sp));
            }
        };
    }
    Ok(n)
}

pub fn fv_term(t: &ETerm, out: &mut HashSet<Var>) {
    fn go(t: &ETerm, bound: &mut Vec<Var>, out: &mut HashSet<Var>) {
        match t {
            ETerm::Lam(y, b) => {
                bound.push(y.clone());
                go(b, bound, out);
                bound.pop();
            }
            ETerm::App(h, args) => {
                match h {
                    EHead::Var(x) if !bound.contains(x) => {
                        out.insert(x.clone());
                    }
                    EHead::Meta(_, sigma) => sigma.iter().for_each(|s| go(s, bound, out)),
                    _ => {}
                }
                for a in args {
                    match a {
                        EArg::Term(t) => go(t, bound, out),
                        EArg::Prepat(x) if !bound.contains(x) => {
                            out.insert(x.clone());
                        }
                        EArg::Prepat(_) => {}
                    }
                }
            }
        }
    }
    go(t, &mut Vec::new(), out)
}

pub fn fv_class(c: &EClass, out: &mut HashSet<Var>) {
    match c {
        EClass::Type | EClass::Cotype => {}
        EClass::Pi { var, dom, cod, .. } => {
            fv_class(dom, out);
            let mut inner = HashSet::new();
            fv_class(cod, &mut inner);
            inner.remove(var);
            out.extend(inner);
        }
        EClass::Atom(_, args) => {
            for a in args {
                match a {
                    EArg::Term(t) => fv_term(t, out),
                    EArg::Prepat(x) => {
                        out.insert(x.clone());
                    }
                }
            }
        }
        EClass::Meta(_, sigma) => sigma.iter().for_each(|s| fv_term(s, out)),
    }
}

pub fn metas_term(t: &ETerm, out: &mut Vec<MetaId>) {
    match t {
        ETerm::Lam(_, b) => metas_term(b, out),
        ETerm::App(h, args) => {
            if let EHead::Meta(m, sigma) = h {
                if !out.contains(m) {
                    out.push(*m);
                }
                sigma.iter().for_each(|s| metas_term(s, out));
            }
            for a in args {
                if let EArg::Term(t) = a {
                    metas_term(t, out);
                }
            }
        }
    }
}

pub fn metas_class(c: &EClass, out: &mut Vec<MetaId>) {
    match c {
        EClass::Type | EClass::Cotype => {}
        EClass::Pi { dom, cod, .. } => {
            metas_class(dom, out);
            metas_class(cod, out);
        }
        EClass::Atom(_, args) => {
            for a in args {
                if let EArg::Term(t) = a {
                    metas_term(t, out);
                }
            }
        }
        EClass::Meta(m, sigma) => {
            if !out.contains(m) {
                out.push(*m);
            }
            sigma.iter().for_each(|s| metas_term(s, out));
        }
    }
}

/// Every constant named in `t`, in order of first occurrence.
pub fn consts_term(t: &ETerm, out: &mut Vec<Sym>) {
    match t {
        ETerm::Lam(_, b) => consts_term(b, out),
        ETerm::App(h, args) => {
            match h {
                EHead::Const(c) | EHead::Rec(c) => {
                    if !out.contains(c) {
                        out.push(c.clone());
                    }
                }
                EHead::Meta(_, sigma) => sigma.iter().for_each(|s| consts_term(s, out)),
                EHead::Var(_) => {}
            }
            for a in args {
                if let EArg::Term(t) = a {
                    consts_term(t, out);
                }
            }
        }
    }
}

pub fn consts_class(c: &EClass, out: &mut Vec<Sym>) {
    match c {
        EClass::Type | EClass::Cotype => {}
        EClass::Pi { dom, cod, .. } => {
            consts_class(dom, out);
            consts_class(cod, out);
        }
        EClass::Atom(a, args) => {
            if !out.contains(a) {
                out.push(a.clone());
            }
            for arg in args {
                if let EArg::Term(t) = arg {
                    consts_term(t, out);
                }
            }
        }
        EClass::Meta(_, sigma) => sigma.iter().for_each(|s| consts_term(s, out)),
    }
}

fn write_arg(f: &mut fmt::Formatter<'_>, a: &EArg) -> fmt::Result {
    match a {
        EArg::Prepat(x) => write!(f, "{}", x.name()),
        EArg::Term(t @ ETerm::App(_, args)) if args.is_empty() => write!(f, "{t}"),
        EArg::Term(t) => write!(f, "({t})"),
    }
}

impl fmt::Display for ETerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ETerm::Lam(x, b) => write!(f, "[{}] {b}", x.name()),
            ETerm::App(h, args) => {
                match h {
                    EHead::Var(x) => f.write_str(x.name())?,
                    EHead::Const(c) | EHead::Rec(c) => f.write_str(c)?,
                    EHead::Meta(m, _) => write!(f, "?{m}")?,
                }
                for a in args {
                    f.write_str(" ")?;
                    write_arg(f, a)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for EClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EClass::Type => f.write_str("type"),
            EClass::Cotype => f.write_str("cotype"),
            EClass::Pi { var, dom, cod, .. } => {
                let mut fv = HashSet::new();
                fv_class(cod, &mut fv);
                let paren = matches!(**dom, EClass::Pi { .. });
                if fv.contains(var) {
                    write!(f, "{{{} : {dom}}} {cod}", var.name())
                } else if paren {
                    write!(f, "({dom}) -> {cod}")
                } else {
                    write!(f, "{dom} -> {cod}")
                }
            }
            EClass::Atom(a, args) => {
                f.write_str(a)?;
                for arg in args {
                    f.write_str(" ")?;
                    write_arg(f, arg)?;
                }
                Ok(())
            }
            EClass::Meta(m, _) => write!(f, "?{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(name: &str, args: Vec<ETerm>) -> ETerm {
        ETerm::App(
            EHead::Const(name.into()),
            args.into_iter().map(EArg::Term).collect(),
        )
    }

    #[test]
    fn substitution_reduces_redexes() {
        let x = Var::fresh("x");
        let f = Var::fresh("f");
        let y = Var::fresh("y");
        // f zero  with  f := [y] succ y
        let body = ETerm::App(EHead::Var(f.clone()), vec![EArg::Term(c("zero", vec![]))]);
        let n = ETerm::Lam(y.clone(), Box::new(c("succ", vec![ETerm::var(&y)])));
        let mut fuel = SUBST_FUEL;
        let r = Sub::single(&f, n).term(&body, &mut fuel).unwrap();
        assert_eq!(r.to_string(), "succ zero");
        let _ = x;
    }

    #[test]
    fn simultaneous_substitution_swaps() {
        let a = Var::fresh("a");
        let b = Var::fresh("b");
        let t = c("pair", vec![ETerm::var(&a), ETerm::var(&b)]);
        let mut s = Sub::new();
        s.insert(a.clone(), ETerm::var(&b));
        s.insert(b.clone(), ETerm::var(&a));
        let mut fuel = SUBST_FUEL;
        assert_eq!(s.term(&t, &mut fuel).unwrap().to_string(), "pair b a");
    }

    #[test]
    fn binders_are_renamed_apart() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let t = ETerm::Lam(y.clone(), Box::new(c("p", vec![ETerm::var(&x), ETerm::var(&y)])));
        let mut fuel = SUBST_FUEL;
        let r = Sub::single(&x, ETerm::var(&y)).term(&t, &mut fuel).unwrap();
        let ETerm::Lam(y2, body) = &r else { panic!() };
        assert_ne!(y2, &y);
        let mut fv = HashSet::new();
        fv_term(body, &mut fv);
        assert!(fv.contains(&y) && fv.contains(y2));
    }

    #[test]
    fn prepattern_arguments_need_variables() {
        let x = Var::fresh("x");
        let t = ETerm::App(EHead::Rec("r".into()), vec![EArg::Prepat(x.clone())]);
        let mut fuel = SUBST_FUEL;
        assert!(matches!(
            Sub::single(&x, c("zero", vec![])).term(&t, &mut fuel),
            Err(IrError::PrepatNonVar(_))
        ));
        let z = Var::fresh("z");
        let r = Sub::single(&x, ETerm::var(&z)).term(&t, &mut fuel).unwrap();
        assert!(matches!(&r, ETerm::App(_, a) if matches!(&a[0], EArg::Prepat(v) if v == &z)));
    }

    #[test]
    fn eta_contraction() {
        let f = Var::fresh("f");
        let y = Var::fresh("y");
        let t = ETerm::Lam(
            y.clone(),
            Box::new(ETerm::App(EHead::Var(f.clone()), vec![EArg::Term(ETerm::var(&y))])),
        );
        assert_eq!(eta_contract(&t), Some(f.clone()));
        let bad = ETerm::Lam(
            y.clone(),
            Box::new(ETerm::App(EHead::Var(y.clone()), vec![EArg::Term(ETerm::var(&y))])),
        );
        assert_eq!(eta_contract(&bad), None);
        assert_eq!(eta_contract(&c("zero", vec![])), None);
    }
}

//! Erasure to simple types, hereditary substitution, renaming, and spine
//! reduction.
//!
//! Hereditary substitution `[N/x]^τ` keeps results canonical by reducing
//! on the fly whenever `x` lands in head position. It is indexed by the
//! simple type `τ` of `x`, which strictly shrinks at every nested
//! reduction. Both substitution and renaming are capture-avoiding: a binder
//! that would capture a free variable of the substituted term is renamed.

use crate::syntax::*;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

/// `τ ::= ∗ | τ → τ`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Base,
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(dom: SimpleType, cod: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn size(&self) -> usize {
        match self {
            SimpleType::Base => 1,
            SimpleType::Arrow(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base => f.write_str("*"),
            SimpleType::Arrow(a, b) => match **a {
                SimpleType::Base => write!(f, "* -> {b}"),
                _ => write!(f, "({a}) -> {b}"),
            },
        }
    }
}

/// `A°`
pub fn erase(a: &Type) -> SimpleType {
    match a {
        Type::Atomic(_) => SimpleType::Base,
        Type::Pi(b, body) => {
            let dom = match b.flavor {
                Flavor::Ordinary => erase(&b.ty),
                Flavor::Prepattern => SimpleType::Base,
            };
            SimpleType::arrow(dom, erase(body))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("substitution of a term for prepattern variable `{}` is undefined", .0.name())]
    Undefined(Var),
    #[error("spine has more arguments than the type `{0}` allows")]
    OverApplied(SimpleType),
    #[error("spine stops before the type `{0}` reaches an atomic type")]
    UnderApplied(SimpleType),
    #[error("term shape does not fit simple type `{0}`")]
    ShapeMismatch(SimpleType),
    #[error("prepattern argument meets a domain of type `{0}`, expected `*`")]
    PrepatDomain(SimpleType),
}

/// A simultaneous variable renaming, applied in one pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    map: BTreeMap<Var, Var>,
}

impl Renaming {
    pub fn new() -> Renaming {
        Renaming::default()
    }

    /// `⟨y/x⟩`
    pub fn single(y: &Var, x: &Var) -> Renaming {
        let mut r = Renaming::new();
        r.insert(x.clone(), y.clone());
        r
    }

    pub fn insert(&mut self, from: Var, to: Var) {
        self.map.insert(from, to);
    }

    pub fn get(&self, x: &Var) -> Option<&Var> {
        self.map.get(x)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Var)> {
        self.map.iter()
    }

    fn apply_var(&self, x: &Var) -> Var {
        self.map.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    fn codomain(&self) -> BTreeSet<Var> {
        self.map.values().cloned().collect()
    }

    pub fn term(&self, m: &Term) -> Term {
        if self.is_empty() {
            return m.clone();
        }
        RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        }
        .term(m)
    }

    pub fn neutral(&self, r: &Neutral) -> Neutral {
        RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        }
        .neutral(r)
    }

    pub fn spine(&self, s: &Spine) -> Spine {
        RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        }
        .spine(s)
    }

    pub fn ty(&self, a: &Type) -> Type {
        if self.is_empty() {
            return a.clone();
        }
        RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        }
        .ty(a)
    }

    pub fn kind(&self, k: &Kind) -> Kind {
        RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        }
        .kind(k)
    }

    pub fn context(&self, g: &Context) -> Context {
        let mut cx = RenameCx {
            ren: self.clone(),
            avoid: self.codomain(),
        };
        let mut out = Context::new();
        for e in g.entries() {
            let ty = cx.ty(&e.ty);
            let v = cx.binder(&e.var);
            out.push(v, ty, e.flavor);
        }
        out
    }
}

struct RenameCx {
    ren: Renaming,
    avoid: BTreeSet<Var>,
}

impl RenameCx {
    /// Enter a binder: freshen it if it would capture a renaming target,
    /// and make sure it is not itself renamed inside its scope.
    fn binder(&mut self, x: &Var) -> Var {
        if self.avoid.contains(x) {
            let y = x.refresh();
            self.ren.insert(x.clone(), y.clone());
            y
        } else {
            self.ren.map.remove(x);
            x.clone()
        }
    }

    fn scoped<T>(&mut self, x: &Var, f: impl FnOnce(&mut RenameCx, Var) -> T) -> T {
        let saved = self.ren.map.get(x).cloned();
        let y = self.binder(x);
        let out = f(self, y);
        match saved {
            Some(v) => {
                self.ren.map.insert(x.clone(), v);
            }
            None => {
                self.ren.map.remove(x);
            }
        }
        out
    }

    fn term(&mut self, m: &Term) -> Term {
        match m {
            Term::Lam(x, body) => self.scoped(x, |cx, y| Term::lam(y, cx.term(body))),
            Term::Neutral(r) => Term::Neutral(self.neutral(r)),
        }
    }

    fn neutral(&mut self, r: &Neutral) -> Neutral {
        let head = match &r.head {
            Head::Var(x) => Head::Var(self.ren.apply_var(x)),
            h => h.clone(),
        };
        Neutral {
            head,
            spine: self.spine(&r.spine),
        }
    }

    fn spine(&mut self, s: &Spine) -> Spine {
        s.iter()
            .map(|e| match e {
                SpineEntry::Term(m) => SpineEntry::Term(self.term(m)),
                SpineEntry::Prepat(x) => SpineEntry::Prepat(self.ren.apply_var(x)),
            })
            .collect()
    }

    fn ty(&mut self, a: &Type) -> Type {
        match a {
            Type::Atomic(p) => Type::Atomic(AtomicType {
                family: p.family.clone(),
                spine: self.spine(&p.spine),
            }),
            Type::Pi(b, body) => {
                let dom = self.ty(&b.ty);
                self.scoped(&b.var, |cx, y| Type::pi(y, b.flavor, dom, cx.ty(body)))
            }
        }
    }

    fn kind(&mut self, k: &Kind) -> Kind {
        match k {
            Kind::Type => Kind::Type,
            Kind::Cotype => Kind::Cotype,
            Kind::Pi(b, body) => {
                let dom = self.ty(&b.ty);
                self.scoped(&b.var, |cx, y| Kind::pi(y, b.flavor, dom, cx.kind(body)))
            }
        }
    }
}

/// `⟨y/x⟩M`
pub fn rename_term(y: &Var, x: &Var, m: &Term) -> Term {
    Renaming::single(y, x).term(m)
}

/// `⟨y/x⟩A`
pub fn rename_type(y: &Var, x: &Var, a: &Type) -> Type {
    Renaming::single(y, x).ty(a)
}

/// `⟨y/x⟩K`
pub fn rename_kind(y: &Var, x: &Var, k: &Kind) -> Kind {
    Renaming::single(y, x).kind(k)
}

/// `⟨y/x⟩S`
pub fn rename_spine(y: &Var, x: &Var, s: &Spine) -> Spine {
    Renaming::single(y, x).spine(s)
}

/// `⟨y/x⟩Γ`
pub fn rename_context(y: &Var, x: &Var, g: &Context) -> Context {
    Renaming::single(y, x).context(g)
}

struct HSubst<'a> {
    n: &'a Term,
    x: &'a Var,
    tau: &'a SimpleType,
    fv_n: BTreeSet<Var>,
}

impl HSubst<'_> {
    /// Enter binder `y`: rename it away if it occurs free in `N`.
    fn under<T>(
        &self,
        y: &Var,
        body: impl FnOnce(Option<&Var>) -> Result<T, SubstError>,
    ) -> Result<T, SubstError> {
        if self.fv_n.contains(y) {
            let z = y.refresh();
            body(Some(&z))
        } else {
            body(None)
        }
    }

    fn term(&self, m: &Term) -> Result<Term, SubstError> {
        match m {
            Term::Lam(y, body) => {
                if y == self.x {
                    return Ok(m.clone());
                }
                self.under(y, |fresh| match fresh {
                    Some(z) => {
                        let body = rename_term(z, y, body);
                        Ok(Term::lam(z.clone(), self.term(&body)?))
                    }
                    None => Ok(Term::lam(y.clone(), self.term(body)?)),
                })
            }
            Term::Neutral(r) => self.neutral(r),
        }
    }

    fn neutral(&self, r: &Neutral) -> Result<Term, SubstError> {
        let spine = self.spine(&r.spine)?;
        match &r.head {
            Head::Var(y) if y == self.x => reduce_spine(&spine, self.tau, self.n),
            h => Ok(Term::neutral(h.clone(), spine)),
        }
    }

    fn spine(&self, s: &Spine) -> Result<Spine, SubstError> {
        s.iter()
            .map(|e| match e {
                SpineEntry::Term(m) => Ok(SpineEntry::Term(self.term(m)?)),
                SpineEntry::Prepat(y) if y == self.x => Err(SubstError::Undefined(y.clone())),
                SpineEntry::Prepat(y) => Ok(SpineEntry::Prepat(y.clone())),
            })
            .collect()
    }

    fn ty(&self, a: &Type) -> Result<Type, SubstError> {
        match a {
            Type::Atomic(p) => Ok(Type::Atomic(AtomicType {
                family: p.family.clone(),
                spine: self.spine(&p.spine)?,
            })),
            Type::Pi(b, body) => {
                let dom = self.ty(&b.ty)?;
                if &b.var == self.x {
                    return Ok(Type::pi(b.var.clone(), b.flavor, dom, (**body).clone()));
                }
                self.under(&b.var, |fresh| match fresh {
                    Some(z) => {
                        let body = rename_type(z, &b.var, body);
                        Ok(Type::pi(z.clone(), b.flavor, dom, self.ty(&body)?))
                    }
                    None => Ok(Type::pi(b.var.clone(), b.flavor, dom, self.ty(body)?)),
                })
            }
        }
    }

    fn kind(&self, k: &Kind) -> Result<Kind, SubstError> {
        match k {
            Kind::Type => Ok(Kind::Type),
            Kind::Cotype => Ok(Kind::Cotype),
            Kind::Pi(b, body) => {
                let dom = self.ty(&b.ty)?;
                if &b.var == self.x {
                    return Ok(Kind::pi(b.var.clone(), b.flavor, dom, (**body).clone()));
                }
                self.under(&b.var, |fresh| match fresh {
                    Some(z) => {
                        let body = rename_kind(z, &b.var, body);
                        Ok(Kind::pi(z.clone(), b.flavor, dom, self.kind(&body)?))
                    }
                    None => Ok(Kind::pi(b.var.clone(), b.flavor, dom, self.kind(body)?)),
                })
            }
        }
    }
}

fn hs<'a>(n: &'a Term, x: &'a Var, tau: &'a SimpleType) -> HSubst<'a> {
    HSubst {
        n,
        x,
        tau,
        fv_n: n.free_vars(),
    }
}

/// `[N/x]^τ M`
pub fn hsubst_term(n: &Term, x: &Var, tau: &SimpleType, m: &Term) -> Result<Term, SubstError> {
    hs(n, x, tau).term(m)
}

/// `[N/x]^τ S`
pub fn hsubst_spine(
    n: &Term,
    x: &Var,
    tau: &SimpleType,
    s: &Spine,
) -> Result<Spine, SubstError> {
    hs(n, x, tau).spine(s)
}

/// `[N/x]^τ A`
pub fn hsubst_type(n: &Term, x: &Var, tau: &SimpleType, a: &Type) -> Result<Type, SubstError> {
    hs(n, x, tau).ty(a)
}

/// `[N/x]^τ K`
pub fn hsubst_kind(n: &Term, x: &Var, tau: &SimpleType, k: &Kind) -> Result<Kind, SubstError> {
    hs(n, x, tau).kind(k)
}

/// `[N/x]^τ Γ`, substituting into every type of the context.
pub fn hsubst_context(
    n: &Term,
    x: &Var,
    tau: &SimpleType,
    g: &Context,
) -> Result<Context, SubstError> {
    let h = hs(n, x, tau);
    let mut out = Context::new();
    for e in g.entries() {
        out.push(e.var.clone(), h.ty(&e.ty)?, e.flavor);
    }
    Ok(out)
}

/// `S ▷^τ M`: apply a canonical term to a spine, reducing hereditarily.
///
/// The result is always a neutral term (wrapped as a `Term`).
pub fn reduce_spine(s: &Spine, tau: &SimpleType, m: &Term) -> Result<Term, SubstError> {
    let mut tau = tau;
    let mut cur = m.clone();
    for e in s {
        let (dom, cod) = match tau {
            SimpleType::Arrow(d, c) => (&**d, &**c),
            SimpleType::Base => return Err(SubstError::OverApplied(tau.clone())),
        };
        let (x, body) = match cur {
            Term::Lam(x, body) => (x, *body),
            Term::Neutral(_) => return Err(SubstError::ShapeMismatch(tau.clone())),
        };
        cur = match e {
            SpineEntry::Term(n) => {
                debug_assert!(dom.size() < tau.size());
                hsubst_term(n, &x, dom, &body)?
            }
            SpineEntry::Prepat(y) => {
                if *dom != SimpleType::Base {
                    return Err(SubstError::PrepatDomain(dom.clone()));
                }
                rename_term(y, &x, &body)
            }
        };
        tau = cod;
    }
    match (tau, &cur) {
        (SimpleType::Base, Term::Neutral(_)) => Ok(cur),
        (SimpleType::Base, Term::Lam(..)) => Err(SubstError::ShapeMismatch(tau.clone())),
        _ => Err(SubstError::UnderApplied(tau.clone())),
    }
}

/// Like [`reduce_spine`] but returns the neutral directly.
pub fn reduce_spine_neutral(
    s: &Spine,
    tau: &SimpleType,
    m: &Term,
) -> Result<Neutral, SubstError> {
    match reduce_spine(s, tau, m)? {
        Term::Neutral(r) => Ok(r),
        Term::Lam(..) => Err(SubstError::ShapeMismatch(tau.clone())),
    }
}

/// η-expand the variable `x` at type `A` into a canonical term.
pub fn eta_expand_var(x: &Var, a: &Type) -> Term {
    eta_expand_head(Head::Var(x.clone()), Vec::new(), a)
}

/// η-expand head `h` already applied to `prefix`, at its remaining type `a`.
pub fn eta_expand_head(h: Head, prefix: Spine, a: &Type) -> Term {
    let mut binders: Vec<Var> = Vec::new();
    let mut spine = prefix;
    let mut cur = a.clone();
    loop {
        match cur {
            Type::Atomic(_) => break,
            Type::Pi(b, body) => {
                let y = b.var.refresh();
                let arg = match b.flavor {
                    Flavor::Ordinary => SpineEntry::Term(eta_expand_var(&y, &b.ty)),
                    Flavor::Prepattern => SpineEntry::Prepat(y.clone()),
                };
                spine.push(arg);
                cur = rename_type(&y, &b.var, &body);
                binders.push(y);
            }
        }
    }
    let mut m = Term::neutral(h, spine);
    for y in binders.into_iter().rev() {
        m = Term::lam(y, m);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use alloc::vec;

    fn star() -> SimpleType {
        SimpleType::Base
    }

    fn s2s() -> SimpleType {
        SimpleType::arrow(star(), star())
    }

    #[test]
    fn erasure_clauses() {
        assert_eq!(erase(&at("nat")), star());
        assert_eq!(erase(&arrows(&["nat"], "pstream")), s2s());
        let t1 = Var::fresh("T1");
        let t2 = Var::fresh("T2");
        let fun = || arrows(&["tp"], "tp");
        let unfold = Type::pi(
            t1.clone(),
            Flavor::Ordinary,
            fun(),
            Type::pi(t2.clone(), Flavor::Ordinary, fun(), at("subtp")),
        );
        assert_eq!(erase(&unfold), SimpleType::arrow(s2s(), SimpleType::arrow(s2s(), star())));
        let prepat = Type::pi(Var::fresh("x"), Flavor::Prepattern, fun(), at("p"));
        assert_eq!(erase(&prepat), s2s());
    }

    #[test]
    fn first_order_substitution() {
        let x = Var::fresh("x");
        let m = app("cocons", vec![Term::var(&x), c("p")]);
        let out = hsubst_term(&c("zero"), &x, &star(), &m).unwrap();
        assert!(out.alpha_eq(&app("cocons", vec![c("zero"), c("p")])));
    }

    #[test]
    fn substitution_goes_under_binders() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let m = Term::lam(y.clone(), app("f", vec![Term::var(&x), Term::var(&y)]));
        let out = hsubst_term(&c("zero"), &x, &star(), &m).unwrap();
        let expect = Term::lam(y.clone(), app("f", vec![c("zero"), Term::var(&y)]));
        assert!(out.alpha_eq(&expect));
    }

    #[test]
    fn substituting_for_a_prepattern_argument_is_undefined() {
        let x = Var::fresh("x");
        let m = Term::rec("r", vec![SpineEntry::Prepat(x.clone())]);
        assert_eq!(
            hsubst_term(&c("zero"), &x, &star(), &m).unwrap_err(),
            SubstError::Undefined(x.clone())
        );
    }

    #[test]
    fn substitution_avoids_capture() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let m = Term::lam(y.clone(), app("f", vec![Term::var(&x), Term::var(&y)]));
        let out = hsubst_term(&Term::var(&y), &x, &star(), &m).unwrap();
        match &out {
            Term::Lam(z, body) => {
                assert_ne!(z, &y);
                let expect = app("f", vec![Term::var(&y), Term::var(z)]);
                assert!(body.alpha_eq(&expect));
            }
            _ => panic!("expected lambda"),
        }
    }

    #[test]
    fn empty_spine_returns_the_neutral() {
        let w2 = app("cosucc", vec![r("w2")]);
        assert!(reduce_spine(&vec![], &star(), &w2).unwrap().alpha_eq(&w2));
    }

    #[test]
    fn prepattern_argument_renames() {
        let sig = r1_r2();
        let (_, body) = sig.rec_def("r1").unwrap();
        let x = Var::fresh("x");
        let out = reduce_spine(&vec![SpineEntry::Prepat(x.clone())], &s2s(), body).unwrap();
        let expect = app(
            "cocons",
            vec![
                Term::var(&x),
                app("next", vec![Term::rec("r1", vec![SpineEntry::Prepat(x.clone())])]),
            ],
        );
        assert!(out.alpha_eq(&expect));
    }

    #[test]
    fn nested_hereditary_reduction() {
        // (λx.x) applied into λf. g (f a) reduces to g a.
        let f = Var::fresh("f");
        let x = Var::fresh("x");
        let id = Term::lam(x.clone(), Term::var(&x));
        let body = Term::lam(
            f.clone(),
            app(
                "g",
                vec![Term::neutral(
                    Head::Var(f.clone()),
                    vec![SpineEntry::Term(c("a"))],
                )],
            ),
        );
        let tau = SimpleType::arrow(s2s(), star());
        let out = reduce_spine(&vec![SpineEntry::Term(id)], &tau, &body).unwrap();
        assert!(out.alpha_eq(&app("g", vec![c("a")])));
    }

    #[test]
    fn arity_errors_are_reported() {
        let x = Var::fresh("x");
        let id = Term::lam(x.clone(), Term::var(&x));
        assert!(matches!(
            reduce_spine(&vec![], &s2s(), &id),
            Err(SubstError::UnderApplied(_))
        ));
        assert!(matches!(
            reduce_spine(&vec![SpineEntry::Term(c("a"))], &star(), &c("b")),
            Err(SubstError::OverApplied(_))
        ));
    }

    #[test]
    fn renaming_clauses() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let z = Var::fresh("z");
        let m = Term::neutral(Head::Var(x.clone()), vec![SpineEntry::Prepat(x.clone())]);
        let expect = Term::neutral(Head::Var(y.clone()), vec![SpineEntry::Prepat(y.clone())]);
        assert!(rename_term(&y, &x, &m).alpha_eq(&expect));
        let closed = app("zero", vec![]);
        assert!(rename_term(&y, &x, &closed).alpha_eq(&closed));
        let under = Term::lam(z.clone(), Term::var(&x));
        let expect = Term::lam(z.clone(), Term::var(&y));
        assert!(rename_term(&y, &x, &under).alpha_eq(&expect));
    }

    #[test]
    fn renaming_round_trip_with_fresh_variable() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let m = Term::lam(
            Var::fresh("z"),
            Term::neutral(Head::Var(x.clone()), vec![SpineEntry::Prepat(x.clone())]),
        );
        let back = rename_term(&x, &y, &rename_term(&y, &x, &m));
        assert!(back.alpha_eq(&m));
    }

    #[test]
    fn category_lifted_substitution() {
        let x = Var::fresh("x");
        assert!(matches!(
            hsubst_kind(&c("zero"), &x, &star(), &Kind::Type).unwrap(),
            Kind::Type
        ));
        let a = Type::atom("eq", vec![Term::var(&x), c("zero")]);
        let out = hsubst_type(&c("one"), &x, &star(), &a).unwrap();
        assert!(out.alpha_eq(&Type::atom("eq", vec![c("one"), c("zero")])));
        let g = hsubst_context(&c("zero"), &x, &star(), &Context::new()).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn eta_expansion_of_function_variable() {
        let f = Var::fresh("f");
        let a = arrows(&["tp", "tp"], "tp");
        let m = eta_expand_var(&f, &a);
        let (vars, body) = m.strip_lams();
        assert_eq!(vars.len(), 2);
        assert_eq!(body.spine.len(), 2);
    }
}

//! Abstract syntax in canonical spine form, plus signatures and contexts.
//!
//! Terms can only be written in β-normal form: a head is a variable or a
//! constant, never an abstraction. Every variable carries a process-unique
//! identity, so binders are distinct by construction and equality of
//! variables never depends on their display names.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

/// Interned-ish constant name. Cloning is a reference-count bump.
pub type Sym = Arc<str>;

static NEXT_VAR: AtomicUsize = AtomicUsize::new(1);

/// A bound or free variable.
///
/// Identity is the numeric id; the name is only used for printing.
#[derive(Clone)]
pub struct Var {
    id: usize,
    name: Sym,
}

impl Var {
    /// A variable that is distinct from every other variable ever created.
    pub fn fresh(name: &str) -> Var {
        Var {
            id: NEXT_VAR.fetch_add(1, AtomicOrdering::Relaxed),
            name: Sym::from(name),
        }
    }

    /// A new variable with the same display name.
    pub fn refresh(&self) -> Var {
        Var {
            id: NEXT_VAR.fetch_add(1, AtomicOrdering::Relaxed),
            name: self.name.clone(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Var) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Var) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Var) -> Ordering {
        self.id.cmp(&other.id)
    }
}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.id)
    }
}

/// Whether a Π-binder (or context entry) is ordinary or prepattern.
///
/// Prepattern variables may only ever be instantiated with other variables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Ordinary,
    Prepattern,
}

/// A Π-binder `x : A` or `x :^ A`.
#[derive(Clone, Debug)]
pub struct Binder {
    pub var: Var,
    pub flavor: Flavor,
    pub ty: Box<Type>,
}

#[derive(Clone, Debug)]
pub enum Kind {
    Type,
    Cotype,
    Pi(Binder, Box<Kind>),
}

#[derive(Clone, Debug)]
pub enum Type {
    Atomic(AtomicType),
    Pi(Binder, Box<Type>),
}

/// `a · S`
#[derive(Clone, Debug)]
pub struct AtomicType {
    pub family: Sym,
    pub spine: Spine,
}

#[derive(Clone, Debug)]
pub enum Term {
    Lam(Var, Box<Term>),
    Neutral(Neutral),
}

/// `H · S`
#[derive(Clone, Debug)]
pub struct Neutral {
    pub head: Head,
    pub spine: Spine,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    Var(Var),
    Const(Sym),
    Rec(Sym),
}

pub type Spine = Vec<SpineEntry>;

#[derive(Clone, Debug)]
pub enum SpineEntry {
    Term(Term),
    /// A prepattern argument `[x]`.
    Prepat(Var),
}

impl From<Term> for SpineEntry {
    fn from(m: Term) -> SpineEntry {
        SpineEntry::Term(m)
    }
}

impl Kind {
    pub fn pi(x: Var, flavor: Flavor, a: Type, k: Kind) -> Kind {
        Kind::Pi(
            Binder {
                var: x,
                flavor,
                ty: Box::new(a),
            },
            Box::new(k),
        )
    }

    /// Non-dependent ordinary Π.
    pub fn arrow(a: Type, k: Kind) -> Kind {
        Kind::pi(Var::fresh("_"), Flavor::Ordinary, a, k)
    }

    /// The sort at the end of the telescope.
    pub fn tail(&self) -> &Kind {
        let mut k = self;
        while let Kind::Pi(_, body) = k {
            k = body;
        }
        k
    }
}

impl Type {
    pub fn atom(family: &str, args: Vec<Term>) -> Type {
        Type::Atomic(AtomicType {
            family: Sym::from(family),
            spine: args.into_iter().map(SpineEntry::Term).collect(),
        })
    }

    pub fn pi(x: Var, flavor: Flavor, a: Type, b: Type) -> Type {
        Type::Pi(
            Binder {
                var: x,
                flavor,
                ty: Box::new(a),
            },
            Box::new(b),
        )
    }

    /// Non-dependent ordinary Π.
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::pi(Var::fresh("_"), Flavor::Ordinary, a, b)
    }

    /// The atomic type at the end of the telescope.
    pub fn target(&self) -> &AtomicType {
        let mut a = self;
        loop {
            match a {
                Type::Atomic(p) => return p,
                Type::Pi(_, body) => a = body,
            }
        }
    }
}

impl Term {
    pub fn lam(x: Var, body: Term) -> Term {
        Term::Lam(x, Box::new(body))
    }

    pub fn neutral(head: Head, spine: Spine) -> Term {
        Term::Neutral(Neutral { head, spine })
    }

    /// `x · ()`
    pub fn var(x: &Var) -> Term {
        Term::neutral(Head::Var(x.clone()), Vec::new())
    }

    /// A constructor applied to ordinary arguments.
    pub fn cst(c: &str, args: Vec<Term>) -> Term {
        Term::neutral(
            Head::Const(Sym::from(c)),
            args.into_iter().map(SpineEntry::Term).collect(),
        )
    }

    /// A recursion constant applied to a spine.
    pub fn rec(r: &str, spine: Spine) -> Term {
        Term::neutral(Head::Rec(Sym::from(r)), spine)
    }

    /// Strip the λ-prefix, returning the binders and the neutral body.
    pub fn strip_lams(&self) -> (Vec<&Var>, &Neutral) {
        let mut vars = Vec::new();
        let mut m = self;
        loop {
            match m {
                Term::Lam(x, body) => {
                    vars.push(x);
                    m = body;
                }
                Term::Neutral(r) => return (vars, r),
            }
        }
    }
}

/// One entry `x : A` or `x :^ A` of a context.
#[derive(Clone, Debug)]
pub struct ContextEntry {
    pub var: Var,
    pub ty: Type,
    pub flavor: Flavor,
}

/// An ordered variable context Γ.
#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<ContextEntry>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn push(&mut self, var: Var, ty: Type, flavor: Flavor) {
        self.entries.push(ContextEntry { var, ty, flavor });
    }

    pub fn pop(&mut self) -> Option<ContextEntry> {
        self.entries.pop()
    }

    pub fn lookup(&self, x: &Var) -> Option<&ContextEntry> {
        self.entries.iter().rev().find(|e| &e.var == x)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ContextEntry] {
        &self.entries
    }

    /// `|Γ|`, the variables of the context in order.
    pub fn vars(&self) -> Vec<Var> {
        self.entries.iter().map(|e| e.var.clone()).collect()
    }

    pub fn entries_mut(&mut self) -> &mut Vec<ContextEntry> {
        &mut self.entries
    }
}

#[derive(Clone, Debug)]
pub enum DeclKind {
    Family(Kind),
    Constructor(Type),
    RecDef { ty: Type, body: Term },
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub name: Sym,
    pub kind: DeclKind,
}

impl Decl {
    pub fn family(name: &str, k: Kind) -> Decl {
        Decl {
            name: Sym::from(name),
            kind: DeclKind::Family(k),
        }
    }

    pub fn constructor(name: &str, a: Type) -> Decl {
        Decl {
            name: Sym::from(name),
            kind: DeclKind::Constructor(a),
        }
    }

    pub fn recdef(name: &str, ty: Type, body: Term) -> Decl {
        Decl {
            name: Sym::from(name),
            kind: DeclKind::RecDef { ty, body },
        }
    }

    pub fn category(&self) -> Category {
        match self.kind {
            DeclKind::Family(_) => Category::Family,
            DeclKind::Constructor(_) => Category::Constructor,
            DeclKind::RecDef { .. } => Category::RecDef,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Category {
    Family,
    Constructor,
    RecDef,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Family => "type family",
            Category::Constructor => "constructor",
            Category::RecDef => "recursive definition",
        })
    }
}

/// Where a name occurrence sits, which decides whether it may refer forward.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Site {
    RecursiveBody,
    Elsewhere,
}

/// Declaration index of a type family. Later families have higher priority.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Priority(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Polarity {
    Inductive,
    Coinductive,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("unknown name `{0}`")]
    Unknown(Sym),
    #[error("`{name}` is declared more than once (positions {first} and {second})")]
    Duplicate {
        name: Sym,
        first: usize,
        second: usize,
    },
    #[error(
        "`{from}` (position {from_pos}) refers forward to `{target}` (position {target_pos}); \
         only recursive-definition bodies may refer forward, and only to recursive definitions"
    )]
    ForwardReference {
        from: Sym,
        from_pos: usize,
        target: Sym,
        target_pos: usize,
    },
    #[error("`{name}` is a {found}, expected a {expected}")]
    WrongCategory {
        name: Sym,
        expected: Category,
        found: Category,
    },
    #[error("`{0}` does not end in `type` or `cotype`")]
    NoSort(Sym),
}

/// An ordered list of declarations with a name index.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    decls: Vec<Decl>,
    index: BTreeMap<Sym, usize>,
}

impl Signature {
    pub fn empty() -> Signature {
        Signature::default()
    }

    /// Build a signature, checking that names are distinct and that every
    /// constant occurrence resolves to a declaration of the right category
    /// respecting declaration order.
    pub fn new(decls: Vec<Decl>) -> Result<Signature, SignatureError> {
        let mut index = BTreeMap::new();
        for (i, d) in decls.iter().enumerate() {
            if let Some(&first) = index.get(&d.name) {
                return Err(SignatureError::Duplicate {
                    name: d.name.clone(),
                    first,
                    second: i,
                });
            }
            index.insert(d.name.clone(), i);
        }
        let sig = Signature { decls, index };
        for (i, d) in sig.decls.iter().enumerate() {
            let mut refs = Vec::new();
            match &d.kind {
                DeclKind::Family(k) => collect_kind(k, Site::Elsewhere, &mut refs),
                DeclKind::Constructor(a) => collect_type(a, Site::Elsewhere, &mut refs),
                DeclKind::RecDef { ty, body } => {
                    collect_type(ty, Site::Elsewhere, &mut refs);
                    collect_term(body, Site::RecursiveBody, &mut refs);
                }
            }
            for (name, cat, site) in refs {
                let target = sig.resolve_from(&name, i, site)?;
                if target.category() != cat {
                    return Err(SignatureError::WrongCategory {
                        name,
                        expected: cat,
                        found: target.category(),
                    });
                }
            }
        }
        Ok(sig)
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Decl> {
        self.position(name).map(|i| &self.decls[i])
    }

    /// Resolve `name` as seen from declaration `from` at the given site.
    pub fn resolve_from(
        &self,
        name: &str,
        from: usize,
        site: Site,
    ) -> Result<&Decl, SignatureError> {
        let pos = self
            .position(name)
            .ok_or_else(|| SignatureError::Unknown(Sym::from(name)))?;
        let target = &self.decls[pos];
        let forward_ok =
            site == Site::RecursiveBody && target.category() == Category::RecDef;
        if pos >= from && !forward_ok {
            let from_name = self
                .decls
                .get(from)
                .map(|d| d.name.clone())
                .unwrap_or_else(|| Sym::from("<end>"));
            return Err(SignatureError::ForwardReference {
                from: from_name,
                from_pos: from,
                target: target.name.clone(),
                target_pos: pos,
            });
        }
        Ok(target)
    }

    /// Resolve with no position constraint beyond existence, treating the
    /// reference as occurring after the whole signature.
    pub fn resolve(&self, name: &str, site: Site) -> Result<&Decl, SignatureError> {
        self.resolve_from(name, self.decls.len(), site)
    }

    /// The priority of a type family: its declaration index.
    pub fn priority_of(&self, family: &str) -> Result<Priority, SignatureError> {
        let pos = self
            .position(family)
            .ok_or_else(|| SignatureError::Unknown(Sym::from(family)))?;
        match self.decls[pos].kind {
            DeclKind::Family(_) => Ok(Priority(pos)),
            _ => Err(SignatureError::WrongCategory {
                name: Sym::from(family),
                expected: Category::Family,
                found: self.decls[pos].category(),
            }),
        }
    }

    /// The family a constructor (or family) name belongs to.
    pub fn family_of(&self, name: &str) -> Result<&Sym, SignatureError> {
        let d = self
            .get(name)
            .ok_or_else(|| SignatureError::Unknown(Sym::from(name)))?;
        match &d.kind {
            DeclKind::Family(_) => Ok(&d.name),
            DeclKind::Constructor(a) => Ok(&a.target().family),
            DeclKind::RecDef { .. } => Err(SignatureError::WrongCategory {
                name: Sym::from(name),
                expected: Category::Constructor,
                found: Category::RecDef,
            }),
        }
    }

    /// Inductive or coinductive, read off the tail of the family's kind.
    pub fn classify(&self, name: &str) -> Result<Polarity, SignatureError> {
        let family = self.family_of(name)?;
        match self.get(family).map(|d| &d.kind) {
            Some(DeclKind::Family(k)) => match k.tail() {
                Kind::Type => Ok(Polarity::Inductive),
                Kind::Cotype => Ok(Polarity::Coinductive),
                Kind::Pi(..) => Err(SignatureError::NoSort(family.clone())),
            },
            Some(_) => Err(SignatureError::WrongCategory {
                name: family.clone(),
                expected: Category::Family,
                found: Category::Constructor,
            }),
            None => Err(SignatureError::Unknown(family.clone())),
        }
    }

    /// The declared type and body of a recursion constant.
    pub fn rec_def(&self, r: &str) -> Option<(&Type, &Term)> {
        match self.get(r).map(|d| &d.kind) {
            Some(DeclKind::RecDef { ty, body }) => Some((ty, body)),
            _ => None,
        }
    }

    pub fn rec_count(&self) -> usize {
        self.decls
            .iter()
            .filter(|d| d.category() == Category::RecDef)
            .count()
    }

    /// The signature with the declarations at the given positions removed.
    /// Fails if a remaining declaration depended on a removed one.
    pub fn without(&self, drop: &BTreeSet<usize>) -> Result<Signature, SignatureError> {
        Signature::new(
            self.decls
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, d)| d.clone())
                .collect(),
        )
    }
}

type Ref = (Sym, Category, Site);

fn collect_kind(k: &Kind, site: Site, out: &mut Vec<Ref>) {
    if let Kind::Pi(b, body) = k {
        collect_type(&b.ty, site, out);
        collect_kind(body, site, out);
    }
}

fn collect_type(a: &Type, site: Site, out: &mut Vec<Ref>) {
    match a {
        Type::Atomic(p) => {
            out.push((p.family.clone(), Category::Family, site));
            collect_spine(&p.spine, site, out);
        }
        Type::Pi(b, body) => {
            collect_type(&b.ty, site, out);
            collect_type(body, site, out);
        }
    }
}

fn collect_term(m: &Term, site: Site, out: &mut Vec<Ref>) {
    match m {
        Term::Lam(_, body) => collect_term(body, site, out),
        Term::Neutral(r) => {
            match &r.head {
                Head::Var(_) => {}
                Head::Const(c) => out.push((c.clone(), Category::Constructor, site)),
                Head::Rec(c) => out.push((c.clone(), Category::RecDef, site)),
            }
            collect_spine(&r.spine, site, out);
        }
    }
}

fn collect_spine(s: &Spine, site: Site, out: &mut Vec<Ref>) {
    for e in s {
        if let SpineEntry::Term(m) = e {
            collect_term(m, site, out);
        }
    }
}

/// Free variables of the various syntactic categories.
pub trait FreeVars {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>);

    fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.add_free_vars(&mut Vec::new(), &mut out);
        out
    }
}

fn note(x: &Var, bound: &[Var], out: &mut BTreeSet<Var>) {
    if !bound.contains(x) {
        out.insert(x.clone());
    }
}

impl FreeVars for Term {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Term::Lam(x, body) => {
                bound.push(x.clone());
                body.add_free_vars(bound, out);
                bound.pop();
            }
            Term::Neutral(r) => r.add_free_vars(bound, out),
        }
    }
}

impl FreeVars for Neutral {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        if let Head::Var(x) = &self.head {
            note(x, bound, out);
        }
        self.spine.add_free_vars(bound, out);
    }
}

impl FreeVars for Spine {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        for e in self {
            match e {
                SpineEntry::Term(m) => m.add_free_vars(bound, out),
                SpineEntry::Prepat(x) => note(x, bound, out),
            }
        }
    }
}

impl FreeVars for Type {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Type::Atomic(p) => p.spine.add_free_vars(bound, out),
            Type::Pi(b, body) => {
                b.ty.add_free_vars(bound, out);
                bound.push(b.var.clone());
                body.add_free_vars(bound, out);
                bound.pop();
            }
        }
    }
}

impl FreeVars for Kind {
    fn add_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        if let Kind::Pi(b, body) = self {
            b.ty.add_free_vars(bound, out);
            bound.push(b.var.clone());
            body.add_free_vars(bound, out);
            bound.pop();
        }
    }
}

/// Equality up to renaming of bound variables. Free variables must match
/// exactly; Π flavors must agree.
pub trait AlphaEq {
    fn alpha_eq_in(&self, other: &Self, pairs: &mut Vec<(Var, Var)>) -> bool;

    fn alpha_eq(&self, other: &Self) -> bool {
        self.alpha_eq_in(other, &mut Vec::new())
    }
}

fn var_alpha(x: &Var, y: &Var, pairs: &[(Var, Var)]) -> bool {
    for (a, b) in pairs.iter().rev() {
        if a == x || b == y {
            return a == x && b == y;
        }
    }
    x == y
}

impl AlphaEq for Term {
    fn alpha_eq_in(&self, other: &Term, pairs: &mut Vec<(Var, Var)>) -> bool {
        match (self, other) {
            (Term::Lam(x, m), Term::Lam(y, n)) => {
                pairs.push((x.clone(), y.clone()));
                let r = m.alpha_eq_in(n, pairs);
                pairs.pop();
                r
            }
            (Term::Neutral(r), Term::Neutral(s)) => r.alpha_eq_in(s, pairs),
            _ => false,
        }
    }
}

impl AlphaEq for Neutral {
    fn alpha_eq_in(&self, other: &Neutral, pairs: &mut Vec<(Var, Var)>) -> bool {
        let heads = match (&self.head, &other.head) {
            (Head::Var(x), Head::Var(y)) => var_alpha(x, y, pairs),
            (Head::Const(c), Head::Const(d)) | (Head::Rec(c), Head::Rec(d)) => c == d,
            _ => false,
        };
        heads && self.spine.alpha_eq_in(&other.spine, pairs)
    }
}

impl AlphaEq for Spine {
    fn alpha_eq_in(&self, other: &Spine, pairs: &mut Vec<(Var, Var)>) -> bool {
        self.len() == other.len()
            && self.iter().zip(other).all(|(a, b)| match (a, b) {
                (SpineEntry::Term(m), SpineEntry::Term(n)) => m.alpha_eq_in(n, pairs),
                (SpineEntry::Prepat(x), SpineEntry::Prepat(y)) => var_alpha(x, y, pairs),
                _ => false,
            })
    }
}

impl AlphaEq for AtomicType {
    fn alpha_eq_in(&self, other: &AtomicType, pairs: &mut Vec<(Var, Var)>) -> bool {
        self.family == other.family && self.spine.alpha_eq_in(&other.spine, pairs)
    }
}

impl AlphaEq for Type {
    fn alpha_eq_in(&self, other: &Type, pairs: &mut Vec<(Var, Var)>) -> bool {
        match (self, other) {
            (Type::Atomic(p), Type::Atomic(q)) => p.alpha_eq_in(q, pairs),
            (Type::Pi(b1, a1), Type::Pi(b2, a2)) => {
                if b1.flavor != b2.flavor || !b1.ty.alpha_eq_in(&b2.ty, pairs) {
                    return false;
                }
                pairs.push((b1.var.clone(), b2.var.clone()));
                let r = a1.alpha_eq_in(a2, pairs);
                pairs.pop();
                r
            }
            _ => false,
        }
    }
}

impl AlphaEq for Kind {
    fn alpha_eq_in(&self, other: &Kind, pairs: &mut Vec<(Var, Var)>) -> bool {
        match (self, other) {
            (Kind::Type, Kind::Type) | (Kind::Cotype, Kind::Cotype) => true,
            (Kind::Pi(b1, k1), Kind::Pi(b2, k2)) => {
                if b1.flavor != b2.flavor || !b1.ty.alpha_eq_in(&b2.ty, pairs) {
                    return false;
                }
                pairs.push((b1.var.clone(), b2.var.clone()));
                let r = k1.alpha_eq_in(k2, pairs);
                pairs.pop();
                r
            }
            _ => false,
        }
    }
}

impl AlphaEq for Decl {
    fn alpha_eq_in(&self, other: &Decl, pairs: &mut Vec<(Var, Var)>) -> bool {
        self.name == other.name
            && match (&self.kind, &other.kind) {
                (DeclKind::Family(k1), DeclKind::Family(k2)) => k1.alpha_eq_in(k2, pairs),
                (DeclKind::Constructor(a1), DeclKind::Constructor(a2)) => {
                    a1.alpha_eq_in(a2, pairs)
                }
                (
                    DeclKind::RecDef { ty: a1, body: m1 },
                    DeclKind::RecDef { ty: a2, body: m2 },
                ) => a1.alpha_eq_in(a2, pairs) && m1.alpha_eq_in(m2, pairs),
                _ => false,
            }
    }
}

/// Total size of a term, counting heads, λs and prepattern leaves.
pub fn term_size(m: &Term) -> usize {
    match m {
        Term::Lam(_, body) => 1 + term_size(body),
        Term::Neutral(r) => {
            1 + r
                .spine
                .iter()
                .map(|e| match e {
                    SpineEntry::Term(n) => term_size(n),
                    SpineEntry::Prepat(_) => 1,
                })
                .sum::<usize>()
        }
    }
}

/// Names of constants (any category) occurring in a term.
pub fn constants_of(m: &Term) -> BTreeSet<Sym> {
    let mut refs = Vec::new();
    collect_term(m, Site::Elsewhere, &mut refs);
    refs.into_iter().map(|(n, _, _)| n).collect()
}

//! Elaboration of surface declarations into core syntax.
//!
//! Each declaration is elaborated bidirectionally into an intermediate
//! syntax with metavariables, which are solved by higher-order pattern
//! unification. Π-binders carry cells whose flavour (ordinary or
//! prepattern) is computed by re-running elaboration until the set of
//! prepattern cells stops growing. The kernel re-checks everything produced
//! here.

mod check;
mod implicits;
pub mod ir;
mod unify;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use colf_core::syntax::Category;
use colf_core::syntax::Binder;
use colf_core::{
    AtomicType, Decl, Flavor, Head, Kind, Neutral, Signature, SpineEntry, Sym, Term,
    Type, Var,
};

use crate::surface::{ExprKind, SurfaceDecl};
use crate::token::Span;

pub use implicits::abstract_implicits;
use ir::{CellId, EArg, EClass, EHead, ETerm, MetaId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElabErrorKind {
    Unbound(String),
    WrongCategory { name: String, found: Category, wanted: &'static str },
    DependsOn(String),
    Duplicate(String),
    Mismatch { expected: String, found: String },
    TooManyArgs(String),
    Underapplied(String),
    SortInType,
    NotAType(String),
    NotATerm(String),
    LamAgainstAtomic(String),
    HoleHead,
    PrepatRestriction(String),
    PrepatImplicit(String),
    Occurs(String),
    Scope(String),
    Unsolved(Vec<String>),
    UnsolvedHole(String),
    CannotInferType(String),
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ElabError {
    pub kind: ElabErrorKind,
    pub span: Span,
}

impl ElabError {
    pub fn new(kind: ElabErrorKind, span: Span) -> ElabError {
        ElabError { kind, span }
    }

    pub fn is_prepattern(&self) -> bool {
        matches!(
            self.kind,
            ElabErrorKind::PrepatRestriction(_) | ElabErrorKind::PrepatImplicit(_)
        )
    }
}

impl fmt::Display for ElabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ElabErrorKind::*;
        write!(f, "{}: ", self.span.start)?;
        match &self.kind {
            Unbound(n) => write!(f, "unbound identifier `{n}`"),
            WrongCategory { name, found, wanted } => {
                write!(f, "`{name}` is a {found}, expected {wanted}")
            }
            DependsOn(n) => write!(f, "depends on rejected declaration `{n}`"),
            Duplicate(n) => write!(f, "`{n}` is already declared"),
            Mismatch { expected, found } => {
                write!(f, "type mismatch: expected `{expected}`, found `{found}`")
            }
            TooManyArgs(h) => write!(f, "`{h}` is applied to too many arguments"),
            Underapplied(h) => write!(f, "type family `{h}` is not fully applied"),
            SortInType => f.write_str("`type` or `cotype` may only end a kind"),
            NotAType(e) => write!(f, "`{e}` is not a type"),
            NotATerm(e) => write!(f, "`{e}` is not a term"),
            LamAgainstAtomic(t) => write!(f, "abstraction checked against atomic type `{t}`"),
            HoleHead => f.write_str("`_` cannot be applied to arguments"),
            PrepatRestriction(t) => write!(
                f,
                "prepattern restriction: `{t}` is passed where only a variable is allowed"
            ),
            PrepatImplicit(h) => write!(
                f,
                "prepattern restriction: implicit argument of `{h}` must be given explicitly"
            ),
            Occurs(t) => write!(f, "occurs check failed while solving `{t}`"),
            Scope(x) => write!(f, "variable `{x}` escapes its scope"),
            Unsolved(cs) => write!(
                f,
                "requires explicit argument here; unsolved constraints: {}",
                cs.join(", ")
            ),
            UnsolvedHole(t) => write!(f, "cannot infer a term of type `{t}` for this hole"),
            CannotInferType(x) => write!(f, "cannot infer the type of `{x}`"),
            Diverged => f.write_str("elaboration did not terminate (ill-typed input)"),
        }
    }
}

pub(crate) type EResult<T> = Result<T, ElabError>;

#[derive(Clone, Debug)]
pub(crate) enum MetaSort {
    Term(EClass),
    Class,
}

#[derive(Clone, Debug)]
pub(crate) enum Sol {
    Term(ETerm),
    Class(EClass),
}

#[derive(Clone, Debug)]
pub(crate) struct Meta {
    pub scope: Vec<(Var, EClass)>,
    pub sort: MetaSort,
    pub solution: Option<Sol>,
    pub span: Span,
}

/// Union-find over Π cells with a prepattern mark per class.
#[derive(Default)]
pub(crate) struct Cells {
    parent: HashMap<CellId, CellId>,
    marked: HashSet<CellId>,
    seen: Vec<CellId>,
}

impl Cells {
    fn find(&self, mut c: CellId) -> CellId {
        while let Some(&p) = self.parent.get(&c) {
            c = p;
        }
        c
    }

    pub fn register(&mut self, c: CellId, marked: bool) {
        self.seen.push(c);
        if marked {
            self.mark(c);
        }
    }

    pub fn is_prepat(&self, c: CellId) -> bool {
        self.marked.contains(&self.find(c))
    }

    pub fn mark(&mut self, c: CellId) {
        let r = self.find(c);
        self.marked.insert(r);
    }

    pub fn union(&mut self, a: CellId, b: CellId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
            if self.marked.remove(&ra) {
                self.marked.insert(rb);
            }
        }
    }

    fn marks(&self) -> BTreeSet<CellId> {
        self.seen
            .iter()
            .copied()
            .filter(|&c| self.is_prepat(c))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Constraint {
    Terms(ETerm, ETerm),
    Classes(EClass, EClass),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum SurfCat {
    Family,
    Constructor,
    RecDef,
}

impl SurfCat {
    fn of(d: &SurfaceDecl) -> SurfCat {
        if d.body.is_some() {
            return SurfCat::RecDef;
        }
        let mut e = &d.class;
        loop {
            match &e.kind {
                ExprKind::Arrow(_, b) | ExprKind::PiExplicit(_, _, b) | ExprKind::PiBare(_, b) => {
                    e = b
                }
                ExprKind::Type | ExprKind::Cotype => return SurfCat::Family,
                _ => return SurfCat::Constructor,
            }
        }
    }

    fn category(self) -> Category {
        match self {
            SurfCat::Family => Category::Family,
            SurfCat::Constructor => Category::Constructor,
            SurfCat::RecDef => Category::RecDef,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DeclInfo {
    pub cat: SurfCat,
    pub class: EClass,
    pub implicit: usize,
}

/// A variable in scope during elaboration.
#[derive(Clone, Debug)]
pub(crate) struct Entry {
    pub name: String,
    pub var: Var,
    pub ty: EClass,
    pub cell: Option<CellId>,
}

pub(crate) type Ctx = Vec<Entry>;

pub(crate) struct State<'a> {
    pub metas: Vec<Meta>,
    pub cells: Cells,
    prior_marks: &'a BTreeSet<CellId>,
    pub postponed: Vec<(Constraint, Span)>,
    pub fuel: usize,
    pub unfold_fuel: usize,
    pub solved: usize,
    pub surface: &'a [SurfaceDecl],
    pub names: HashMap<String, (usize, SurfCat)>,
    pub infos: HashMap<String, DeclInfo>,
    pub rejected: HashMap<String, ElabError>,
    pub bodies: HashMap<Sym, ETerm>,
    pub cur_decl: usize,
    cell_counter: usize,
    pub phase_body: bool,
}

impl<'a> State<'a> {
    fn new(surface: &'a [SurfaceDecl], prior_marks: &'a BTreeSet<CellId>) -> State<'a> {
        let mut names = HashMap::new();
        let mut rejected = HashMap::new();
        for (i, d) in surface.iter().enumerate() {
            if names.contains_key(&d.name.text) {
                continue;
            }
            names.insert(d.name.text.clone(), (i, SurfCat::of(d)));
        }
        for (i, d) in surface.iter().enumerate() {
            if names[&d.name.text].0 != i {
                rejected.insert(
                    format!("#{i}"),
                    ElabError::new(ElabErrorKind::Duplicate(d.name.text.clone()), d.name.span),
                );
            }
        }
        State {
            metas: Vec::new(),
            cells: Cells::default(),
            prior_marks,
            postponed: Vec::new(),
            fuel: ir::SUBST_FUEL,
            unfold_fuel: 0,
            solved: 0,
            surface,
            names,
            infos: HashMap::new(),
            rejected,
            bodies: HashMap::new(),
            cur_decl: 0,
            cell_counter: 0,
            phase_body: false,
        }
    }

    pub fn new_cell(&mut self) -> CellId {
        let c = CellId {
            decl: self.cur_decl,
            index: self.cell_counter,
        };
        self.cell_counter += 1;
        self.cells.register(c, self.prior_marks.contains(&c));
        c
    }

    pub fn new_meta(&mut self, ctx: &Ctx, sort: MetaSort, span: Span) -> (MetaId, Vec<ETerm>) {
        let id = self.metas.len();
        self.metas.push(Meta {
            scope: ctx.iter().map(|e| (e.var.clone(), e.ty.clone())).collect(),
            sort,
            solution: None,
            span,
        });
        (id, ctx.iter().map(|e| ETerm::var(&e.var)).collect())
    }

    pub fn ir_err(&self, e: ir::IrError, span: Span) -> ElabError {
        match e {
            ir::IrError::PrepatNonVar(t) => ElabError::new(ElabErrorKind::PrepatRestriction(t), span),
            ir::IrError::Diverged => ElabError::new(ElabErrorKind::Diverged, span),
        }
    }

    pub fn subst_class(&mut self, c: &EClass, x: &Var, n: ETerm, span: Span) -> EResult<EClass> {
        let mut fuel = self.fuel;
        let r = ir::Sub::single(x, n).class(c, &mut fuel);
        self.fuel = fuel;
        r.map_err(|e| self.ir_err(e, span))
    }

    pub fn apply(&mut self, n: ETerm, args: Vec<EArg>, span: Span) -> EResult<ETerm> {
        let mut fuel = self.fuel;
        let r = ir::apply(n, args, &mut fuel);
        self.fuel = fuel;
        r.map_err(|e| self.ir_err(e, span))
    }

    /// Instantiate solved metavariables at the head of `t`.
    pub fn force(&mut self, t: &ETerm) -> Result<ETerm, ir::IrError> {
        let mut t = t.clone();
        loop {
            let ETerm::App(EHead::Meta(m, sigma), args) = &t else {
                return Ok(t);
            };
            let Some(Sol::Term(sol)) = &self.metas[*m].solution else {
                return Ok(t);
            };
            let mut sub = ir::Sub::new();
            for ((v, _), s) in self.metas[*m].scope.iter().zip(sigma) {
                sub.insert(v.clone(), s.clone());
            }
            let sol = sol.clone();
            let args = args.clone();
            let mut fuel = self.fuel;
            let inst = sub.term(&sol, &mut fuel)?;
            t = ir::apply(inst, args, &mut fuel)?;
            self.fuel = fuel;
        }
    }

    pub fn force_class(&mut self, c: &EClass) -> Result<EClass, ir::IrError> {
        let mut c = c.clone();
        loop {
            let EClass::Meta(m, sigma) = &c else {
                return Ok(c);
            };
            let Some(Sol::Class(sol)) = &self.metas[*m].solution else {
                return Ok(c);
            };
            let mut sub = ir::Sub::new();
            for ((v, _), s) in self.metas[*m].scope.iter().zip(sigma) {
                sub.insert(v.clone(), s.clone());
            }
            let sol = sol.clone();
            let mut fuel = self.fuel;
            c = sub.class(&sol, &mut fuel)?;
            self.fuel = fuel;
        }
    }

    /// Instantiate every solved metavariable inside `t`.
    pub fn zonk(&mut self, t: &ETerm) -> Result<ETerm, ir::IrError> {
        match self.force(t)? {
            ETerm::Lam(x, b) => Ok(ETerm::Lam(x, Box::new(self.zonk(&b)?))),
            ETerm::App(h, args) => {
                let h = match h {
                    EHead::Meta(m, sigma) => EHead::Meta(
                        m,
                        sigma
                            .iter()
                            .map(|s| self.zonk(s))
                            .collect::<Result<_, _>>()?,
                    ),
                    h => h,
                };
                Ok(ETerm::App(h, self.zonk_args(&args)?))
            }
        }
    }

    pub fn zonk_args(&mut self, args: &[EArg]) -> Result<Vec<EArg>, ir::IrError> {
        args.iter()
            .map(|a| match a {
                EArg::Term(t) => Ok(EArg::Term(self.zonk(t)?)),
                EArg::Prepat(x) => Ok(EArg::Prepat(x.clone())),
            })
            .collect()
    }

    pub fn zonk_class(&mut self, c: &EClass) -> Result<EClass, ir::IrError> {
        Ok(match self.force_class(c)? {
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => EClass::Pi {
                cell,
                var,
                dom: Box::new(self.zonk_class(&dom)?),
                cod: Box::new(self.zonk_class(&cod)?),
            },
            EClass::Atom(a, args) => EClass::Atom(a, self.zonk_args(&args)?),
            EClass::Meta(m, sigma) => EClass::Meta(
                m,
                sigma
                    .iter()
                    .map(|s| self.zonk(s))
                    .collect::<Result<_, _>>()?,
            ),
            other => other,
        })
    }

    pub fn show_class(&mut self, c: &EClass) -> String {
        match self.zonk_class(c) {
            Ok(z) => z.to_string(),
            Err(_) => c.to_string(),
        }
    }

    pub fn show_term(&mut self, t: &ETerm) -> String {
        match self.zonk(t) {
            Ok(z) => z.to_string(),
            Err(_) => t.to_string(),
        }
    }

    fn flavor(&self, c: CellId) -> Flavor {
        if self.cells.is_prepat(c) {
            Flavor::Prepattern
        } else {
            Flavor::Ordinary
        }
    }
}

/// Per-declaration result of elaboration.
#[derive(Clone, Debug)]
pub struct DeclOutcome {
    pub name: String,
    pub span: Span,
    pub result: Result<ElabInfo, ElabError>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElabInfo {
    /// Number of leading binders filled in at use sites.
    pub implicit: usize,
}

/// The accepted declarations as a core signature, plus one outcome per
/// surface declaration in source order.
#[derive(Clone, Debug)]
pub struct Elaboration {
    pub signature: Signature,
    pub outcomes: Vec<DeclOutcome>,
    pub rounds: usize,
}

impl Elaboration {
    pub fn outcome(&self, name: &str) -> Option<&DeclOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

const MAX_ROUNDS: usize = 256;

/// Elaborate a whole file.
pub fn elaborate_signature(decls: &[SurfaceDecl]) -> Elaboration {
    let constants: HashSet<String> = decls.iter().map(|d| d.name.text.clone()).collect();
    let decls: Vec<SurfaceDecl> = decls
        .iter()
        .map(|d| abstract_implicits(d, &constants))
        .collect();
    let mut marks = BTreeSet::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut st = State::new(&decls, &marks);
        let core = st.run();
        let next = st.cells.marks();
        if next == marks || rounds >= MAX_ROUNDS {
            return finish(&decls, st, core, rounds);
        }
        drop(st);
        marks = next;
    }
}

fn finish(
    decls: &[SurfaceDecl],
    mut st: State<'_>,
    mut core: Vec<Option<Decl>>,
    rounds: usize,
) -> Elaboration {
    let signature = loop {
        let accepted: Vec<Decl> = core.iter().flatten().cloned().collect();
        match Signature::new(accepted) {
            Ok(sig) => break sig,
            Err(e) => {
                let culprit = match &e {
                    colf_core::SignatureError::ForwardReference { from, .. } => from.to_string(),
                    colf_core::SignatureError::WrongCategory { name, .. } => name.to_string(),
                    colf_core::SignatureError::Unknown(n) => n.to_string(),
                    colf_core::SignatureError::Duplicate { name, .. } => name.to_string(),
                    colf_core::SignatureError::NoSort(n) => n.to_string(),
                };
                let Some(i) = core
                    .iter()
                    .position(|d| d.as_ref().is_some_and(|d| d.name.as_ref() == culprit))
                else {
                    break Signature::empty();
                };
                core[i] = None;
                st.rejected.insert(
                    decls[i].name.text.clone(),
                    ElabError::new(ElabErrorKind::Unbound(e.to_string()), decls[i].name.span),
                );
            }
        }
    };
    let outcomes = decls
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let dup = st.rejected.get(&format!("#{i}"));
            let result = match (dup, st.rejected.get(&d.name.text), st.infos.get(&d.name.text)) {
                (Some(e), _, _) | (None, Some(e), _) => Err(e.clone()),
                (None, None, Some(info)) => Ok(ElabInfo {
                    implicit: info.implicit,
                }),
                (None, None, None) => Err(ElabError::new(
                    ElabErrorKind::Unbound(d.name.text.clone()),
                    d.name.span,
                )),
            };
            DeclOutcome {
                name: d.name.text.clone(),
                span: d.span,
                result,
            }
        })
        .collect();
    Elaboration {
        signature,
        outcomes,
        rounds,
    }
}

impl State<'_> {
    fn reject(&mut self, i: usize, e: ElabError) {
        let name = self.surface[i].name.text.clone();
        self.infos.remove(&name);
        self.rejected.entry(name).or_insert(e);
    }

    fn begin_decl(&mut self, i: usize) {
        self.cur_decl = i;
        self.postponed.clear();
    }

    fn is_primary(&self, i: usize) -> bool {
        self.names[&self.surface[i].name.text].0 == i
    }

    /// One elaboration round over the whole file. Returns the core
    /// declaration for each surface declaration that survived.
    fn run(&mut self) -> Vec<Option<Decl>> {
        let n = self.surface.len();
        let mut counters = vec![0usize; n];
        for (i, counter) in counters.iter_mut().enumerate() {
            if !self.is_primary(i) {
                continue;
            }
            self.begin_decl(i);
            self.cell_counter = 0;
            self.phase_body = false;
            let r = self.elab_decl_class(i);
            *counter = self.cell_counter;
            match r {
                Ok(info) => {
                    self.infos.insert(self.surface[i].name.text.clone(), info);
                }
                Err(e) => self.reject(i, e),
            }
        }
        for (i, &counter) in counters.iter().enumerate() {
            if !self.is_primary(i) || self.surface[i].body.is_none() {
                continue;
            }
            if !self.infos.contains_key(&self.surface[i].name.text) {
                continue;
            }
            self.begin_decl(i);
            self.cell_counter = counter;
            self.phase_body = true;
            match self.elab_decl_body(i) {
                Ok(body) => {
                    self.bodies.insert(self.surface[i].name.text.as_str().into(), body);
                }
                Err(e) => self.reject(i, e),
            }
        }
        self.drop_dependents();
        (0..n)
            .map(|i| {
                if !self.is_primary(i) {
                    return None;
                }
                let name = &self.surface[i].name.text;
                let info = self.infos.get(name)?.clone();
                match self.build_core(i, &info) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        self.reject(i, e);
                        None
                    }
                }
            })
            .collect()
    }

    fn drop_dependents(&mut self) {
        loop {
            let mut newly = Vec::new();
            for (i, d) in self.surface.iter().enumerate() {
                let Some(info) = self.infos.get(&d.name.text) else {
                    continue;
                };
                let mut refs = Vec::new();
                ir::consts_class(&info.class, &mut refs);
                if let Some(b) = self.bodies.get(d.name.text.as_str()) {
                    ir::consts_term(b, &mut refs);
                }
                if let Some(bad) = refs
                    .iter()
                    .find(|r| !self.infos.contains_key(r.as_ref()))
                {
                    newly.push((
                        i,
                        ElabError::new(ElabErrorKind::DependsOn(bad.to_string()), d.name.span),
                    ));
                }
            }
            if newly.is_empty() {
                return;
            }
            for (i, e) in newly {
                self.reject(i, e);
            }
        }
    }

    fn build_core(&mut self, i: usize, info: &DeclInfo) -> EResult<Decl> {
        let d = &self.surface[i];
        let span = d.name.span;
        let name = d.name.text.clone();
        Ok(match info.cat {
            SurfCat::Family => Decl::family(&name, self.core_kind(&info.class, span)?),
            SurfCat::Constructor => Decl::constructor(&name, self.core_type(&info.class, span)?),
            SurfCat::RecDef => {
                let body = self.bodies.get(name.as_str()).cloned().ok_or_else(|| {
                    ElabError::new(ElabErrorKind::Unbound(name.clone()), span)
                })?;
                Decl::recdef(
                    &name,
                    self.core_type(&info.class, span)?,
                    self.core_term(&body, span)?,
                )
            }
        })
    }

    fn core_kind(&mut self, c: &EClass, span: Span) -> EResult<Kind> {
        match c {
            EClass::Type => Ok(Kind::Type),
            EClass::Cotype => Ok(Kind::Cotype),
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => Ok(Kind::Pi(
                Binder {
                    var: var.clone(),
                    flavor: self.flavor(*cell),
                    ty: Box::new(self.core_type(dom, span)?),
                },
                Box::new(self.core_kind(cod, span)?),
            )),
            other => Err(ElabError::new(
                ElabErrorKind::NotAType(other.to_string()),
                span,
            )),
        }
    }

    fn core_type(&mut self, c: &EClass, span: Span) -> EResult<Type> {
        match c {
            EClass::Atom(a, args) => Ok(Type::Atomic(AtomicType {
                family: a.clone(),
                spine: self.core_spine(args, span)?,
            })),
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => Ok(Type::Pi(
                Binder {
                    var: var.clone(),
                    flavor: self.flavor(*cell),
                    ty: Box::new(self.core_type(dom, span)?),
                },
                Box::new(self.core_type(cod, span)?),
            )),
            EClass::Meta(..) => Err(ElabError::new(
                ElabErrorKind::CannotInferType(c.to_string()),
                span,
            )),
            EClass::Type | EClass::Cotype => Err(ElabError::new(ElabErrorKind::SortInType, span)),
        }
    }

    fn core_spine(&mut self, args: &[EArg], span: Span) -> EResult<Vec<SpineEntry>> {
        args.iter()
            .map(|a| match a {
                EArg::Term(t) => Ok(SpineEntry::Term(self.core_term(t, span)?)),
                EArg::Prepat(x) => Ok(SpineEntry::Prepat(x.clone())),
            })
            .collect()
    }

    fn core_term(&mut self, t: &ETerm, span: Span) -> EResult<Term> {
        match t {
            ETerm::Lam(x, b) => Ok(Term::Lam(x.clone(), Box::new(self.core_term(b, span)?))),
            ETerm::App(h, args) => {
                let head = match h {
                    EHead::Var(x) => Head::Var(x.clone()),
                    EHead::Const(c) => Head::Const(c.clone()),
                    EHead::Rec(r) => Head::Rec(r.clone()),
                    EHead::Meta(m, _) => {
                        let span = self.metas[*m].span;
                        let ty = match self.metas[*m].sort.clone() {
                            MetaSort::Term(ty) => self.show_class(&ty),
                            MetaSort::Class => "type".to_string(),
                        };
                        return Err(ElabError::new(ElabErrorKind::UnsolvedHole(ty), span));
                    }
                };
                Ok(Term::Neutral(Neutral {
                    head,
                    spine: self.core_spine(args, span)?,
                }))
            }
        }
    }
}

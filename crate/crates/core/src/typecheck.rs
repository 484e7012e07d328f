//! Bidirectional type checking of whole signatures.
//!
//! Checking runs in two phases. Phase 1 walks the declarations in order,
//! checking kinds, constructor types, and the declared types and side
//! conditions of recursive definitions against the prefix Ξ checked so far.
//! Phase 2 checks every recursive-definition body, where any recursive
//! definition of the signature may be referenced.
//!
//! Every declaration gets its own verdict: a failure is attributed to the
//! first failing premise and checking continues with the next declaration.
//! A declaration that mentions a constant rejected in phase 1 is itself
//! rejected.

use crate::equality::{EqConfig, EqContext, EqStats, EqVerdict, Equality, EqualityError};
use crate::print::Printer;
use crate::subst::{erase, hsubst_kind, hsubst_type, rename_kind, rename_term, rename_type, SubstError};
use crate::syntax::*;
use crate::validity::{check_guarded, is_contractive, is_prepattern_type, GuardError};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub memo_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            memo_cap: crate::equality::DEFAULT_MEMO_CAP,
        }
    }
}

/// The judgment whose premise failed.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Judgment {
    Kind,
    Type,
    Term,
    Spine,
    TypeEquality,
    Prepattern,
    Contractive,
    Guardedness,
    Dependency,
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Judgment::Kind => "kind",
            Judgment::Type => "type",
            Judgment::Term => "term",
            Judgment::Spine => "spine",
            Judgment::TypeEquality => "type equality",
            Judgment::Prepattern => "prepattern",
            Judgment::Contractive => "contractiveness",
            Judgment::Guardedness => "guardedness",
            Judgment::Dependency => "dependency",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error(transparent)]
    Resolve(#[from] SignatureError),
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("`{family}` applied to its arguments has kind `{kind}`, not `type` or `cotype`")]
    NotASort { family: Sym, kind: String },
    #[error("expected a type of family `{expected}`, found `{found}`")]
    FamilyMismatch { expected: Sym, found: Sym },
    #[error("type mismatch: expected `{expected}`, found `{found}` ({reason})")]
    Mismatch {
        expected: String,
        found: String,
        reason: String,
    },
    #[error("Π-binders differ in flavor: `{0}` against `{1}`")]
    FlavorMismatch(String, String),
    #[error("abstraction `{term}` checked against atomic type `{ty}`")]
    LamAgainstAtomic { term: String, ty: String },
    #[error("`{term}` is not η-long: it is checked against the Π-type `{ty}`")]
    NotEtaLong { term: String, ty: String },
    #[error("spine has an extra argument beyond `{0}`")]
    TooManyArgs(String),
    #[error("spine stops at the Π-type `{0}`")]
    TooFewArgs(String),
    #[error("ordinary argument `{0}` given where a prepattern variable is required")]
    TermForPrepat(String),
    #[error("prepattern argument [{0}] given for an ordinary Π")]
    PrepatForOrdinary(String),
    #[error("[{0}] is not a prepattern-bound variable")]
    NotPrepatVar(String),
    #[error("substitution failed: {0}")]
    Subst(#[from] SubstError),
    #[error("equality check failed: {0}")]
    Equality(#[from] EqualityError),
    #[error("declared type `{0}` is not a telescope of prepattern Π-binders")]
    NotPrepatType(String),
    #[error("body `{0}` is not contractive: its head is a recursion constant")]
    NotContractive(String),
    #[error(transparent)]
    Guard(#[from] GuardError),
    #[error("depends on rejected declaration `{0}`")]
    DependsOn(Sym),
}

/// A failed premise with the judgment it belongs to and where it was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub judgment: Judgment,
    pub error: TypeError,
    /// Outermost location first.
    pub trail: Vec<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.judgment, self.error)?;
        for t in &self.trail {
            write!(f, "; {t}")?;
        }
        Ok(())
    }
}

type Check<T> = Result<T, Diagnostic>;

fn fail<T>(judgment: Judgment, error: TypeError) -> Check<T> {
    Err(Diagnostic {
        judgment,
        error,
        trail: Vec::new(),
    })
}

trait Within<T> {
    fn within(self, what: impl FnOnce() -> String) -> Check<T>;
}

impl<T> Within<T> for Check<T> {
    fn within(self, what: impl FnOnce() -> String) -> Check<T> {
        self.map_err(|mut d| {
            d.trail.insert(0, what());
            d
        })
    }
}

/// One step of the signature check, in the order performed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStep {
    Kind(Sym),
    Type(Sym),
    Body(Sym),
}

#[derive(Clone, Debug)]
pub struct DeclReport {
    pub name: Sym,
    pub index: usize,
    pub result: Result<(), Diagnostic>,
}

#[derive(Clone, Debug, Default)]
pub struct SignatureReport {
    pub decls: Vec<DeclReport>,
    pub order: Vec<CheckStep>,
    pub eq_stats: EqStats,
}

impl SignatureReport {
    pub fn is_ok(&self) -> bool {
        self.decls.iter().all(|d| d.result.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&DeclReport, &Diagnostic)> {
        self.decls
            .iter()
            .filter_map(|d| d.result.as_ref().err().map(|e| (d, e)))
    }

    pub fn get(&self, name: &str) -> Option<&DeclReport> {
        self.decls.iter().find(|d| &*d.name == name)
    }
}

/// Check every declaration of `sig`.
pub fn check_signature(sig: &Signature, opts: &CheckOptions) -> SignatureReport {
    let mut report = SignatureReport::default();
    let mut rejected: BTreeSet<Sym> = BTreeSet::new();
    let mut deferred = Vec::new();
    let mut stats = EqStats::default();
    for (i, d) in sig.decls().iter().enumerate() {
        let mut ck = Checker::new(sig, i, false, opts);
        let result = match &d.kind {
            DeclKind::Family(k) => {
                report.order.push(CheckStep::Kind(d.name.clone()));
                depends(&rejected, constants_of_kind(k))
                    .and_then(|_| ck.check_kind(&mut Context::new(), k))
            }
            DeclKind::Constructor(a) => {
                report.order.push(CheckStep::Type(d.name.clone()));
                depends(&rejected, constants_of_type(a))
                    .and_then(|_| ck.check_type(&mut Context::new(), a))
            }
            DeclKind::RecDef { ty, body } => {
                report.order.push(CheckStep::Type(d.name.clone()));
                let r = depends(&rejected, constants_of_type(ty))
                    .and_then(|_| ck.check_type(&mut Context::new(), ty))
                    .and_then(|_| ck.recdef_conditions(&d.name, ty, body));
                if r.is_ok() {
                    deferred.push(i);
                }
                r
            }
        };
        merge(&mut stats, ck.stats);
        if result.is_err() {
            rejected.insert(d.name.clone());
        }
        report.decls.push(DeclReport {
            name: d.name.clone(),
            index: i,
            result,
        });
    }
    for i in deferred {
        let d = &sig.decls()[i];
        let DeclKind::RecDef { ty, body } = &d.kind else {
            continue;
        };
        report.order.push(CheckStep::Body(d.name.clone()));
        let mut ck = Checker::new(sig, i, true, opts);
        let result = depends(&rejected, constants_of(body))
            .and_then(|_| ck.check_term(&mut Context::new(), body, ty))
            .within(|| format!("in the body of `{}`", d.name));
        merge(&mut stats, ck.stats);
        report.decls[i].result = result;
    }
    report.eq_stats = stats;
    report
}

fn merge(into: &mut EqStats, from: EqStats) {
    into.max_delta = into.max_delta.max(from.max_delta);
    into.unfolds += from.unfolds;
    into.memo_hits += from.memo_hits;
}

fn depends(rejected: &BTreeSet<Sym>, names: BTreeSet<Sym>) -> Check<()> {
    match names.into_iter().find(|n| rejected.contains(n)) {
        Some(n) => fail(Judgment::Dependency, TypeError::DependsOn(n)),
        None => Ok(()),
    }
}

fn constants_of_type(a: &Type) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    add_type_constants(a, &mut out);
    out
}

fn constants_of_kind(k: &Kind) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    let mut k = k;
    while let Kind::Pi(b, body) = k {
        add_type_constants(&b.ty, &mut out);
        k = body;
    }
    out
}

fn add_type_constants(a: &Type, out: &mut BTreeSet<Sym>) {
    match a {
        Type::Atomic(p) => {
            out.insert(p.family.clone());
            for e in &p.spine {
                if let SpineEntry::Term(m) = e {
                    out.extend(constants_of(m));
                }
            }
        }
        Type::Pi(b, body) => {
            add_type_constants(&b.ty, out);
            add_type_constants(body, out);
        }
    }
}

/// Judgments under a fixed Ξ (the first `local` declarations) and Σ.
pub struct Checker<'s> {
    sig: &'s Signature,
    local: usize,
    definitions: bool,
    eq: EqConfig,
    stats: EqStats,
}

impl<'s> Checker<'s> {
    /// `local` is the length of Ξ. With `definitions`, every recursive
    /// definition of Σ is in scope regardless of position.
    pub fn new(sig: &'s Signature, local: usize, definitions: bool, opts: &CheckOptions) -> Checker<'s> {
        Checker {
            sig,
            local,
            definitions,
            eq: EqConfig {
                memo_cap: opts.memo_cap,
            },
            stats: EqStats::default(),
        }
    }

    pub fn stats(&self) -> EqStats {
        self.stats
    }

    fn lookup(&self, name: &str, cat: Category, judgment: Judgment) -> Check<&'s Decl> {
        let sig = self.sig;
        let Some(pos) = sig.position(name) else {
            return fail(judgment, SignatureError::Unknown(Sym::from(name)).into());
        };
        let d = &sig.decls()[pos];
        if d.category() != cat {
            return fail(
                judgment,
                SignatureError::WrongCategory {
                    name: d.name.clone(),
                    expected: cat,
                    found: d.category(),
                }
                .into(),
            );
        }
        if pos < self.local || (self.definitions && cat == Category::RecDef) {
            return Ok(d);
        }
        let from = sig
            .decls()
            .get(self.local)
            .map(|d| d.name.clone())
            .unwrap_or_else(|| Sym::from("<end>"));
        fail(
            judgment,
            SignatureError::ForwardReference {
                from,
                from_pos: self.local,
                target: d.name.clone(),
                target_pos: pos,
            }
            .into(),
        )
    }

    /// Extend Γ with `x`, choosing a new name if `x` is already bound.
    fn bind(ctx: &mut Context, x: &Var, ty: &Type, flavor: Flavor) -> Option<Var> {
        debug_assert!(ty.free_vars().iter().all(|v| ctx.lookup(v).is_some()));
        if ctx.lookup(x).is_some() {
            let z = x.refresh();
            ctx.push(z.clone(), ty.clone(), flavor);
            Some(z)
        } else {
            ctx.push(x.clone(), ty.clone(), flavor);
            None
        }
    }

    /// `Γ ⊢ K ⇐ kind`
    pub fn check_kind(&mut self, ctx: &mut Context, k: &Kind) -> Check<()> {
        match k {
            Kind::Type | Kind::Cotype => Ok(()),
            Kind::Pi(b, body) => {
                self.check_type(ctx, &b.ty)?;
                let out = match Self::bind(ctx, &b.var, &b.ty, b.flavor) {
                    Some(z) => self.check_kind(ctx, &rename_kind(&z, &b.var, body)),
                    None => self.check_kind(ctx, body),
                };
                ctx.pop();
                out
            }
        }
    }

    /// `Γ ⊢ A ⇐ type/cotype`
    pub fn check_type(&mut self, ctx: &mut Context, a: &Type) -> Check<()> {
        match a {
            Type::Atomic(p) => {
                let k = self.synth_atomic(ctx, p)?;
                match k {
                    Kind::Type | Kind::Cotype => Ok(()),
                    k => fail(
                        Judgment::Type,
                        TypeError::NotASort {
                            family: p.family.clone(),
                            kind: Printer::new().kind(&k),
                        },
                    ),
                }
            }
            Type::Pi(b, body) => {
                self.check_type(ctx, &b.ty)?;
                let out = match Self::bind(ctx, &b.var, &b.ty, b.flavor) {
                    Some(z) => self.check_type(ctx, &rename_type(&z, &b.var, body)),
                    None => self.check_type(ctx, body),
                };
                ctx.pop();
                out
            }
        }
    }

    /// `Γ ⊢ P ⇒ K`
    pub fn synth_atomic(&mut self, ctx: &mut Context, p: &AtomicType) -> Check<Kind> {
        let d = self.lookup(&p.family, Category::Family, Judgment::Type)?;
        let DeclKind::Family(k) = &d.kind else {
            unreachable!()
        };
        self.check_spine_against_kind(ctx, &p.spine, k)
            .within(|| format!("in the arguments of `{}`", p.family))
    }

    /// `Γ ⊢ S ▷ K ⇒ K'`
    pub fn check_spine_against_kind(&mut self, ctx: &mut Context, s: &Spine, k: &Kind) -> Check<Kind> {
        let mut k = k.clone();
        for (i, e) in s.iter().enumerate() {
            let Kind::Pi(b, body) = k else {
                return fail(Judgment::Spine, TypeError::TooManyArgs(Printer::new().kind(&k)));
            };
            k = match (e, b.flavor) {
                (SpineEntry::Term(m), Flavor::Ordinary) => {
                    self.check_term(ctx, m, &b.ty)
                        .within(|| format!("argument {}", i + 1))?;
                    hsubst_kind(m, &b.var, &erase(&b.ty), &body)
                        .map_err(|e| Diagnostic {
                            judgment: Judgment::Spine,
                            error: e.into(),
                            trail: Vec::new(),
                        })?
                }
                (SpineEntry::Prepat(y), Flavor::Prepattern) => {
                    self.prepat_arg(ctx, y, &b.ty)?;
                    rename_kind(y, &b.var, &body)
                }
                (SpineEntry::Term(m), Flavor::Prepattern) => {
                    return fail(Judgment::Spine, TypeError::TermForPrepat(Printer::new().term(m)))
                }
                (SpineEntry::Prepat(y), Flavor::Ordinary) => {
                    return fail(
                        Judgment::Spine,
                        TypeError::PrepatForOrdinary(Printer::new().term(&Term::var(y))),
                    )
                }
            };
        }
        Ok(k)
    }

    fn prepat_arg(&mut self, ctx: &mut Context, y: &Var, expected: &Type) -> Check<()> {
        let entry = match ctx.lookup(y) {
            Some(e) if e.flavor == Flavor::Prepattern => e.ty.clone(),
            _ => {
                return fail(
                    Judgment::Spine,
                    TypeError::NotPrepatVar(Printer::new().term(&Term::var(y))),
                )
            }
        };
        self.type_equal(ctx, &entry, expected)
    }

    /// `Γ ⊢ M ⇐ A`
    pub fn check_term(&mut self, ctx: &mut Context, m: &Term, a: &Type) -> Check<()> {
        debug_assert!(distinct_vars(ctx));
        match (m, a) {
            (Term::Lam(x, body), Type::Pi(b, cod)) => {
                let cod = if *x == b.var {
                    (**cod).clone()
                } else {
                    rename_type(x, &b.var, cod)
                };
                let out = match Self::bind(ctx, x, &b.ty, b.flavor) {
                    Some(z) => self.check_term(ctx, &rename_term(&z, x, body), &rename_type(&z, x, &cod)),
                    None => self.check_term(ctx, body, &cod),
                };
                ctx.pop();
                out
            }
            (Term::Lam(..), Type::Atomic(_)) => {
                let mut p = Printer::new();
                fail(
                    Judgment::Term,
                    TypeError::LamAgainstAtomic {
                        term: p.term(m),
                        ty: p.ty(a),
                    },
                )
            }
            (Term::Neutral(_), Type::Pi(..)) => {
                let mut p = Printer::new();
                fail(
                    Judgment::Term,
                    TypeError::NotEtaLong {
                        term: p.term(m),
                        ty: p.ty(a),
                    },
                )
            }
            (Term::Neutral(r), Type::Atomic(p)) => {
                let found = self.synth_neutral(ctx, r)?;
                self.atomic_equal(ctx, &found, p)
            }
        }
    }

    /// `Γ ⊢ R ⇒ P`
    pub fn synth_neutral(&mut self, ctx: &mut Context, r: &Neutral) -> Check<AtomicType> {
        let (a, what) = match &r.head {
            Head::Var(x) => match ctx.lookup(x) {
                Some(e) => (e.ty.clone(), Printer::new().term(&Term::var(x))),
                None => {
                    return fail(Judgment::Term, TypeError::Unbound(Printer::new().term(&Term::var(x))))
                }
            },
            Head::Const(c) => {
                let d = self.lookup(c, Category::Constructor, Judgment::Term)?;
                let DeclKind::Constructor(a) = &d.kind else {
                    unreachable!()
                };
                (a.clone(), String::from(&**c))
            }
            Head::Rec(name) => {
                let d = self.lookup(name, Category::RecDef, Judgment::Term)?;
                let DeclKind::RecDef { ty, .. } = &d.kind else {
                    unreachable!()
                };
                (ty.clone(), String::from(&**name))
            }
        };
        self.check_spine_against_type(ctx, &r.spine, &a)
            .within(|| format!("in the arguments of `{what}`"))
    }

    /// `Γ ⊢ S ▷ A ⇒ P`
    pub fn check_spine_against_type(&mut self, ctx: &mut Context, s: &Spine, a: &Type) -> Check<AtomicType> {
        let mut a = a.clone();
        for (i, e) in s.iter().enumerate() {
            let Type::Pi(b, body) = a else {
                return fail(Judgment::Spine, TypeError::TooManyArgs(Printer::new().ty(&a)));
            };
            a = match (e, b.flavor) {
                (SpineEntry::Term(m), Flavor::Ordinary) => {
                    self.check_term(ctx, m, &b.ty)
                        .within(|| format!("argument {}", i + 1))?;
                    hsubst_type(m, &b.var, &erase(&b.ty), &body).map_err(|e| Diagnostic {
                        judgment: Judgment::Spine,
                        error: e.into(),
                        trail: Vec::new(),
                    })?
                }
                (SpineEntry::Prepat(y), Flavor::Prepattern) => {
                    self.prepat_arg(ctx, y, &b.ty)
                        .within(|| format!("argument {}", i + 1))?;
                    rename_type(y, &b.var, &body)
                }
                (SpineEntry::Term(m), Flavor::Prepattern) => {
                    return fail(Judgment::Spine, TypeError::TermForPrepat(Printer::new().term(m)))
                        .within(|| format!("argument {}", i + 1))
                }
                (SpineEntry::Prepat(y), Flavor::Ordinary) => {
                    return fail(
                        Judgment::Spine,
                        TypeError::PrepatForOrdinary(Printer::new().term(&Term::var(y))),
                    )
                    .within(|| format!("argument {}", i + 1))
                }
            };
        }
        match a {
            Type::Atomic(p) => Ok(p),
            a => fail(Judgment::Spine, TypeError::TooFewArgs(Printer::new().ty(&a))),
        }
    }

    /// `Γ ⊢ A1 = A2`
    pub fn type_equal(&mut self, ctx: &mut Context, a1: &Type, a2: &Type) -> Check<()> {
        match (a1, a2) {
            (Type::Atomic(p), Type::Atomic(q)) => self.atomic_equal(ctx, p, q),
            (Type::Pi(b1, c1), Type::Pi(b2, c2)) => {
                if b1.flavor != b2.flavor {
                    let mut p = Printer::new();
                    return fail(
                        Judgment::TypeEquality,
                        TypeError::FlavorMismatch(p.ty(a1), p.ty(a2)),
                    );
                }
                self.type_equal(ctx, &b1.ty, &b2.ty)?;
                let z = b1.var.refresh();
                ctx.push(z.clone(), (*b1.ty).clone(), b1.flavor);
                let out = self.type_equal(
                    ctx,
                    &rename_type(&z, &b1.var, c1),
                    &rename_type(&z, &b2.var, c2),
                );
                ctx.pop();
                out
            }
            _ => {
                let mut p = Printer::new();
                fail(
                    Judgment::TypeEquality,
                    TypeError::Mismatch {
                        expected: p.ty(a2),
                        found: p.ty(a1),
                        reason: String::from("one is a Π-type and the other is atomic"),
                    },
                )
            }
        }
    }

    /// `Γ ⊢ P1 = P2`, delegating spine equality to the equality checker
    /// with Θ = |Γ| and empty Δ.
    pub fn atomic_equal(&mut self, ctx: &Context, found: &AtomicType, expected: &AtomicType) -> Check<()> {
        if found.family != expected.family {
            return fail(
                Judgment::TypeEquality,
                TypeError::FamilyMismatch {
                    expected: expected.family.clone(),
                    found: found.family.clone(),
                },
            );
        }
        let mut eq = Equality::with_context(self.sig, self.eq, EqContext::new());
        let verdict = eq.spines(&mut ctx.vars(), &found.spine, &expected.spine);
        let s = eq.stats();
        self.stats.max_delta = self.stats.max_delta.max(s.max_delta);
        self.stats.unfolds += s.unfolds;
        self.stats.memo_hits += s.memo_hits;
        match verdict {
            Ok(EqVerdict::Equal) => Ok(()),
            Ok(EqVerdict::Unequal(reason)) => {
                let mut p = Printer::new();
                fail(
                    Judgment::TypeEquality,
                    TypeError::Mismatch {
                        expected: p.ty(&Type::Atomic(expected.clone())),
                        found: p.ty(&Type::Atomic(found.clone())),
                        reason,
                    },
                )
            }
            Err(e) => fail(Judgment::TypeEquality, e.into()),
        }
    }

    /// The phase-1 side conditions of `r : A = M`.
    fn recdef_conditions(&mut self, name: &Sym, ty: &Type, body: &Term) -> Check<()> {
        if !is_prepattern_type(ty) {
            return fail(Judgment::Prepattern, TypeError::NotPrepatType(Printer::new().ty(ty)));
        }
        if !is_contractive(body) {
            return fail(Judgment::Contractive, TypeError::NotContractive(Printer::new().term(body)));
        }
        match check_guarded(self.sig, name, body) {
            Ok(()) => Ok(()),
            Err(e @ GuardError::NonPrepatSpine { .. }) => fail(Judgment::Prepattern, e.into()),
            Err(e) => fail(Judgment::Guardedness, e.into()),
        }
    }
}

fn distinct_vars(ctx: &Context) -> bool {
    let mut seen = BTreeSet::new();
    ctx.entries().iter().all(|e| seen.insert(e.var.clone()))
}

//! Circular equality of rational terms.
//!
//! Goals whose head is a recursion constant are memoized in Δ before the
//! definition is unfolded. A later goal that is a renaming instance of a
//! memoized equation is closed immediately. Δ is path-local: an equation is
//! only available to the goals it was introduced above.
//!
//! Rules are tried in a fixed order: memo lookup, unfold on the left,
//! unfold on the right, then the structural rules.

use crate::print::Printer;
use crate::subst::{erase, reduce_spine_neutral, rename_term, Renaming, SubstError};
use crate::syntax::*;
use crate::validity::{is_contractive, is_prepattern_spine};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Default bound on |Δ|.
pub const DEFAULT_MEMO_CAP: usize = 10_000;

/// A memoized claim `⟨Θ' ⊢ lhs = rhs⟩`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub theta: Vec<Var>,
    pub lhs: Neutral,
    pub rhs: Neutral,
}

/// Δ, the equations assumed on the current path.
#[derive(Clone, Debug, Default)]
pub struct EqContext {
    equations: Vec<Equation>,
}

impl EqContext {
    pub fn new() -> EqContext {
        EqContext::default()
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn push(&mut self, e: Equation) {
        self.equations.push(e);
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EqConfig {
    pub memo_cap: usize,
}

impl Default for EqConfig {
    fn default() -> EqConfig {
        EqConfig {
            memo_cap: DEFAULT_MEMO_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EqVerdict {
    Equal,
    Unequal(String),
}

impl EqVerdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, EqVerdict::Equal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EqualityError {
    #[error("definition of `{0}` is not contractive")]
    NonContractive(Sym),
    #[error("recursion constant `{0}` is applied to a spine that is not prepattern")]
    NonPrepatSpine(Sym),
    #[error("`{0}` is not a recursive definition")]
    UnknownRec(Sym),
    #[error("unfolding `{name}` failed: {cause}")]
    Unfold { name: Sym, cause: SubstError },
    #[error("memo table reached its cap of {0} equations")]
    MemoCap(usize),
}

/// Counters collected over one or more queries.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct EqStats {
    /// Largest |Δ| reached.
    pub max_delta: usize,
    pub unfolds: usize,
    pub memo_hits: usize,
}

/// An equality checker over a fixed signature.
pub struct Equality<'s> {
    sig: &'s Signature,
    config: EqConfig,
    delta: EqContext,
    stats: EqStats,
}

type EqResult = Result<EqVerdict, EqualityError>;

impl<'s> Equality<'s> {
    pub fn new(sig: &'s Signature, config: EqConfig) -> Equality<'s> {
        Equality::with_context(sig, config, EqContext::new())
    }

    pub fn with_context(sig: &'s Signature, config: EqConfig, delta: EqContext) -> Equality<'s> {
        let stats = EqStats {
            max_delta: delta.len(),
            ..EqStats::default()
        };
        Equality {
            sig,
            config,
            delta,
            stats,
        }
    }

    pub fn stats(&self) -> EqStats {
        self.stats
    }

    pub fn context(&self) -> &EqContext {
        &self.delta
    }

    /// `Δ; Θ ⊢ M = M'`
    pub fn terms(&mut self, theta: &mut Vec<Var>, m: &Term, n: &Term) -> EqResult {
        match (m, n) {
            (Term::Lam(x, a), Term::Lam(y, b)) => {
                let z = x.refresh();
                let a = rename_term(&z, x, a);
                let b = rename_term(&z, y, b);
                theta.push(z);
                let out = self.terms(theta, &a, &b);
                theta.pop();
                out
            }
            (Term::Neutral(r), Term::Neutral(s)) => self.neutrals(theta, r, s),
            _ => Ok(EqVerdict::Unequal(format!(
                "`{m}` and `{n}` differ in their λ-prefix"
            ))),
        }
    }

    /// `Δ; Θ ⊢ S = S'`
    pub fn spines(&mut self, theta: &mut Vec<Var>, s: &Spine, t: &Spine) -> EqResult {
        if s.len() != t.len() {
            return Ok(EqVerdict::Unequal(format!(
                "spines of length {} and {} differ",
                s.len(),
                t.len()
            )));
        }
        for (a, b) in s.iter().zip(t) {
            match (a, b) {
                (SpineEntry::Term(m), SpineEntry::Term(n)) => {
                    let v = self.terms(theta, m, n)?;
                    if !v.is_equal() {
                        return Ok(v);
                    }
                }
                (SpineEntry::Prepat(x), SpineEntry::Prepat(y)) if x == y => {}
                (SpineEntry::Prepat(x), SpineEntry::Prepat(y)) => {
                    let mut p = Printer::new();
                    return Ok(EqVerdict::Unequal(format!(
                        "prepattern arguments [{}] and [{}] differ",
                        p.term(&Term::var(x)),
                        p.term(&Term::var(y))
                    )));
                }
                _ => {
                    return Ok(EqVerdict::Unequal(String::from(
                        "a term argument meets a prepattern argument",
                    )))
                }
            }
        }
        Ok(EqVerdict::Equal)
    }

    pub fn neutrals(&mut self, theta: &mut Vec<Var>, r: &Neutral, s: &Neutral) -> EqResult {
        let left_rec = matches!(r.head, Head::Rec(_));
        let right_rec = matches!(s.head, Head::Rec(_));
        if left_rec || right_rec {
            // (1)
            let hit = self
                .delta
                .equations
                .iter()
                .rev()
                .any(|e| match_renaming(e, theta, r, s).is_some());
            if hit {
                self.stats.memo_hits += 1;
                return Ok(EqVerdict::Equal);
            }
            // (2), then (3)
            let (name, spine) = match (&r.head, &s.head) {
                (Head::Rec(name), _) => (name, &r.spine),
                (_, Head::Rec(name)) => (name, &s.spine),
                _ => unreachable!(),
            };
            let unfolded = self.unfold(name, spine)?;
            self.remember(theta, r, s)?;
            let out = if left_rec {
                self.neutrals(theta, &unfolded, s)
            } else {
                self.neutrals(theta, r, &unfolded)
            };
            self.delta.equations.pop();
            return out;
        }
        // (4), (5)
        let same_head = match (&r.head, &s.head) {
            (Head::Var(x), Head::Var(y)) => x == y,
            (Head::Const(c), Head::Const(d)) => c == d,
            _ => false,
        };
        if !same_head {
            let mut p = Printer::new();
            let (a, b) = (p.neutral(r), p.neutral(s));
            return Ok(EqVerdict::Unequal(format!(
                "`{a}` and `{b}` have different heads"
            )));
        }
        self.spines(theta, &r.spine, &s.spine)
    }

    fn remember(&mut self, theta: &[Var], r: &Neutral, s: &Neutral) -> Result<(), EqualityError> {
        if self.delta.len() >= self.config.memo_cap {
            return Err(EqualityError::MemoCap(self.config.memo_cap));
        }
        self.delta.push(Equation {
            theta: theta.to_vec(),
            lhs: r.clone(),
            rhs: s.clone(),
        });
        self.stats.max_delta = self.stats.max_delta.max(self.delta.len());
        Ok(())
    }

    /// `S ▷^{A°} M` for `r : A = M`.
    pub fn unfold(&mut self, name: &Sym, spine: &Spine) -> Result<Neutral, EqualityError> {
        let (ty, body) = self
            .sig
            .rec_def(name)
            .ok_or_else(|| EqualityError::UnknownRec(name.clone()))?;
        if !is_prepattern_spine(spine) {
            return Err(EqualityError::NonPrepatSpine(name.clone()));
        }
        if !is_contractive(body) {
            return Err(EqualityError::NonContractive(name.clone()));
        }
        self.stats.unfolds += 1;
        reduce_spine_neutral(spine, &erase(ty), body).map_err(|cause| EqualityError::Unfold {
            name: name.clone(),
            cause,
        })
    }
}

/// One-shot `Δ; Θ ⊢ M = M'`. Δ is restored on return.
pub fn equal_terms(
    delta: &EqContext,
    theta: &[Var],
    m: &Term,
    n: &Term,
    sig: &Signature,
    config: EqConfig,
) -> Result<(EqVerdict, EqStats), EqualityError> {
    let mut eq = Equality::with_context(sig, config, delta.clone());
    let v = eq.terms(&mut theta.to_vec(), m, n)?;
    Ok((v, eq.stats()))
}

/// One-shot `Δ; Θ ⊢ S = S'`.
pub fn equal_spines(
    delta: &EqContext,
    theta: &[Var],
    s: &Spine,
    t: &Spine,
    sig: &Signature,
    config: EqConfig,
) -> Result<(EqVerdict, EqStats), EqualityError> {
    let mut eq = Equality::with_context(sig, config, delta.clone());
    let v = eq.spines(&mut theta.to_vec(), s, t)?;
    Ok((v, eq.stats()))
}

/// Find σ with `Θ ⊢ σ : Θ'` sending the equation onto the goal.
///
/// σ need not be injective. Variables bound inside the terms must
/// correspond one to one.
pub fn match_renaming(e: &Equation, theta: &[Var], lhs: &Neutral, rhs: &Neutral) -> Option<Renaming> {
    let mut m = Matcher {
        domain: &e.theta,
        target: theta,
        sigma: BTreeMap::new(),
        bound: Vec::new(),
    };
    if m.neutral(&e.lhs, lhs) && m.neutral(&e.rhs, rhs) {
        let mut r = Renaming::new();
        for (from, to) in m.sigma {
            r.insert(from, to);
        }
        Some(r)
    } else {
        None
    }
}

struct Matcher<'a> {
    domain: &'a [Var],
    target: &'a [Var],
    sigma: BTreeMap<Var, Var>,
    bound: Vec<(Var, Var)>,
}

impl Matcher<'_> {
    fn var(&mut self, a: &Var, b: &Var) -> bool {
        for (x, y) in self.bound.iter().rev() {
            if x == a || y == b {
                return x == a && y == b;
            }
        }
        if !self.domain.contains(a) || !self.target.contains(b) {
            return false;
        }
        match self.sigma.get(a) {
            Some(prev) => prev == b,
            None => {
                self.sigma.insert(a.clone(), b.clone());
                true
            }
        }
    }

    fn term(&mut self, m: &Term, n: &Term) -> bool {
        match (m, n) {
            (Term::Lam(x, a), Term::Lam(y, b)) => {
                self.bound.push((x.clone(), y.clone()));
                let ok = self.term(a, b);
                self.bound.pop();
                ok
            }
            (Term::Neutral(r), Term::Neutral(s)) => self.neutral(r, s),
            _ => false,
        }
    }

    fn neutral(&mut self, r: &Neutral, s: &Neutral) -> bool {
        let heads = match (&r.head, &s.head) {
            (Head::Var(x), Head::Var(y)) => self.var(x, y),
            (Head::Const(c), Head::Const(d)) | (Head::Rec(c), Head::Rec(d)) => c == d,
            _ => false,
        };
        heads
            && r.spine.len() == s.spine.len()
            && r.spine.iter().zip(&s.spine).all(|(a, b)| match (a, b) {
                (SpineEntry::Term(m), SpineEntry::Term(n)) => self.term(m, n),
                (SpineEntry::Prepat(x), SpineEntry::Prepat(y)) => self.var(x, y),
                _ => false,
            })
    }
}

/// Parameters of the rough bound on |Δ|: maximum breadth `b`, maximum depth
/// `d`, maximum abstraction length `l`, number of constants `n` and number
/// of recursion constants `m`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BoundParams {
    pub b: usize,
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub m: usize,
}

impl BoundParams {
    /// `p = Σ_{i=1}^{d} b^{i-1}` as a float (it overflows integers quickly).
    pub fn traces(&self) -> f64 {
        let mut p = 0.0f64;
        let mut pow = 1.0f64;
        for _ in 0..self.d {
            p += pow;
            pow *= self.b as f64;
        }
        p
    }

    /// The bound is `base^exponent` with `base = exponent - 1 - m - n`.
    pub fn base_and_exponent(&self) -> (f64, f64) {
        let base = (self.l as f64 + 1.0) * self.traces();
        (base, 1.0 + self.m as f64 + self.n as f64 + base)
    }
}

/// Measure a signature for [`BoundParams`].
pub fn bound_params(sig: &Signature) -> BoundParams {
    let mut p = BoundParams {
        b: 0,
        d: 0,
        l: 0,
        n: 0,
        m: 0,
    };
    for d in sig.decls() {
        match &d.kind {
            DeclKind::Family(_) => {}
            DeclKind::Constructor(a) => {
                p.n += 1;
                p.l = p.l.max(telescope_len(a));
            }
            DeclKind::RecDef { ty, body } => {
                p.m += 1;
                p.l = p.l.max(telescope_len(ty));
                let (b, depth) = shape(body);
                p.b = p.b.max(b);
                p.d = p.d.max(depth);
            }
        }
    }
    p
}

fn telescope_len(a: &Type) -> usize {
    match a {
        Type::Atomic(_) => 0,
        Type::Pi(_, body) => 1 + telescope_len(body),
    }
}

/// (maximum breadth, depth) of a term.
fn shape(m: &Term) -> (usize, usize) {
    let (_, r) = m.strip_lams();
    let mut breadth = r.spine.len();
    let mut depth = 0;
    for e in &r.spine {
        if let SpineEntry::Term(n) = e {
            let (b, d) = shape(n);
            breadth = breadth.max(b);
            depth = depth.max(d);
        }
    }
    (breadth, depth + 1)
}

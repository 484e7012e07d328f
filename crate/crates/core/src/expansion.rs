//! Depth-bounded Böhm-tree approximants of rational terms.
//!
//! `exp_k(M)` unfolds recursion constants on demand and cuts the tree at
//! depth `k` with an explicit bottom. A λ and a recursion unfold do not use
//! up depth; a variable or constructor head consumes one level for all of
//! its arguments together.

use crate::subst::{erase, reduce_spine, SimpleType, SubstError};
use crate::syntax::*;
use crate::validity::is_prepattern_spine;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug)]
pub enum Approx {
    Bottom,
    Lam(Var, Box<Approx>),
    Node(ApproxHead, Vec<ApproxArg>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApproxHead {
    Var(Var),
    Const(Sym),
}

#[derive(Clone, Debug)]
pub enum ApproxArg {
    Tree(Approx),
    Prepat(Var),
}

/// Default cap on the number of nodes built by one expansion.
pub const DEFAULT_NODE_BUDGET: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("recursion constant `{0}` is applied to a spine that is not prepattern")]
    NonPrepatSpine(Sym),
    #[error("unfolding `{0}` never reaches a constructor or variable head")]
    NonContractive(Sym),
    #[error("`{0}` is not a recursive definition")]
    UnknownRec(Sym),
    #[error("unfolding `{name}` failed: {cause}")]
    Unfold { name: Sym, cause: SubstError },
    #[error("expansion exceeded its budget of {0} nodes")]
    Budget(usize),
}

struct Expander<'s> {
    sig: &'s Signature,
    fuel: usize,
    budget: usize,
    built: usize,
}

impl Expander<'_> {
    fn tick(&mut self) -> Result<(), ExpandError> {
        self.built += 1;
        if self.built > self.budget {
            Err(ExpandError::Budget(self.budget))
        } else {
            Ok(())
        }
    }

    fn term(&mut self, m: &Term, k: usize) -> Result<Approx, ExpandError> {
        if k == 0 {
            return Ok(Approx::Bottom);
        }
        self.tick()?;
        match m {
            Term::Lam(x, body) => Ok(Approx::Lam(x.clone(), Box::new(self.term(body, k)?))),
            Term::Neutral(r) => self.neutral(r, k, self.fuel),
        }
    }

    fn neutral(&mut self, r: &Neutral, k: usize, fuel: usize) -> Result<Approx, ExpandError> {
        let head = match &r.head {
            Head::Var(x) => ApproxHead::Var(x.clone()),
            Head::Const(c) => ApproxHead::Const(c.clone()),
            Head::Rec(name) => {
                if fuel == 0 {
                    return Err(ExpandError::NonContractive(name.clone()));
                }
                if !is_prepattern_spine(&r.spine) {
                    return Err(ExpandError::NonPrepatSpine(name.clone()));
                }
                let (ty, body) = self
                    .sig
                    .rec_def(name)
                    .ok_or_else(|| ExpandError::UnknownRec(name.clone()))?;
                let unfolded = reduce_spine(&r.spine, &erase(ty), body).map_err(|cause| {
                    ExpandError::Unfold {
                        name: name.clone(),
                        cause,
                    }
                })?;
                return match unfolded {
                    Term::Neutral(n) => self.neutral(&n, k, fuel - 1),
                    Term::Lam(..) => Err(ExpandError::Unfold {
                        name: name.clone(),
                        cause: SubstError::ShapeMismatch(SimpleType::Base),
                    }),
                };
            }
        };
        let mut args = Vec::with_capacity(r.spine.len());
        for e in &r.spine {
            args.push(match e {
                SpineEntry::Term(m) => ApproxArg::Tree(self.term(m, k - 1)?),
                SpineEntry::Prepat(x) => ApproxArg::Prepat(x.clone()),
            });
        }
        Ok(Approx::Node(head, args))
    }
}

/// `exp_k(M)`
pub fn expand(sig: &Signature, m: &Term, k: usize) -> Result<Approx, ExpandError> {
    expand_with_budget(sig, m, k, DEFAULT_NODE_BUDGET)
}

pub fn expand_with_budget(
    sig: &Signature,
    m: &Term,
    k: usize,
    budget: usize,
) -> Result<Approx, ExpandError> {
    Expander {
        sig,
        fuel: sig.rec_count() + 1,
        budget,
        built: 0,
    }
    .term(m, k)
}

/// α-equivalence of approximants.
pub fn approx_equal(a: &Approx, b: &Approx) -> bool {
    compare(a, b, &mut Vec::new(), false)
}

/// `a ⊑ b`: `a` is `b` with some subtrees replaced by bottom.
pub fn approx_below(a: &Approx, b: &Approx) -> bool {
    compare(a, b, &mut Vec::new(), true)
}

fn same_var(x: &Var, y: &Var, pairs: &[(Var, Var)]) -> bool {
    for (a, b) in pairs.iter().rev() {
        if a == x || b == y {
            return a == x && b == y;
        }
    }
    x == y
}

fn compare(a: &Approx, b: &Approx, pairs: &mut Vec<(Var, Var)>, below: bool) -> bool {
    match (a, b) {
        (Approx::Bottom, _) if below => true,
        (Approx::Bottom, Approx::Bottom) => true,
        (Approx::Lam(x, s), Approx::Lam(y, t)) => {
            pairs.push((x.clone(), y.clone()));
            let ok = compare(s, t, pairs, below);
            pairs.pop();
            ok
        }
        (Approx::Node(h, xs), Approx::Node(g, ys)) => {
            let heads = match (h, g) {
                (ApproxHead::Var(x), ApproxHead::Var(y)) => same_var(x, y, pairs),
                (ApproxHead::Const(c), ApproxHead::Const(d)) => c == d,
                _ => false,
            };
            heads
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(p, q)| match (p, q) {
                    (ApproxArg::Tree(s), ApproxArg::Tree(t)) => compare(s, t, pairs, below),
                    (ApproxArg::Prepat(x), ApproxArg::Prepat(y)) => same_var(x, y, pairs),
                    _ => false,
                })
        }
        _ => false,
    }
}

impl Approx {
    /// Cut at depth `k`, using the same accounting as [`expand`].
    pub fn truncate(&self, k: usize) -> Approx {
        if k == 0 {
            return Approx::Bottom;
        }
        match self {
            Approx::Bottom => Approx::Bottom,
            Approx::Lam(x, body) => Approx::Lam(x.clone(), Box::new(body.truncate(k))),
            Approx::Node(h, args) => Approx::Node(
                h.clone(),
                args.iter()
                    .map(|a| match a {
                        ApproxArg::Tree(t) => ApproxArg::Tree(t.truncate(k - 1)),
                        ApproxArg::Prepat(x) => ApproxArg::Prepat(x.clone()),
                    })
                    .collect(),
            ),
        }
    }

    /// Depth under the same accounting as [`expand`].
    pub fn depth(&self) -> usize {
        match self {
            Approx::Bottom => 0,
            Approx::Lam(_, body) => body.depth().max(1),
            Approx::Node(_, args) => {
                1 + args
                    .iter()
                    .map(|a| match a {
                        ApproxArg::Tree(t) => t.depth(),
                        ApproxArg::Prepat(_) => 0,
                    })
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Approx::Bottom => 1,
            Approx::Lam(_, body) => 1 + body.size(),
            Approx::Node(_, args) => {
                1 + args
                    .iter()
                    .map(|a| match a {
                        ApproxArg::Tree(t) => t.size(),
                        ApproxArg::Prepat(_) => 1,
                    })
                    .sum::<usize>()
            }
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Approx::Bottom)
    }

    fn free_vars_into(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Approx::Bottom => {}
            Approx::Lam(x, body) => {
                bound.push(x.clone());
                body.free_vars_into(bound, out);
                bound.pop();
            }
            Approx::Node(h, args) => {
                if let ApproxHead::Var(x) = h {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                for a in args {
                    match a {
                        ApproxArg::Tree(t) => t.free_vars_into(bound, out),
                        ApproxArg::Prepat(x) => {
                            if !bound.contains(x) {
                                out.insert(x.clone());
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    /// Rename free occurrences of `x` to `y`, capture-avoiding.
    pub fn rename(&self, y: &Var, x: &Var) -> Approx {
        match self {
            Approx::Bottom => Approx::Bottom,
            Approx::Lam(z, _) if z == x => self.clone(),
            Approx::Lam(z, body) if z == y => {
                let w = z.refresh();
                Approx::Lam(w.clone(), Box::new(body.rename(&w, z).rename(y, x)))
            }
            Approx::Lam(z, body) => Approx::Lam(z.clone(), Box::new(body.rename(y, x))),
            Approx::Node(h, args) => {
                let swap = |v: &Var| if v == x { y.clone() } else { v.clone() };
                let h = match h {
                    ApproxHead::Var(v) => ApproxHead::Var(swap(v)),
                    c => c.clone(),
                };
                Approx::Node(
                    h,
                    args.iter()
                        .map(|a| match a {
                            ApproxArg::Tree(t) => ApproxArg::Tree(t.rename(y, x)),
                            ApproxArg::Prepat(v) => ApproxArg::Prepat(swap(v)),
                        })
                        .collect(),
                )
            }
        }
    }

    /// Render as an indented tree, one node per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut names = Names::default();
        self.render_into(&mut out, 0, &mut names);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize, names: &mut Names) {
        for _ in 0..indent {
            out.push_str("  ");
        }
        match self {
            Approx::Bottom => out.push_str("_|_\n"),
            Approx::Lam(x, body) => {
                let n = names.bind(x);
                out.push_str(&format!("[{n}]\n"));
                body.render_into(out, indent + 1, names);
                names.unbind(x);
            }
            Approx::Node(h, args) => {
                match h {
                    ApproxHead::Var(x) => out.push_str(&names.get(x)),
                    ApproxHead::Const(c) => out.push_str(c),
                }
                out.push('\n');
                for a in args {
                    match a {
                        ApproxArg::Tree(t) => t.render_into(out, indent + 1, names),
                        ApproxArg::Prepat(x) => {
                            for _ in 0..=indent {
                                out.push_str("  ");
                            }
                            out.push('^');
                            out.push_str(&names.get(x));
                            out.push('\n');
                        }
                    }
                }
            }
        }
    }
}

#[derive(Default)]
struct Names {
    map: BTreeMap<Var, String>,
    used: BTreeMap<String, usize>,
}

impl Names {
    fn bind(&mut self, x: &Var) -> String {
        let base = match x.name() {
            "" | "_" => "x",
            n => n,
        };
        let mut name = String::from(base);
        let mut i = 1;
        while self.used.get(&name).is_some_and(|n| *n > 0) {
            name = format!("{base}_{i}");
            i += 1;
        }
        *self.used.entry(name.clone()).or_insert(0) += 1;
        self.map.insert(x.clone(), name.clone());
        name
    }

    fn unbind(&mut self, x: &Var) {
        if let Some(n) = self.map.remove(x) {
            if let Some(c) = self.used.get_mut(&n) {
                *c -= 1;
            }
        }
    }

    fn get(&mut self, x: &Var) -> String {
        match self.map.get(x) {
            Some(n) => n.clone(),
            None => self.bind(x),
        }
    }
}

impl fmt::Display for Approx {
    /// Compact one-line form: `c(a, b)`, `[x] t`, `^x`, `_|_`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_named(f, &mut Names::default())
    }
}

impl Approx {
    fn fmt_named(&self, f: &mut fmt::Formatter<'_>, names: &mut Names) -> fmt::Result {
        match self {
            Approx::Bottom => f.write_str("_|_"),
            Approx::Lam(x, body) => {
                let n = names.bind(x);
                write!(f, "[{n}] ")?;
                body.fmt_named(f, names)?;
                names.unbind(x);
                Ok(())
            }
            Approx::Node(h, args) => {
                match h {
                    ApproxHead::Var(x) => f.write_str(&names.get(x))?,
                    ApproxHead::Const(c) => f.write_str(c)?,
                }
                if args.is_empty() {
                    return Ok(());
                }
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match a {
                        ApproxArg::Tree(t) => t.fmt_named(f, names)?,
                        ApproxArg::Prepat(x) => write!(f, "^{}", names.get(x))?,
                    }
                }
                f.write_str(")")
            }
        }
    }
}

/// `[N/x]^τ t` on approximants. A bottom in head position absorbs its
/// arguments.
pub fn hsubst_approx(
    n: &Approx,
    x: &Var,
    tau: &SimpleType,
    t: &Approx,
) -> Result<Approx, SubstError> {
    let fv = n.free_vars();
    subst_in(n, x, tau, &fv, t)
}

fn subst_in(
    n: &Approx,
    x: &Var,
    tau: &SimpleType,
    fv: &BTreeSet<Var>,
    t: &Approx,
) -> Result<Approx, SubstError> {
    match t {
        Approx::Bottom => Ok(Approx::Bottom),
        Approx::Lam(y, _) if y == x => Ok(t.clone()),
        Approx::Lam(y, body) => {
            if fv.contains(y) {
                let z = y.refresh();
                let body = body.rename(&z, y);
                Ok(Approx::Lam(z, Box::new(subst_in(n, x, tau, fv, &body)?)))
            } else {
                Ok(Approx::Lam(y.clone(), Box::new(subst_in(n, x, tau, fv, body)?)))
            }
        }
        Approx::Node(h, args) => {
            let mut new_args = Vec::with_capacity(args.len());
            for a in args {
                new_args.push(match a {
                    ApproxArg::Tree(s) => ApproxArg::Tree(subst_in(n, x, tau, fv, s)?),
                    ApproxArg::Prepat(v) if v == x => return Err(SubstError::Undefined(v.clone())),
                    ApproxArg::Prepat(v) => ApproxArg::Prepat(v.clone()),
                });
            }
            match h {
                ApproxHead::Var(v) if v == x => reduce_approx(new_args, tau, n.clone()),
                _ => Ok(Approx::Node(h.clone(), new_args)),
            }
        }
    }
}

fn reduce_approx(
    args: Vec<ApproxArg>,
    tau: &SimpleType,
    n: Approx,
) -> Result<Approx, SubstError> {
    let mut tau = tau;
    let mut cur = n;
    for a in args {
        if cur.is_bottom() {
            return Ok(Approx::Bottom);
        }
        let (dom, cod) = match tau {
            SimpleType::Arrow(d, c) => (&**d, &**c),
            SimpleType::Base => return Err(SubstError::OverApplied(tau.clone())),
        };
        let (y, body) = match cur {
            Approx::Lam(y, body) => (y, *body),
            _ => return Err(SubstError::ShapeMismatch(tau.clone())),
        };
        cur = match a {
            ApproxArg::Tree(s) => hsubst_approx(&s, &y, dom, &body)?,
            ApproxArg::Prepat(z) => body.rename(&z, &y),
        };
        tau = cod;
    }
    Ok(cur)
}

use std::collections::{HashMap, HashSet};

use colf_core::Var;

use super::ir::{self, eta_contract, EArg, EClass, EHead, ETerm, IrError, MetaId};
use super::{Constraint, ElabError, ElabErrorKind, EResult, MetaSort, Sol, State};
use crate::token::Span;

const UNFOLD_FUEL: usize = 64;

enum Invert {
    Occurs,
    Scope(Var),
    Stuck,
    Ir(IrError),
}

impl From<IrError> for Invert {
    fn from(e: IrError) -> Invert {
        Invert::Ir(e)
    }
}

impl State<'_> {
    pub fn unify_terms(&mut self, a: &ETerm, b: &ETerm, span: Span) -> EResult<()> {
        self.unfold_fuel = UNFOLD_FUEL;
        self.unify_t(a, b, span)
    }

    pub fn unify_classes(&mut self, a: &EClass, b: &EClass, span: Span) -> EResult<()> {
        self.unfold_fuel = UNFOLD_FUEL;
        self.unify_c(a, b, span)
    }

    fn mismatch_t(&mut self, a: &ETerm, b: &ETerm, span: Span) -> ElabError {
        ElabError::new(
            ElabErrorKind::Mismatch {
                expected: self.show_term(b),
                found: self.show_term(a),
            },
            span,
        )
    }

    fn mismatch_c(&mut self, a: &EClass, b: &EClass, span: Span) -> ElabError {
        ElabError::new(
            ElabErrorKind::Mismatch {
                expected: self.show_class(b),
                found: self.show_class(a),
            },
            span,
        )
    }

    fn postpone(&mut self, c: Constraint, span: Span) {
        self.postponed.push((c, span));
    }

    fn unify_t(&mut self, a: &ETerm, b: &ETerm, span: Span) -> EResult<()> {
        let a = self.force(a).map_err(|e| self.ir_err(e, span))?;
        let b = self.force(b).map_err(|e| self.ir_err(e, span))?;
        match (&a, &b) {
            (ETerm::Lam(x, ba), ETerm::Lam(y, bb)) => {
                let z = Var::fresh(x.name());
                let ba = self.rename_t(ba, x, &z, span)?;
                let bb = self.rename_t(bb, y, &z, span)?;
                self.unify_t(&ba, &bb, span)
            }
            (ETerm::App(EHead::Meta(m, s1), r1), ETerm::App(EHead::Meta(n, s2), r2))
                if m == n && r1.is_empty() && r2.is_empty() =>
            {
                self.flex_flex_same(*m, s1, s2, Constraint::Terms(a.clone(), b.clone()), span)
            }
            (ETerm::App(EHead::Meta(m, sigma), r), _) if r.is_empty() => {
                self.solve(*m, sigma, Sol::Term(b.clone()), span)
            }
            (_, ETerm::App(EHead::Meta(m, sigma), r)) if r.is_empty() => {
                self.solve(*m, sigma, Sol::Term(a.clone()), span)
            }
            (ETerm::App(EHead::Meta(..), _), _) | (_, ETerm::App(EHead::Meta(..), _)) => {
                self.postpone(Constraint::Terms(a.clone(), b.clone()), span);
                Ok(())
            }
            (ETerm::Lam(x, ba), other) | (other, ETerm::Lam(x, ba)) => {
                let z = Var::fresh(x.name());
                let body = self.rename_t(ba, x, &z, span)?;
                let applied = self.apply(other.clone(), vec![EArg::Term(ETerm::var(&z))], span)?;
                if matches!(a, ETerm::Lam(..)) {
                    self.unify_t(&body, &applied, span)
                } else {
                    self.unify_t(&applied, &body, span)
                }
            }
            (ETerm::App(h1, s1), ETerm::App(h2, s2)) => {
                let same = match (h1, h2) {
                    (EHead::Var(x), EHead::Var(y)) => x == y,
                    (EHead::Const(c), EHead::Const(d)) => c == d,
                    (EHead::Rec(c), EHead::Rec(d)) => c == d,
                    _ => false,
                };
                if same {
                    if s1.len() != s2.len() {
                        return Err(self.mismatch_t(&a, &b, span));
                    }
                    for (x, y) in s1.iter().zip(s2) {
                        self.unify_arg(x, y, span)?;
                    }
                    return Ok(());
                }
                let left_rec = matches!(h1, EHead::Rec(_));
                let right_rec = matches!(h2, EHead::Rec(_));
                if left_rec && right_rec {
                    self.postpone(Constraint::Terms(a.clone(), b.clone()), span);
                    return Ok(());
                }
                if left_rec || right_rec {
                    let (r, sp, other, flip) = if left_rec {
                        (h1, s1, &b, false)
                    } else {
                        (h2, s2, &a, true)
                    };
                    let EHead::Rec(name) = r else { unreachable!() };
                    match self.bodies.get(name.as_ref()).cloned() {
                        Some(body) if self.unfold_fuel > 0 => {
                            self.unfold_fuel -= 1;
                            let unfolded = self.apply(body, sp.clone(), span)?;
                            if flip {
                                self.unify_t(other, &unfolded, span)
                            } else {
                                self.unify_t(&unfolded, other, span)
                            }
                        }
                        _ => {
                            self.postpone(Constraint::Terms(a.clone(), b.clone()), span);
                            Ok(())
                        }
                    }
                } else {
                    Err(self.mismatch_t(&a, &b, span))
                }
            }
        }
    }

    fn unify_arg(&mut self, a: &EArg, b: &EArg, span: Span) -> EResult<()> {
        match (a, b) {
            (EArg::Prepat(x), EArg::Prepat(y)) if x == y => Ok(()),
            _ => self.unify_t(&a.to_term(), &b.to_term(), span),
        }
    }

    fn rename_t(&mut self, t: &ETerm, x: &Var, z: &Var, span: Span) -> EResult<ETerm> {
        let mut fuel = self.fuel;
        let r = ir::Sub::single(x, ETerm::var(z)).term(t, &mut fuel);
        self.fuel = fuel;
        r.map_err(|e| self.ir_err(e, span))
    }

    fn unify_c(&mut self, a: &EClass, b: &EClass, span: Span) -> EResult<()> {
        let a = self.force_class(a).map_err(|e| self.ir_err(e, span))?;
        let b = self.force_class(b).map_err(|e| self.ir_err(e, span))?;
        match (&a, &b) {
            (EClass::Meta(m, s1), EClass::Meta(n, s2)) if m == n => {
                self.flex_flex_same(*m, s1, s2, Constraint::Classes(a.clone(), b.clone()), span)
            }
            (EClass::Meta(m, sigma), _) => self.solve(*m, sigma, Sol::Class(b.clone()), span),
            (_, EClass::Meta(m, sigma)) => self.solve(*m, sigma, Sol::Class(a.clone()), span),
            (EClass::Type, EClass::Type) | (EClass::Cotype, EClass::Cotype) => Ok(()),
            (
                EClass::Pi {
                    cell: c1,
                    var: x,
                    dom: d1,
                    cod: b1,
                },
                EClass::Pi {
                    cell: c2,
                    var: y,
                    dom: d2,
                    cod: b2,
                },
            ) => {
                self.cells.union(*c1, *c2);
                self.unify_c(d1, d2, span)?;
                let z = Var::fresh(x.name());
                let b1 = self.subst_class(b1, x, ETerm::var(&z), span)?;
                let b2 = self.subst_class(b2, y, ETerm::var(&z), span)?;
                self.unify_c(&b1, &b2, span)
            }
            (EClass::Atom(f, s1), EClass::Atom(g, s2)) if f == g && s1.len() == s2.len() => {
                for (x, y) in s1.iter().zip(s2) {
                    self.unify_arg(x, y, span)?;
                }
                Ok(())
            }
            _ => Err(self.mismatch_c(&a, &b, span)),
        }
    }

    fn pattern_vars(&mut self, sigma: &[ETerm]) -> Option<Vec<Var>> {
        let mut out = Vec::with_capacity(sigma.len());
        for s in sigma {
            let s = self.zonk(s).ok()?;
            let x = eta_contract(&s)?;
            if out.contains(&x) {
                return None;
            }
            out.push(x);
        }
        Some(out)
    }

    fn flex_flex_same(
        &mut self,
        m: MetaId,
        s1: &[ETerm],
        s2: &[ETerm],
        c: Constraint,
        span: Span,
    ) -> EResult<()> {
        match (self.pattern_vars(s1), self.pattern_vars(s2)) {
            (Some(v1), Some(v2)) => {
                let keep: Vec<bool> = v1.iter().zip(&v2).map(|(a, b)| a == b).collect();
                if keep.iter().all(|&k| k) {
                    return Ok(());
                }
                if self.prune(m, &keep).is_none() {
                    self.postpone(c, span);
                }
                Ok(())
            }
            _ => {
                self.postpone(c, span);
                Ok(())
            }
        }
    }

    /// Replace `m` by a fresh metavariable that only sees the scope
    /// positions marked in `keep`.
    pub(super) fn prune(&mut self, m: MetaId, keep: &[bool]) -> Option<MetaId> {
        let meta = self.metas[m].clone();
        let kept: Vec<(Var, EClass)> = meta
            .scope
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(e, _)| e.clone())
            .collect();
        let allowed: HashSet<Var> = kept.iter().map(|(v, _)| v.clone()).collect();
        let sort = match &meta.sort {
            MetaSort::Term(ty) => {
                let ty = self.zonk_class(ty).ok()?;
                let mut fv = HashSet::new();
                ir::fv_class(&ty, &mut fv);
                if !fv.is_subset(&allowed) {
                    return None;
                }
                MetaSort::Term(ty)
            }
            MetaSort::Class => MetaSort::Class,
        };
        let id = self.metas.len();
        let args: Vec<ETerm> = kept.iter().map(|(v, _)| ETerm::var(v)).collect();
        self.metas.push(super::Meta {
            scope: kept,
            sort,
            solution: None,
            span: meta.span,
        });
        self.metas[m].solution = Some(match meta.sort {
            MetaSort::Term(_) => Sol::Term(ETerm::meta(id, args)),
            MetaSort::Class => Sol::Class(EClass::Meta(id, args)),
        });
        self.solved += 1;
        Some(id)
    }

    fn solve(&mut self, m: MetaId, sigma: &[ETerm], rhs: Sol, span: Span) -> EResult<()> {
        let constraint = |me: &Self| match (&rhs, me) {
            (Sol::Term(t), _) => Constraint::Terms(ETerm::meta(m, sigma.to_vec()), t.clone()),
            (Sol::Class(c), _) => Constraint::Classes(EClass::Meta(m, sigma.to_vec()), c.clone()),
        };
        let Some(vars) = self.pattern_vars(sigma) else {
            let c = constraint(self);
            self.postpone(c, span);
            return Ok(());
        };
        let scope: Vec<Var> = self.metas[m].scope.iter().map(|(v, _)| v.clone()).collect();
        let map: HashMap<Var, Var> = vars.into_iter().zip(scope).collect();
        let rhs_z = match &rhs {
            Sol::Term(t) => Sol::Term(self.zonk(t).map_err(|e| self.ir_err(e, span))?),
            Sol::Class(c) => Sol::Class(self.zonk_class(c).map_err(|e| self.ir_err(e, span))?),
        };
        self.prune_for(&rhs_z, m, &map);
        let rhs_z = match &rhs_z {
            Sol::Term(t) => Sol::Term(self.zonk(t).map_err(|e| self.ir_err(e, span))?),
            Sol::Class(c) => Sol::Class(self.zonk_class(c).map_err(|e| self.ir_err(e, span))?),
        };
        let inverted = match &rhs_z {
            Sol::Term(t) => self.invert_t(t, m, &map, &mut Vec::new()).map(Sol::Term),
            Sol::Class(c) => self.invert_c(c, m, &map, &mut Vec::new()).map(Sol::Class),
        };
        match inverted {
            Ok(sol) => {
                self.metas[m].solution = Some(sol);
                self.solved += 1;
                Ok(())
            }
            Err(Invert::Occurs) => {
                let shown = match &rhs_z {
                    Sol::Term(t) => t.to_string(),
                    Sol::Class(c) => c.to_string(),
                };
                Err(ElabError::new(
                    ElabErrorKind::Occurs(format!("?{m} = {shown}")),
                    span,
                ))
            }
            Err(Invert::Scope(x)) => Err(ElabError::new(
                ElabErrorKind::Scope(x.name().to_string()),
                span,
            )),
            Err(Invert::Stuck) => {
                let c = constraint(self);
                self.postpone(c, span);
                Ok(())
            }
            Err(Invert::Ir(e)) => Err(self.ir_err(e, span)),
        }
    }

    /// Prune other metavariables in `rhs` whose arguments mention variables
    /// that the solution for `m` could not refer to.
    fn prune_for(&mut self, rhs: &Sol, m: MetaId, map: &HashMap<Var, Var>) {
        let mut occ = Vec::new();
        match rhs {
            Sol::Term(t) => collect_meta_occ(t, &mut Vec::new(), &mut occ),
            Sol::Class(c) => collect_meta_occ_c(c, &mut Vec::new(), &mut occ),
        }
        for (k, sigma, bound) in occ {
            if k == m || self.metas[k].solution.is_some() {
                continue;
            }
            let mut keep = Vec::with_capacity(sigma.len());
            let mut stuck = false;
            for s in &sigma {
                let mut fv = HashSet::new();
                ir::fv_term(s, &mut fv);
                let ok = fv.iter().all(|x| map.contains_key(x) || bound.contains(x));
                if !ok && eta_contract(s).is_none() {
                    stuck = true;
                }
                keep.push(ok);
            }
            if !stuck && keep.iter().any(|k| !k) {
                let _ = self.prune(k, &keep);
            }
        }
    }

    fn invert_t(
        &mut self,
        t: &ETerm,
        m: MetaId,
        map: &HashMap<Var, Var>,
        bound: &mut Vec<Var>,
    ) -> Result<ETerm, Invert> {
        match t {
            ETerm::Lam(x, b) => {
                bound.push(x.clone());
                let r = self.invert_t(b, m, map, bound);
                bound.pop();
                Ok(ETerm::Lam(x.clone(), Box::new(r?)))
            }
            ETerm::App(h, args) => {
                let h = match h {
                    EHead::Var(x) => EHead::Var(self.invert_var(x, map, bound)?),
                    EHead::Meta(k, _) if *k == m => return Err(Invert::Occurs),
                    EHead::Meta(k, sigma) => {
                        let mut out = Vec::new();
                        for s in sigma {
                            out.push(self.invert_t(s, m, map, bound).map_err(|e| match e {
                                Invert::Scope(_) => Invert::Stuck,
                                e => e,
                            })?);
                        }
                        EHead::Meta(*k, out)
                    }
                    h => h.clone(),
                };
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(self.invert_arg(a, m, map, bound)?);
                }
                Ok(ETerm::App(h, out))
            }
        }
    }

    fn invert_arg(
        &mut self,
        a: &EArg,
        m: MetaId,
        map: &HashMap<Var, Var>,
        bound: &mut Vec<Var>,
    ) -> Result<EArg, Invert> {
        match a {
            EArg::Term(t) => Ok(EArg::Term(self.invert_t(t, m, map, bound)?)),
            EArg::Prepat(x) => Ok(EArg::Prepat(self.invert_var(x, map, bound)?)),
        }
    }

    fn invert_var(&self, x: &Var, map: &HashMap<Var, Var>, bound: &[Var]) -> Result<Var, Invert> {
        if bound.contains(x) {
            return Ok(x.clone());
        }
        map.get(x).cloned().ok_or_else(|| Invert::Scope(x.clone()))
    }

    fn invert_c(
        &mut self,
        c: &EClass,
        m: MetaId,
        map: &HashMap<Var, Var>,
        bound: &mut Vec<Var>,
    ) -> Result<EClass, Invert> {
        Ok(match c {
            EClass::Type => EClass::Type,
            EClass::Cotype => EClass::Cotype,
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => {
                let dom = self.invert_c(dom, m, map, bound)?;
                bound.push(var.clone());
                let cod = self.invert_c(cod, m, map, bound);
                bound.pop();
                EClass::Pi {
                    cell: *cell,
                    var: var.clone(),
                    dom: Box::new(dom),
                    cod: Box::new(cod?),
                }
            }
            EClass::Atom(a, args) => {
                let mut out = Vec::with_capacity(args.len());
                for x in args {
                    out.push(self.invert_arg(x, m, map, bound)?);
                }
                EClass::Atom(a.clone(), out)
            }
            EClass::Meta(k, _) if *k == m => return Err(Invert::Occurs),
            EClass::Meta(k, sigma) => {
                let mut out = Vec::new();
                for s in sigma {
                    out.push(self.invert_t(s, m, map, bound).map_err(|e| match e {
                        Invert::Scope(_) => Invert::Stuck,
                        e => e,
                    })?);
                }
                EClass::Meta(*k, out)
            }
        })
    }

    /// Retry postponed constraints until no further progress is made.
    pub fn retry_postponed(&mut self) -> EResult<()> {
        loop {
            let before = self.solved;
            let pending = std::mem::take(&mut self.postponed);
            for (c, span) in pending {
                match c {
                    Constraint::Terms(a, b) => self.unify_terms(&a, &b, span)?,
                    Constraint::Classes(a, b) => self.unify_classes(&a, &b, span)?,
                }
            }
            if self.solved == before {
                return Ok(());
            }
        }
    }

    /// Postponed constraints that still mention metavariables.
    pub fn open_constraints(&mut self) -> Vec<(String, Span)> {
        let pending = self.postponed.clone();
        let mut out = Vec::new();
        for (c, span) in pending {
            let mut ms = Vec::new();
            let shown = match c {
                Constraint::Terms(a, b) => {
                    let (a, b) = (self.zonk(&a), self.zonk(&b));
                    match (a, b) {
                        (Ok(a), Ok(b)) => {
                            ir::metas_term(&a, &mut ms);
                            ir::metas_term(&b, &mut ms);
                            format!("{a} = {b}")
                        }
                        _ => continue,
                    }
                }
                Constraint::Classes(a, b) => {
                    let (a, b) = (self.zonk_class(&a), self.zonk_class(&b));
                    match (a, b) {
                        (Ok(a), Ok(b)) => {
                            ir::metas_class(&a, &mut ms);
                            ir::metas_class(&b, &mut ms);
                            format!("{a} = {b}")
                        }
                        _ => continue,
                    }
                }
            };
            if !ms.is_empty() {
                out.push((shown, span));
            }
        }
        out
    }
}

type Occ = (MetaId, Vec<ETerm>, Vec<Var>);

fn collect_meta_occ(t: &ETerm, bound: &mut Vec<Var>, out: &mut Vec<Occ>) {
    match t {
        ETerm::Lam(x, b) => {
            bound.push(x.clone());
            collect_meta_occ(b, bound, out);
            bound.pop();
        }
        ETerm::App(h, args) => {
            if let EHead::Meta(k, sigma) = h {
                out.push((*k, sigma.clone(), bound.clone()));
            }
            for a in args {
                if let EArg::Term(t) = a {
                    collect_meta_occ(t, bound, out);
                }
            }
        }
    }
}

fn collect_meta_occ_c(c: &EClass, bound: &mut Vec<Var>, out: &mut Vec<Occ>) {
    match c {
        EClass::Type | EClass::Cotype => {}
        EClass::Pi { var, dom, cod, .. } => {
            collect_meta_occ_c(dom, bound, out);
            bound.push(var.clone());
            collect_meta_occ_c(cod, bound, out);
            bound.pop();
        }
        EClass::Atom(_, args) => {
            for a in args {
                if let EArg::Term(t) = a {
                    collect_meta_occ(t, bound, out);
                }
            }
        }
        EClass::Meta(k, sigma) => out.push((*k, sigma.clone(), bound.clone())),
    }
}

use colf_core::Var;

use super::ir::{self, eta_contract, EArg, EClass, EHead, ETerm};
use super::{Ctx, DeclInfo, ElabError, ElabErrorKind, EResult, Entry, MetaSort, State, SurfCat};
use crate::surface::{Expr, ExprKind};
use crate::token::Span;

#[derive(Copy, Clone, PartialEq, Eq)]
enum Level {
    Kind,
    Type,
}

/// What a name at the head of an application refers to.
struct HeadInfo {
    head: EHead,
    ty: EClass,
    implicit: usize,
    shown: String,
}

impl State<'_> {
    fn err<T>(&self, kind: ElabErrorKind, span: Span) -> EResult<T> {
        Err(ElabError::new(kind, span))
    }

    fn force_c(&mut self, c: &EClass, span: Span) -> EResult<EClass> {
        self.force_class(c).map_err(|e| self.ir_err(e, span))
    }

    /// Look up a constant as seen from the current declaration.
    fn constant(&self, name: &str, span: Span) -> EResult<Option<&DeclInfo>> {
        let Some(&(index, cat)) = self.names.get(name) else {
            return Ok(None);
        };
        let visible = index < self.cur_decl || (self.phase_body && cat == SurfCat::RecDef);
        if !visible {
            return self.err(ElabErrorKind::Unbound(name.to_string()), span);
        }
        match self.infos.get(name) {
            Some(info) => Ok(Some(info)),
            None => self.err(ElabErrorKind::DependsOn(name.to_string()), span),
        }
    }

    pub(super) fn elab_decl_class(&mut self, i: usize) -> EResult<DeclInfo> {
        let d = &self.surface[i];
        let cat = SurfCat::of(d);
        let class_expr = d.class.clone();
        let mut implicit = d.implicit;
        let mut ctx = Vec::new();
        let level = if cat == SurfCat::Family {
            Level::Kind
        } else {
            Level::Type
        };
        let mut class = self.elab_class(&mut ctx, &class_expr, level)?;
        self.retry_postponed()?;
        if cat == SurfCat::RecDef {
            let mut c = self.force_c(&class, class_expr.span)?;
            while let EClass::Pi { cell, cod, .. } = c {
                self.cells.mark(cell);
                c = self.force_c(&cod, class_expr.span)?;
            }
        }
        if cat != SurfCat::RecDef {
            let (c, extra) = self.abstract_leftovers(&class, class_expr.span)?;
            class = c;
            implicit += extra;
        }
        self.finish_part(class_expr.span)?;
        let class = self
            .zonk_class(&class)
            .map_err(|e| self.ir_err(e, class_expr.span))?;
        let mut ms = Vec::new();
        ir::metas_class(&class, &mut ms);
        if let Some(&m) = ms.first() {
            return Err(self.unsolved_meta(m));
        }
        if cat == SurfCat::Constructor {
            let mut c = &class;
            while let EClass::Pi { cod, .. } = c {
                c = cod;
            }
            if !matches!(c, EClass::Atom(..)) {
                return self.err(ElabErrorKind::NotAType(c.to_string()), class_expr.span);
            }
        }
        Ok(DeclInfo {
            cat,
            class,
            implicit,
        })
    }

    pub(super) fn elab_decl_body(&mut self, i: usize) -> EResult<ETerm> {
        let d = &self.surface[i];
        let body = d.body.clone().expect("recursive definition has a body");
        let class = self.infos[&d.name.text].class.clone();
        let mut ctx = Vec::new();
        let t = self.check_term(&mut ctx, &body, &class)?;
        self.retry_postponed()?;
        self.finish_part(body.span)?;
        let t = self.zonk(&t).map_err(|e| self.ir_err(e, body.span))?;
        let mut ms = Vec::new();
        ir::metas_term(&t, &mut ms);
        if let Some(&m) = ms.first() {
            return Err(self.unsolved_meta(m));
        }
        Ok(t)
    }

    fn unsolved_meta(&mut self, m: usize) -> ElabError {
        let span = self.metas[m].span;
        match self.metas[m].sort.clone() {
            MetaSort::Term(ty) => {
                let ty = self.show_class(&ty);
                ElabError::new(ElabErrorKind::UnsolvedHole(ty), span)
            }
            MetaSort::Class => ElabError::new(ElabErrorKind::CannotInferType("_".into()), span),
        }
    }

    /// Report constraints that still mention metavariables; constraints
    /// between closed terms are left for the kernel.
    fn finish_part(&mut self, span: Span) -> EResult<()> {
        let open = self.open_constraints();
        if !open.is_empty() {
            let at = open.first().map(|(_, s)| *s).unwrap_or(span);
            return self.err(
                ElabErrorKind::Unsolved(open.into_iter().map(|(c, _)| c).collect()),
                at,
            );
        }
        self.postponed.clear();
        Ok(())
    }

    /// Unsolved term metavariables left in a family or constructor type
    /// become further leading implicit binders.
    fn abstract_leftovers(&mut self, class: &EClass, span: Span) -> EResult<(EClass, usize)> {
        let z = self.zonk_class(class).map_err(|e| self.ir_err(e, span))?;
        let mut ms = Vec::new();
        ir::metas_class(&z, &mut ms);
        ms.sort_unstable();
        let mut binders = Vec::new();
        for m in ms {
            let m = match self.force_meta_id(m) {
                Some(m) => m,
                None => continue,
            };
            let MetaSort::Term(ty) = self.metas[m].sort.clone() else {
                continue;
            };
            let keep = vec![false; self.metas[m].scope.len()];
            let m = if keep.is_empty() {
                m
            } else {
                match self.prune(m, &keep) {
                    Some(m2) => m2,
                    None => return Err(self.unsolved_meta(m)),
                }
            };
            let v = Var::fresh("X");
            self.metas[m].solution = Some(super::Sol::Term(ETerm::var(&v)));
            self.solved += 1;
            binders.push((v, ty));
        }
        let mut out = class.clone();
        let count = binders.len();
        for (v, ty) in binders.into_iter().rev() {
            let ty = self.zonk_class(&ty).map_err(|e| self.ir_err(e, span))?;
            let cell = self.new_cell();
            out = EClass::Pi {
                cell,
                var: v,
                dom: Box::new(ty),
                cod: Box::new(out),
            };
        }
        Ok((out, count))
    }

    fn force_meta_id(&mut self, m: usize) -> Option<usize> {
        let t = self.force(&ETerm::meta(m, Vec::new())).ok()?;
        match t {
            ETerm::App(EHead::Meta(k, _), _) if self.metas[k].solution.is_none() => Some(k),
            _ => None,
        }
    }

    fn elab_class(&mut self, ctx: &mut Ctx, e: &Expr, level: Level) -> EResult<EClass> {
        match &e.kind {
            ExprKind::Type | ExprKind::Cotype => {
                if level == Level::Type {
                    return self.err(ElabErrorKind::SortInType, e.span);
                }
                Ok(if e.kind == ExprKind::Type {
                    EClass::Type
                } else {
                    EClass::Cotype
                })
            }
            ExprKind::Arrow(a, b) => {
                let dom = self.elab_class(ctx, a, Level::Type)?;
                let cell = self.new_cell();
                let var = Var::fresh("_");
                let cod = self.elab_class(ctx, b, level)?;
                Ok(EClass::Pi {
                    cell,
                    var,
                    dom: Box::new(dom),
                    cod: Box::new(cod),
                })
            }
            ExprKind::PiExplicit(x, a, b) => {
                let dom = self.elab_class(ctx, a, Level::Type)?;
                self.pi_body(ctx, &x.text, dom, b, level)
            }
            ExprKind::PiBare(x, b) => {
                let (m, sigma) = self.new_meta(ctx, MetaSort::Class, x.span);
                self.pi_body(ctx, &x.text, EClass::Meta(m, sigma), b, level)
            }
            ExprKind::Underscore => {
                if level == Level::Kind {
                    return self.err(ElabErrorKind::NotAType("_".into()), e.span);
                }
                let (m, sigma) = self.new_meta(ctx, MetaSort::Class, e.span);
                Ok(EClass::Meta(m, sigma))
            }
            ExprKind::LamBracket(..) => self.err(ElabErrorKind::NotAType(e.to_string()), e.span),
            ExprKind::Ident(_) | ExprKind::CapitalVar(_) | ExprKind::Application(_) => {
                let (head, args) = split_app(e);
                let name = match &head.kind {
                    ExprKind::Ident(n) | ExprKind::CapitalVar(n) => n.clone(),
                    _ => return self.err(ElabErrorKind::NotAType(e.to_string()), e.span),
                };
                if ctx.iter().any(|en| en.name == name) {
                    return self.err(ElabErrorKind::NotAType(name), head.span);
                }
                let info = match self.constant(&name, head.span)? {
                    Some(info) => info.clone(),
                    None => return self.err(ElabErrorKind::Unbound(name), head.span),
                };
                if info.cat != SurfCat::Family {
                    return self.err(
                        ElabErrorKind::WrongCategory {
                            name,
                            found: info.cat.category(),
                            wanted: "a type family",
                        },
                        head.span,
                    );
                }
                let (spine, rest) =
                    self.elab_spine(ctx, &name, info.class.clone(), info.implicit, args, head.span)?;
                match self.force_c(&rest, e.span)? {
                    EClass::Type | EClass::Cotype => Ok(EClass::Atom(name.as_str().into(), spine)),
                    _ => self.err(ElabErrorKind::Underapplied(name), e.span),
                }
            }
        }
    }

    fn pi_body(
        &mut self,
        ctx: &mut Ctx,
        name: &str,
        dom: EClass,
        body: &Expr,
        level: Level,
    ) -> EResult<EClass> {
        let cell = self.new_cell();
        let var = Var::fresh(name);
        ctx.push(Entry {
            name: name.to_string(),
            var: var.clone(),
            ty: dom.clone(),
            cell: Some(cell),
        });
        let cod = self.elab_class(ctx, body, level);
        ctx.pop();
        Ok(EClass::Pi {
            cell,
            var,
            dom: Box::new(dom),
            cod: Box::new(cod?),
        })
    }

    /// Elaborate the arguments of an application whose head has type `ty`.
    fn elab_spine(
        &mut self,
        ctx: &mut Ctx,
        head: &str,
        mut ty: EClass,
        implicit: usize,
        args: &[Expr],
        span: Span,
    ) -> EResult<(Vec<EArg>, EClass)> {
        let mut out = Vec::new();
        for _ in 0..implicit {
            let EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } = self.force_c(&ty, span)?
            else {
                return self.err(ElabErrorKind::TooManyArgs(head.to_string()), span);
            };
            if self.cells.is_prepat(cell) {
                return self.err(ElabErrorKind::PrepatImplicit(head.to_string()), span);
            }
            let hole = self.new_hole(ctx, &dom, span)?;
            ty = self.subst_class(&cod, &var, hole.clone(), span)?;
            out.push(EArg::Term(hole));
        }
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            match self.force_c(&ty, arg.span)? {
                EClass::Pi {
                    cell,
                    var,
                    dom,
                    cod,
                } => {
                    let t = self.check_term(ctx, arg, &dom)?;
                    if self.cells.is_prepat(cell) {
                        let z = self.zonk(&t).map_err(|e| self.ir_err(e, arg.span))?;
                        let bound = eta_contract(&z)
                            .filter(|y| ctx.iter().any(|en| &en.var == y));
                        let Some(y) = bound else {
                            return self.err(
                                ElabErrorKind::PrepatRestriction(arg.to_string()),
                                arg.span,
                            );
                        };
                        if let Some(c) = ctx.iter().rev().find(|en| en.var == y).and_then(|en| en.cell)
                        {
                            self.cells.mark(c);
                        }
                        ty = self.subst_class(&cod, &var, ETerm::var(&y), arg.span)?;
                        out.push(EArg::Prepat(y));
                    } else {
                        ty = self.subst_class(&cod, &var, t.clone(), arg.span)?;
                        out.push(EArg::Term(t));
                    }
                    i += 1;
                }
                EClass::Meta(m, sigma) => {
                    let pi = self.fresh_pi(ctx, arg.span);
                    self.unify_classes(&EClass::Meta(m, sigma), &pi, arg.span)?;
                }
                _ => return self.err(ElabErrorKind::TooManyArgs(head.to_string()), arg.span),
            }
        }
        Ok((out, ty))
    }

    /// A Π-type whose domain and codomain are unknown.
    fn fresh_pi(&mut self, ctx: &mut Ctx, span: Span) -> EClass {
        let (d, ds) = self.new_meta(ctx, MetaSort::Class, span);
        let dom = EClass::Meta(d, ds);
        let cell = self.new_cell();
        let var = Var::fresh("x");
        ctx.push(Entry {
            name: String::new(),
            var: var.clone(),
            ty: dom.clone(),
            cell: Some(cell),
        });
        let (c, cs) = self.new_meta(ctx, MetaSort::Class, span);
        ctx.pop();
        EClass::Pi {
            cell,
            var,
            dom: Box::new(dom),
            cod: Box::new(EClass::Meta(c, cs)),
        }
    }

    /// An η-expanded hole of type `ty`.
    fn new_hole(&mut self, ctx: &mut Ctx, ty: &EClass, span: Span) -> EResult<ETerm> {
        match self.force_c(ty, span)? {
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => {
                let z = Var::fresh(var.name());
                let cod = self.subst_class(&cod, &var, ETerm::var(&z), span)?;
                ctx.push(Entry {
                    name: String::new(),
                    var: z.clone(),
                    ty: *dom,
                    cell: Some(cell),
                });
                let body = self.new_hole(ctx, &cod, span);
                ctx.pop();
                Ok(ETerm::Lam(z, Box::new(body?)))
            }
            other => {
                let (m, sigma) = self.new_meta(ctx, MetaSort::Term(other), span);
                Ok(ETerm::meta(m, sigma))
            }
        }
    }

    pub(super) fn check_term(&mut self, ctx: &mut Ctx, e: &Expr, expected: &EClass) -> EResult<ETerm> {
        let exp = self.force_c(expected, e.span)?;
        match (&e.kind, &exp) {
            (
                ExprKind::LamBracket(x, body),
                EClass::Pi {
                    cell,
                    var,
                    dom,
                    cod,
                },
            ) => {
                let v = Var::fresh(&x.text);
                let cod = self.subst_class(cod, var, ETerm::var(&v), e.span)?;
                ctx.push(Entry {
                    name: x.text.clone(),
                    var: v.clone(),
                    ty: (**dom).clone(),
                    cell: Some(*cell),
                });
                let b = self.check_term(ctx, body, &cod);
                ctx.pop();
                Ok(ETerm::Lam(v, Box::new(b?)))
            }
            (ExprKind::LamBracket(..), EClass::Meta(..)) => {
                let pi = self.fresh_pi(ctx, e.span);
                self.unify_classes(&exp, &pi, e.span)?;
                self.check_term(ctx, e, &pi)
            }
            (ExprKind::LamBracket(..), _) => {
                let shown = self.show_class(&exp);
                self.err(ElabErrorKind::LamAgainstAtomic(shown), e.span)
            }
            (ExprKind::Underscore, _) => self.new_hole(ctx, &exp, e.span),
            _ => {
                let (h, args, ty) = self.synth_app(ctx, e)?;
                self.unify_classes(&ty, &exp, e.span)?;
                self.eta_expand(h, args, &exp, e.span)
            }
        }
    }

    fn eta_expand(&mut self, h: EHead, mut args: Vec<EArg>, ty: &EClass, span: Span) -> EResult<ETerm> {
        match self.force_c(ty, span)? {
            EClass::Pi {
                cell,
                var,
                dom,
                cod,
            } => {
                let z = Var::fresh(var.name());
                let arg = if self.cells.is_prepat(cell) {
                    EArg::Prepat(z.clone())
                } else {
                    EArg::Term(self.eta_expand(EHead::Var(z.clone()), Vec::new(), &dom, span)?)
                };
                args.push(arg);
                let cod = self.subst_class(&cod, &var, ETerm::var(&z), span)?;
                let body = self.eta_expand(h, args, &cod, span)?;
                Ok(ETerm::Lam(z, Box::new(body)))
            }
            _ => Ok(ETerm::App(h, args)),
        }
    }

    fn synth_app(&mut self, ctx: &mut Ctx, e: &Expr) -> EResult<(EHead, Vec<EArg>, EClass)> {
        let (head, args) = split_app(e);
        let hi = self.synth_head(ctx, head)?;
        let (spine, ty) = self.elab_spine(ctx, &hi.shown, hi.ty, hi.implicit, args, head.span)?;
        Ok((hi.head, spine, ty))
    }

    fn synth_head(&mut self, ctx: &Ctx, head: &Expr) -> EResult<HeadInfo> {
        match &head.kind {
            ExprKind::Ident(n) | ExprKind::CapitalVar(n) => {
                if let Some(en) = ctx.iter().rev().find(|en| &en.name == n) {
                    return Ok(HeadInfo {
                        head: EHead::Var(en.var.clone()),
                        ty: en.ty.clone(),
                        implicit: 0,
                        shown: n.clone(),
                    });
                }
                let Some(info) = self.constant(n, head.span)? else {
                    return self.err(ElabErrorKind::Unbound(n.clone()), head.span);
                };
                let head_node = match info.cat {
                    SurfCat::Constructor => EHead::Const(n.as_str().into()),
                    SurfCat::RecDef => EHead::Rec(n.as_str().into()),
                    SurfCat::Family => {
                        return self.err(
                            ElabErrorKind::WrongCategory {
                                name: n.clone(),
                                found: info.cat.category(),
                                wanted: "a term",
                            },
                            head.span,
                        )
                    }
                };
                Ok(HeadInfo {
                    head: head_node,
                    ty: info.class.clone(),
                    implicit: info.implicit,
                    shown: n.clone(),
                })
            }
            ExprKind::Underscore => self.err(ElabErrorKind::HoleHead, head.span),
            _ => self.err(ElabErrorKind::NotATerm(head.to_string()), head.span),
        }
    }
}

fn split_app(e: &Expr) -> (&Expr, &[Expr]) {
    match &e.kind {
        ExprKind::Application(items) => (&items[0], &items[1..]),
        _ => (e, &[]),
    }
}

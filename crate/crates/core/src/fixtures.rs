//! Hand-built signatures shared by the unit tests.

use crate::syntax::*;
use alloc::vec;
use alloc::vec::Vec;

pub fn c(name: &str) -> Term {
    Term::cst(name, Vec::new())
}

pub fn app(name: &str, args: Vec<Term>) -> Term {
    Term::cst(name, args)
}

pub fn r(name: &str) -> Term {
    Term::rec(name, Vec::new())
}

pub fn at(family: &str) -> Type {
    Type::atom(family, Vec::new())
}

pub fn arrows(args: &[&str], target: &str) -> Type {
    args.iter()
        .rev()
        .fold(at(target), |acc, a| Type::arrow(at(a), acc))
}

/// The full introductory signature, including the invalid
/// declarations.
pub fn fig1_decls() -> Vec<Decl> {
    let n = Var::fresh("N");
    vec![
        Decl::family("nat", Kind::Type),
        Decl::constructor("zero", at("nat")),
        Decl::constructor("succ", arrows(&["nat"], "nat")),
        Decl::recdef("w1", at("nat"), app("succ", vec![r("w1")])),
        Decl::family("conat", Kind::Cotype),
        Decl::constructor("cozero", at("conat")),
        Decl::constructor("cosucc", arrows(&["conat"], "conat")),
        Decl::recdef("w2", at("conat"), app("cosucc", vec![r("w2")])),
        Decl::recdef(
            "w3",
            at("conat"),
            app("cosucc", vec![app("cosucc", vec![r("w3")])]),
        ),
        Decl::family(
            "eq",
            Kind::arrow(at("conat"), Kind::arrow(at("conat"), Kind::Type)),
        ),
        Decl::constructor(
            "eq/refl",
            Type::pi(
                n.clone(),
                Flavor::Ordinary,
                at("conat"),
                Type::atom("eq", vec![Term::var(&n), Term::var(&n)]),
            ),
        ),
        Decl::recdef(
            "eqw2w3",
            Type::atom("eq", vec![r("w2"), r("w3")]),
            app("eq/refl", vec![r("w2")]),
        ),
        Decl::family("padding", Kind::Type),
        Decl::family("pstream", Kind::Cotype),
        Decl::constructor("cocons", arrows(&["nat", "padding"], "pstream")),
        Decl::constructor("pad", arrows(&["padding"], "padding")),
        Decl::constructor("next", arrows(&["pstream"], "padding")),
        Decl::recdef(
            "s1",
            at("pstream"),
            app(
                "cocons",
                vec![
                    app("succ", vec![c("zero")]),
                    app(
                        "pad",
                        vec![app("pad", vec![app("next", vec![r("s1")])])],
                    ),
                ],
            ),
        ),
        Decl::recdef("p2", at("padding"), app("pad", vec![r("p2")])),
        Decl::recdef(
            "s3",
            at("pstream"),
            app("cocons", vec![c("zero"), app("next", vec![r("s3")])]),
        ),
        Decl::recdef(
            "s4",
            at("pstream"),
            app("cocons", vec![c("zero"), r("p5")]),
        ),
        Decl::recdef("p5", at("padding"), app("next", vec![r("s4")])),
        Decl::recdef("p6", at("padding"), app("pad", vec![r("p7")])),
        Decl::recdef("p7", at("padding"), app("pad", vec![r("p6")])),
    ]
}

pub fn fig1() -> Signature {
    Signature::new(fig1_decls()).unwrap()
}

/// `r1` and `r2` from the equality walkthrough, with prepattern telescopes.
pub fn r1_r2() -> Signature {
    let mut decls = fig1_decls();
    let x1 = Var::fresh("x");
    let x2 = Var::fresh("x");
    let ty = || {
        Type::pi(
            Var::fresh("x"),
            Flavor::Prepattern,
            at("nat"),
            at("pstream"),
        )
    };
    let call = |name: &str, x: &Var| Term::rec(name, vec![SpineEntry::Prepat(x.clone())]);
    decls.push(Decl::recdef(
        "r1",
        ty(),
        Term::lam(
            x1.clone(),
            app(
                "cocons",
                vec![Term::var(&x1), app("next", vec![call("r1", &x1)])],
            ),
        ),
    ));
    decls.push(Decl::recdef(
        "r2",
        ty(),
        Term::lam(
            x2.clone(),
            app(
                "cocons",
                vec![
                    Term::var(&x2),
                    app(
                        "next",
                        vec![app(
                            "cocons",
                            vec![Term::var(&x2), app("next", vec![call("r2", &x2)])],
                        )],
                    ),
                ],
            ),
        ),
    ));
    Signature::new(decls).unwrap()
}

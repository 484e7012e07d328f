use colf_core::equality::{equal_terms, EqConfig, EqContext};
use colf_core::expansion::{approx_equal, expand};
use colf_core::typecheck::{check_signature, CheckOptions};
use colf_core::{Decl, Kind, Signature, Term, Type};
use proptest::prelude::*;

/// Shape of a definition body over `tock : t -> t`, `tick : t -> t` and
/// `stop : t`. Terms are paths, so expanding to depth `n` costs `O(n)`.
#[derive(Clone, Debug)]
enum Shape {
    Tock(Box<Shape>),
    Tick(Box<Shape>),
    Stop,
    Call(usize),
}

fn leaf(defs: usize) -> impl Strategy<Value = Shape> {
    prop_oneof![Just(Shape::Stop), (0..defs).prop_map(Shape::Call)]
}

fn inner(defs: usize) -> impl Strategy<Value = Shape> {
    leaf(defs).prop_recursive(6, 6, 1, |s| {
        prop_oneof![
            s.clone().prop_map(|a| Shape::Tock(Box::new(a))),
            s.prop_map(|a| Shape::Tick(Box::new(a))),
        ]
    })
}

/// A body whose head is a constructor, so every definition is contractive.
fn body(defs: usize) -> impl Strategy<Value = Shape> {
    prop_oneof![
        inner(defs).prop_map(|a| Shape::Tock(Box::new(a))),
        inner(defs).prop_map(|a| Shape::Tick(Box::new(a))),
    ]
}

fn signature() -> impl Strategy<Value = Vec<Shape>> {
    (1usize..6).prop_flat_map(|n| prop::collection::vec(body(n), n))
}

fn term(s: &Shape) -> Term {
    match s {
        Shape::Tock(a) => Term::cst("tock", vec![term(a)]),
        Shape::Tick(a) => Term::cst("tick", vec![term(a)]),
        Shape::Stop => Term::cst("stop", vec![]),
        Shape::Call(i) => Term::rec(&format!("r{i}"), vec![]),
    }
}

fn size(s: &Shape) -> usize {
    match s {
        Shape::Tock(a) | Shape::Tick(a) => 1 + size(a),
        Shape::Stop | Shape::Call(_) => 1,
    }
}

fn build(shapes: &[Shape]) -> Signature {
    let t = || Type::atom("t", vec![]);
    let mut decls = vec![
        Decl::family("t", Kind::Cotype),
        Decl::constructor("tock", Type::arrow(t(), t())),
        Decl::constructor("tick", Type::arrow(t(), t())),
        Decl::constructor("stop", t()),
    ];
    for (i, s) in shapes.iter().enumerate() {
        decls.push(Decl::recdef(&format!("r{i}"), t(), term(s)));
    }
    Signature::new(decls).expect("well-formed signature")
}

fn equal(sig: &Signature, a: &Term, b: &Term) -> bool {
    let (v, _) = equal_terms(&EqContext::new(), &[], a, b, sig, EqConfig::default()).unwrap();
    v.is_equal()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equality_matches_bounded_expansion(shapes in signature()) {
        let sig = build(&shapes);
        let report = check_signature(&sig, &CheckOptions::default());
        prop_assert!(report.is_ok(), "{:?}", report.failures().next());
        let states: usize = shapes.iter().map(size).sum();
        let consts: Vec<Term> = (0..shapes.len())
            .map(|i| Term::rec(&format!("r{i}"), vec![]))
            .collect();
        for a in &consts {
            for b in &consts {
                let eq = equal(&sig, a, b);
                prop_assert_eq!(eq, equal(&sig, b, a));
                let ea = expand(&sig, a, states + 1).unwrap();
                let eb = expand(&sig, b, states + 1).unwrap();
                prop_assert_eq!(eq, approx_equal(&ea, &eb), "{} vs {}", ea, eb);
            }
        }
    }

    #[test]
    fn a_definition_equals_its_body(shapes in signature()) {
        let sig = build(&shapes);
        for (i, s) in shapes.iter().enumerate() {
            let r = Term::rec(&format!("r{i}"), vec![]);
            prop_assert!(equal(&sig, &r, &term(s)));
        }
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use colf::driver::{check_source, with_big_stack, Checked, Options};
use colf::report::{parse_expectations, Expectations};
use colf_core::print::Printer;
use colf_core::typecheck::{CheckOptions, Checker};
use colf_core::{Context, DeclKind, Head, Signature, SpineEntry, Term, Type};
use colf_core::equality::{EqConfig, Equality};
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

fn colf_files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "colf"))
        .collect();
    out.sort();
    out
}

/// Every corpus file, not counting mutations.
pub fn corpus_files() -> Vec<PathBuf> {
    colf_files(&corpus_dir())
}

pub fn mutation_files() -> Vec<PathBuf> {
    colf_files(&corpus_dir().join("mutations"))
}

pub fn check_file(path: &Path) -> Checked {
    let bytes = std::fs::read(path).expect("readable corpus file");
    with_big_stack(|| check_source(&bytes, &Options::default()))
}

pub fn expectations(path: &Path) -> Expectations {
    let text = std::fs::read_to_string(path.with_extension("tsv")).expect("expectations file");
    parse_expectations(&text).expect("well-formed expectations")
}

pub fn type_key(sig: &Signature, a: &Type) -> String {
    Printer::for_signature(sig).ty(a)
}

pub fn checker(sig: &Signature) -> Checker<'_> {
    Checker::new(sig, sig.len(), true, &CheckOptions::default())
}

pub fn types_equal(sig: &Signature, a: &Type, b: &Type) -> bool {
    checker(sig).type_equal(&mut Context::new(), a, b).is_ok()
}

/// Names of all constructors and recursive definitions.
pub fn term_constants(sig: &Signature) -> Vec<String> {
    sig.decls()
        .iter()
        .filter(|d| !matches!(d.kind, DeclKind::Family(_)))
        .map(|d| d.name.to_string())
        .collect()
}

/// Replace some recursion constants in `m` by their one-step unfolding.
/// Each unfolding spends one unit of `budget`.
pub fn unfold_randomly(sig: &Signature, m: &Term, p: f64, budget: &mut usize, rng: &mut impl Rng) -> Term {
    let mut eq = Equality::new(sig, EqConfig::default());
    unfold_in(&mut eq, m, p, budget, rng)
}

fn unfold_in(eq: &mut Equality<'_>, m: &Term, p: f64, budget: &mut usize, rng: &mut impl Rng) -> Term {
    match m {
        Term::Lam(x, body) => Term::lam(x.clone(), unfold_in(eq, body, p, budget, rng)),
        Term::Neutral(n) => {
            if let Head::Rec(r) = &n.head {
                if *budget > 0 && rng.gen_bool(p) {
                    *budget -= 1;
                    let u = eq.unfold(r, &n.spine).expect("unfolding a checked definition");
                    return unfold_in(eq, &Term::Neutral(u), p, budget, rng);
                }
            }
            let spine = n
                .spine
                .iter()
                .map(|e| match e {
                    SpineEntry::Term(t) => SpineEntry::Term(unfold_in(eq, t, p, budget, rng)),
                    SpineEntry::Prepat(v) => SpineEntry::Prepat(v.clone()),
                })
                .collect();
            Term::neutral(n.head.clone(), spine)
        }
    }
}

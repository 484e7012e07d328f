//! Side conditions on recursive definitions: prepattern types and spines,
//! contractiveness, and guardedness of every cycle through a definition.

use crate::print::spine_to_string;
use crate::syntax::*;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Constructors met along the current trace.
pub type TraceSet = BTreeSet<Sym>;

/// Recursion constants already unfolded on the current path.
pub type VisitedSet = BTreeSet<Sym>;

/// `A prepat`: a telescope of prepattern Π-binders ending in an atomic type.
pub fn is_prepattern_type(a: &Type) -> bool {
    match a {
        Type::Atomic(_) => true,
        Type::Pi(b, body) => b.flavor == Flavor::Prepattern && is_prepattern_type(body),
    }
}

/// `S prepat`: every entry is a prepattern argument. Repeats are allowed.
pub fn is_prepattern_spine(s: &Spine) -> bool {
    s.iter().all(|e| matches!(e, SpineEntry::Prepat(_)))
}

/// `M contra`: the head under the λ-prefix is not a recursion constant.
pub fn is_contractive(m: &Term) -> bool {
    let (_, r) = m.strip_lams();
    !matches!(r.head, Head::Rec(_))
}

/// `validtrace(C)`: some constructor in `C` is coinductive and its family
/// has the highest priority among the families of all constructors in `C`.
pub fn valid_trace(c: &TraceSet, sig: &Signature) -> bool {
    let mut best: Option<(Priority, Polarity)> = None;
    let mut coinductive_at_top = false;
    for name in c {
        let (Ok(family), Ok(polarity)) = (sig.family_of(name), sig.classify(name)) else {
            return false;
        };
        let Ok(p) = sig.priority_of(family) else {
            return false;
        };
        match best {
            Some((q, _)) if q > p => {}
            Some((q, _)) if q == p => {
                coinductive_at_top |= polarity == Polarity::Coinductive;
            }
            _ => {
                best = Some((p, polarity));
                coinductive_at_top = polarity == Polarity::Coinductive;
            }
        }
    }
    best.is_some() && coinductive_at_top
}

/// One cycle from the definition back to itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    /// Constructors in the order they were passed, with repetitions.
    pub constructors: Vec<Sym>,
    /// Recursion constants unfolded on the way, starting with the checked one.
    pub via: Vec<Sym>,
}

impl Trace {
    pub fn constructor_set(&self) -> TraceSet {
        self.constructors.iter().cloned().collect()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.constructors.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(c)?;
        }
        f.write_str("] via ")?;
        for (i, r) in self.via.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            f.write_str(r)?;
        }
        if let Some(first) = self.via.first() {
            write!(f, " -> {first}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("cycle {trace} is not guarded: no coinductive constructor of highest priority")]
    Unguarded { trace: Trace },
    #[error("recursion constant `{target}` is applied to non-prepattern spine {spine}")]
    NonPrepatSpine { target: Sym, spine: String },
    #[error("unknown recursion constant `{0}`")]
    UnknownRec(Sym),
}

struct Search<'s> {
    sig: &'s Signature,
    root: &'s str,
    constructors: Vec<Sym>,
    via: Vec<Sym>,
    traces: Vec<Trace>,
}

impl Search<'_> {
    fn term(&mut self, m: &Term, q: &mut VisitedSet) -> Result<(), GuardError> {
        match m {
            Term::Lam(_, body) => self.term(body, q),
            Term::Neutral(r) => self.neutral(r, q),
        }
    }

    fn spine(&mut self, s: &Spine, q: &mut VisitedSet) -> Result<(), GuardError> {
        for e in s {
            if let SpineEntry::Term(m) = e {
                self.term(m, q)?;
            }
        }
        Ok(())
    }

    fn neutral(&mut self, r: &Neutral, q: &mut VisitedSet) -> Result<(), GuardError> {
        match &r.head {
            Head::Var(_) => self.spine(&r.spine, q),
            Head::Const(c) => {
                self.constructors.push(c.clone());
                let out = self.spine(&r.spine, q);
                self.constructors.pop();
                out
            }
            Head::Rec(name) if &**name == self.root => {
                self.traces.push(Trace {
                    constructors: self.constructors.clone(),
                    via: self.via.clone(),
                });
                Ok(())
            }
            Head::Rec(name) if q.contains(name) => Ok(()),
            Head::Rec(name) => {
                if !is_prepattern_spine(&r.spine) {
                    return Err(GuardError::NonPrepatSpine {
                        target: name.clone(),
                        spine: spine_to_string(&r.spine),
                    });
                }
                let (_, body) = self
                    .sig
                    .rec_def(name)
                    .ok_or_else(|| GuardError::UnknownRec(name.clone()))?;
                q.insert(name.clone());
                self.via.push(name.clone());
                let out = self.term(body, q);
                self.via.pop();
                q.remove(name);
                out
            }
        }
    }
}

/// All cycles from `r` back to `r` found by the guardedness search over `m`.
pub fn guard_traces(sig: &Signature, r: &str, m: &Term) -> Result<Vec<Trace>, GuardError> {
    let mut search = Search {
        sig,
        root: r,
        constructors: Vec::new(),
        via: alloc::vec![Sym::from(r)],
        traces: Vec::new(),
    };
    search.term(m, &mut VisitedSet::new())?;
    Ok(search.traces)
}

/// `·;· ⊢ r ⋊ M`. Reports the first cycle whose constructor set fails
/// [`valid_trace`].
pub fn check_guarded(sig: &Signature, r: &str, m: &Term) -> Result<(), GuardError> {
    for trace in guard_traces(sig, r, m)? {
        if !valid_trace(&trace.constructor_set(), sig) {
            return Err(GuardError::Unguarded { trace });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use alloc::vec;

    fn set(names: &[&str]) -> TraceSet {
        names.iter().map(|n| Sym::from(*n)).collect()
    }

    fn body<'a>(sig: &'a Signature, r: &str) -> &'a Term {
        sig.rec_def(r).unwrap().1
    }

    #[test]
    fn prepattern_types() {
        assert!(is_prepattern_type(&at("nat")));
        assert!(!is_prepattern_type(&arrows(&["nat"], "pstream")));
        let sig = r1_r2();
        assert!(is_prepattern_type(sig.rec_def("r1").unwrap().0));
    }

    #[test]
    fn prepattern_spines() {
        let x = Var::fresh("x");
        assert!(is_prepattern_spine(&vec![]));
        assert!(is_prepattern_spine(&vec![
            SpineEntry::Prepat(x.clone()),
            SpineEntry::Prepat(x.clone())
        ]));
        assert!(!is_prepattern_spine(&vec![
            SpineEntry::Term(c("zero")),
            SpineEntry::Prepat(x)
        ]));
    }

    #[test]
    fn contractiveness() {
        assert!(is_contractive(&app("cosucc", vec![r("w2")])));
        assert!(!is_contractive(&r("r")));
        let x = Var::fresh("x");
        assert!(is_contractive(&Term::lam(x.clone(), app("c", vec![Term::var(&x)]))));
        assert!(!is_contractive(&Term::lam(
            x.clone(),
            Term::rec("r", vec![SpineEntry::Prepat(x)])
        )));
    }

    #[test]
    fn trace_validity() {
        let sig = fig1();
        assert!(valid_trace(&set(&["cocons", "pad", "next"]), &sig));
        assert!(!valid_trace(&set(&["pad"]), &sig));
        assert!(!valid_trace(&set(&[]), &sig));
        assert!(valid_trace(&set(&["cosucc"]), &sig));
        assert!(!valid_trace(&set(&["succ"]), &sig));
    }

    #[test]
    fn introductory_signature_guardedness() {
        let sig = fig1();
        for ok in ["w2", "w3", "eqw2w3", "s1", "s3", "s4", "p5"] {
            assert_eq!(check_guarded(&sig, ok, body(&sig, ok)), Ok(()), "{ok}");
        }
        for bad in ["w1", "p2", "p6", "p7"] {
            assert!(
                matches!(
                    check_guarded(&sig, bad, body(&sig, bad)),
                    Err(GuardError::Unguarded { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn s1_trace_passes_through_four_constructors() {
        let sig = fig1();
        let traces = guard_traces(&sig, "s1", body(&sig, "s1")).unwrap();
        assert_eq!(traces.len(), 1);
        let names: Vec<&str> = traces[0].constructors.iter().map(|s| &**s).collect();
        assert_eq!(names, ["cocons", "pad", "pad", "next"]);
    }

    #[test]
    fn p6_violation_goes_through_p7() {
        let sig = fig1();
        match check_guarded(&sig, "p6", body(&sig, "p6")) {
            Err(GuardError::Unguarded { trace }) => {
                let names: Vec<&str> = trace.constructors.iter().map(|s| &**s).collect();
                assert_eq!(names, ["pad", "pad"]);
                let via: Vec<&str> = trace.via.iter().map(|s| &**s).collect();
                assert_eq!(via, ["p6", "p7"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_cycle_is_examined() {
        let x = Var::fresh("x");
        let call = || Term::rec("r", vec![SpineEntry::Prepat(x.clone())]);
        let m = Term::lam(
            x.clone(),
            app("f", vec![call(), app("g", vec![call()])]),
        );
        let sig = Signature::new(vec![]).unwrap();
        let traces = guard_traces(&sig, "r", &m).unwrap();
        let sets: Vec<Vec<&str>> = traces
            .iter()
            .map(|t| t.constructors.iter().map(|s| &**s).collect())
            .collect();
        assert_eq!(sets, vec![vec!["f"], vec!["f", "g"]]);
    }

    #[test]
    fn non_prepattern_spine_at_other_recursion_constant() {
        let sig = r1_r2();
        let m = app(
            "next",
            vec![Term::rec("r1", vec![SpineEntry::Term(c("zero"))])],
        );
        assert!(matches!(
            check_guarded(&sig, "other", &m),
            Err(GuardError::NonPrepatSpine { .. })
        ));
    }
}

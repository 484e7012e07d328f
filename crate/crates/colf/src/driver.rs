//! Parse, elaborate and kernel-check one source file.

use std::fmt;
use std::time::{Duration, Instant};

use colf_core::equality::{
    bound_params, equal_terms, EqConfig, EqContext, EqStats, EqVerdict, EqualityError,
    DEFAULT_MEMO_CAP,
};
use colf_core::expansion::{expand, Approx, ExpandError};
use colf_core::print::Printer;
use colf_core::subst::eta_expand_head;
use colf_core::typecheck::{check_signature, CheckOptions, Checker, Judgment, TypeError};
use colf_core::{Context, DeclKind, Head, Signature, Term, Type};

use crate::elaborate::{elaborate_signature, Elaboration};
use crate::parser::parse_bytes;
use crate::token::Pos;

/// Stack size for checking threads. Elaboration and the kernel both recurse
/// over term structure.
pub const STACK_SIZE: usize = 256 * 1024 * 1024;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Ok,
    TypeError,
    GuardednessError,
    PrepatternError,
    ParseError,
}

impl Verdict {
    pub const ALL: [Verdict; 5] = [
        Verdict::Ok,
        Verdict::TypeError,
        Verdict::GuardednessError,
        Verdict::PrepatternError,
        Verdict::ParseError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::TypeError => "type-error",
            Verdict::GuardednessError => "guardedness-error",
            Verdict::PrepatternError => "prepattern-error",
            Verdict::ParseError => "parse-error",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        Verdict::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The verdict for one declaration. Parse errors outside any named
/// declaration are reported under the name `-`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclResult {
    pub name: String,
    pub verdict: Verdict,
    pub pos: Pos,
    /// The failing judgment and its explanation.
    pub message: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub memo_cap: usize,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            memo_cap: DEFAULT_MEMO_CAP,
        }
    }
}

pub struct Checked {
    pub results: Vec<DeclResult>,
    pub elaboration: Elaboration,
    /// The declarations accepted by the kernel.
    pub accepted: Signature,
    /// Largest equation context reached while checking.
    pub max_delta: usize,
    pub memo_cap_hit: bool,
    /// `log10` of the a priori bound on |Δ| for this signature.
    pub delta_bound_log10: f64,
    pub elapsed: Duration,
}

impl Checked {
    pub fn is_ok(&self) -> bool {
        self.results.iter().all(|r| r.verdict == Verdict::Ok)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.results.iter().find(|r| r.name == name).map(|r| r.verdict)
    }

    pub fn failures(&self) -> impl Iterator<Item = &DeclResult> {
        self.results.iter().filter(|r| r.verdict != Verdict::Ok)
    }
}

fn kernel_verdict(j: Judgment) -> Verdict {
    match j {
        Judgment::Guardedness | Judgment::Contractive => Verdict::GuardednessError,
        Judgment::Prepattern => Verdict::PrepatternError,
        _ => Verdict::TypeError,
    }
}

/// Check a whole file.
pub fn check_source(bytes: &[u8], opts: &Options) -> Checked {
    let start = Instant::now();
    let parsed = parse_bytes(bytes);
    let elaboration = elaborate_signature(&parsed.decls);
    let report = check_signature(
        &elaboration.signature,
        &CheckOptions {
            memo_cap: opts.memo_cap,
        },
    );

    let mut results = Vec::new();
    for e in &parsed.errors {
        results.push(DeclResult {
            name: e.decl.clone().unwrap_or_else(|| "-".into()),
            verdict: Verdict::ParseError,
            pos: e.pos,
            message: Some(format!("[parse] {}", strip_pos(&e.to_string()))),
        });
    }
    let mut memo_cap_hit = false;
    let mut seen = std::collections::HashSet::new();
    for o in &elaboration.outcomes {
        let first = seen.insert(o.name.clone());
        let (verdict, message) = match &o.result {
            Err(e) => {
                let v = if e.is_prepattern() {
                    Verdict::PrepatternError
                } else {
                    Verdict::TypeError
                };
                (v, Some(format!("[elaboration] {}", strip_pos(&e.to_string()))))
            }
            Ok(_) if !first => (Verdict::TypeError, Some("duplicate declaration".into())),
            Ok(_) => match report.get(&o.name).map(|r| &r.result) {
                Some(Err(d)) => {
                    if matches!(d.error, TypeError::Equality(EqualityError::MemoCap(_))) {
                        memo_cap_hit = true;
                    }
                    (kernel_verdict(d.judgment), Some(d.to_string()))
                }
                Some(Ok(())) => (Verdict::Ok, None),
                None => (Verdict::TypeError, Some("dropped by the elaborator".into())),
            },
        };
        let pos = match &o.result {
            Err(e) => e.span.start,
            Ok(_) => o.span.start,
        };
        results.push(DeclResult {
            name: o.name.clone(),
            verdict,
            pos,
            message,
        });
    }
    results.sort_by_key(|r| r.pos.offset);

    let rejected = report
        .decls
        .iter()
        .filter(|d| d.result.is_err())
        .map(|d| d.index)
        .collect();
    let accepted = elaboration
        .signature
        .without(&rejected)
        .unwrap_or_else(|_| Signature::empty());
    let (base, exponent) = bound_params(&elaboration.signature).base_and_exponent();
    Checked {
        results,
        accepted,
        max_delta: report.eq_stats.max_delta,
        memo_cap_hit,
        delta_bound_log10: exponent * base.max(1.0).log10(),
        elapsed: start.elapsed(),
        elaboration,
    }
}

fn strip_pos(s: &str) -> &str {
    match s.split_once(": ") {
        Some((head, rest)) if head.split(':').all(|p| p.parse::<usize>().is_ok()) => rest,
        _ => s,
    }
}

/// Run `f` on a thread with a large stack.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn checking thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

/// Why an equality or expansion query could not be answered.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("`{0}` is not an accepted term constant")]
    NotATermConstant(String),
    #[error("`{a}` has type `{ta}` but `{b}` has type `{tb}`")]
    TypesDiffer { a: String, ta: String, b: String, tb: String },
    #[error(transparent)]
    Equality(#[from] EqualityError),
    #[error(transparent)]
    Expansion(#[from] ExpandError),
}

/// The η-long term denoting constant `name` together with its type.
pub fn constant_term(sig: &Signature, name: &str) -> Result<(Term, Type), QueryError> {
    let (head, ty) = match sig.get(name).map(|d| &d.kind) {
        Some(DeclKind::Constructor(a)) => (Head::Const(name.into()), a),
        Some(DeclKind::RecDef { ty, .. }) => (Head::Rec(name.into()), ty),
        _ => return Err(QueryError::NotATermConstant(name.into())),
    };
    Ok((eta_expand_head(head, Vec::new(), ty), ty.clone()))
}

/// Decide whether two constants denote the same term.
pub fn equal_constants(
    sig: &Signature,
    a: &str,
    b: &str,
    opts: &Options,
) -> Result<(EqVerdict, EqStats), QueryError> {
    let (m, ta) = constant_term(sig, a)?;
    let (n, tb) = constant_term(sig, b)?;
    let check = CheckOptions {
        memo_cap: opts.memo_cap,
    };
    let mut ck = Checker::new(sig, sig.len(), true, &check);
    if ck.type_equal(&mut Context::new(), &ta, &tb).is_err() {
        let mut p = Printer::for_signature(sig);
        return Err(QueryError::TypesDiffer {
            a: a.into(),
            ta: p.ty(&ta),
            b: b.into(),
            tb: p.ty(&tb),
        });
    }
    let config = EqConfig {
        memo_cap: opts.memo_cap,
    };
    Ok(equal_terms(&EqContext::new(), &[], &m, &n, sig, config)?)
}

/// The depth-`k` Böhm approximation of a constant.
pub fn expand_constant(sig: &Signature, name: &str, k: usize) -> Result<Approx, QueryError> {
    let (m, _) = constant_term(sig, name)?;
    Ok(expand(sig, &m, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(text: &str) -> Checked {
        with_big_stack(|| check_source(text.as_bytes(), &Options::default()))
    }

    #[test]
    fn verdict_names_round_trip() {
        for v in Verdict::ALL {
            assert_eq!(Verdict::parse(v.as_str()), Some(v));
        }
        assert_eq!(Verdict::parse("fine"), None);
    }

    #[test]
    fn unguarded_inductive_cycle() {
        let c = check("nat : type. zero : nat. succ : nat -> nat. w1 : nat = succ w1.");
        assert!(!c.is_ok());
        assert_eq!(c.verdict("w1"), Some(Verdict::GuardednessError));
        assert_eq!(c.verdict("succ"), Some(Verdict::Ok));
        let w1 = c.results.iter().find(|r| r.name == "w1").unwrap();
        assert_eq!((w1.pos.line, w1.pos.col), (1, 44));
        assert!(w1.message.as_deref().unwrap().contains("guardedness"));
    }

    #[test]
    fn parse_errors_are_reported_per_declaration() {
        let c = check("nat : type.\nzero : nat ) .\nsucc : nat -> nat.");
        assert_eq!(c.verdict("zero"), Some(Verdict::ParseError));
        assert_eq!(c.verdict("succ"), Some(Verdict::Ok));
        assert_eq!(c.results.len(), 3);
    }

    #[test]
    fn prepattern_violation() {
        let c = check(
            "nat : type. succ : nat -> nat. s : cotype. c : nat -> s -> s. \
             up : nat -> s = [x] c x (up (succ x)).",
        );
        assert_eq!(c.verdict("up"), Some(Verdict::PrepatternError));
    }

    #[test]
    fn duplicates_are_type_errors() {
        let c = check("nat : type. nat : type.");
        assert_eq!(c.results[0].verdict, Verdict::Ok);
        assert_eq!(c.results[1].verdict, Verdict::TypeError);
    }

    #[test]
    fn accepted_signature_excludes_rejections() {
        let c = check("nat : type. zero : nat. succ : nat -> nat. w1 : nat = succ w1. one : nat = succ zero.");
        assert!(c.accepted.get("w1").is_none());
        assert!(c.accepted.get("one").is_some());
        assert!(!c.memo_cap_hit);
    }

    #[test]
    fn constant_queries() {
        let c = check(
            "conat : cotype. cosucc : conat -> conat. w2 : conat = cosucc w2. \
             w3 : conat = cosucc (cosucc w3). cozero : conat. nat : type.",
        );
        let opts = Options::default();
        let (v, stats) = equal_constants(&c.accepted, "w2", "w3", &opts).unwrap();
        assert!(v.is_equal());
        assert!(stats.max_delta >= 1);
        let (v, _) = equal_constants(&c.accepted, "w2", "cozero", &opts).unwrap();
        assert!(!v.is_equal());
        assert!(matches!(
            equal_constants(&c.accepted, "w2", "nat", &opts),
            Err(QueryError::NotATermConstant(_))
        ));
        assert!(matches!(
            equal_constants(&c.accepted, "w2", "cosucc", &opts),
            Err(QueryError::TypesDiffer { .. })
        ));
        let tree = expand_constant(&c.accepted, "w3", 2).unwrap();
        assert_eq!(tree.to_string(), "cosucc(cosucc(_|_))");
    }
}

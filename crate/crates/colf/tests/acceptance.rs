//! Acceptance gate. Prints one PASS or FAIL line per criterion and exits
//! with a failure status if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use colf::driver::{constant_term, equal_constants, with_big_stack, Options, Verdict};
use colf::elaborate::elaborate_signature;
use colf::parser::{parse_bytes, parse_signature};
use colf::report::compare;
use colf_core::equality::{equal_terms, EqConfig, EqContext, DEFAULT_MEMO_CAP};
use colf_core::expansion::{approx_equal, expand, hsubst_approx};
use colf_core::print::Printer;
use colf_core::subst::{erase, hsubst_term, hsubst_type};
use colf_core::syntax::AlphaEq;
use colf_core::typecheck::{check_signature, CheckOptions};
use colf_core::{Context, DeclKind, Flavor, Head, Neutral, Signature, SpineEntry, Term, Type, Var};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + Sync + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let path = corpus("fig1.colf");
    let start = Instant::now();
    let c = check_file(&path);
    let elapsed = start.elapsed();
    let mismatches = compare(&expectations(&path), &c.results);
    ensure(mismatches.is_empty(), || format!("verdicts differ: {mismatches:?}"))?;
    let mut rejected: Vec<&str> = c.failures().map(|r| r.name.as_str()).collect();
    rejected.sort();
    ensure(rejected == ["p2", "p6", "p7", "w1"], || format!("rejected {rejected:?}"))?;
    for r in c.failures() {
        let m = r.message.as_deref().unwrap_or("");
        ensure(
            r.verdict == Verdict::GuardednessError && m.contains("guardedness"),
            || format!("{}: diagnostic does not cite guardedness: {m}", r.name),
        )?;
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} accepted, rejected {rejected:?} with guardedness diagnostics, {:.1} ms",
        c.results.len() - rejected.len(),
        elapsed.as_secs_f64() * 1e3
    ))
}

fn criterion_2() -> Outcome {
    let cases = [
        ("fig1.colf", "eqw2w3", "w2", "w3"),
        ("streams.colf", "eqr1r2", "r1", "r2"),
        ("cyclic_terms.colf", "eqfix", "fix", "fix2"),
        ("cyclic_terms.colf", "eqr", "r", "r'"),
        ("subtyping_eq.colf", "eqproof", "s_sub_t", "s_sub_t2"),
    ];
    let mut detail = Vec::new();
    for (file, proof, a, b) in cases {
        let c = check_file(&corpus(file));
        ensure(c.verdict(proof) == Some(Verdict::Ok), || {
            format!("{file}: {proof} is {:?}", c.verdict(proof))
        })?;
        ensure(c.max_delta <= 64, || format!("{file}: |Δ| reached {}", c.max_delta))?;
        let (v, stats) = with_big_stack(|| equal_constants(&c.accepted, a, b, &Options::default()))
            .map_err(|e| format!("{a} = {b}: {e}"))?;
        ensure(v.is_equal(), || format!("{a} and {b} judged unequal: {v:?}"))?;
        ensure(stats.max_delta <= 64, || format!("{a} = {b}: |Δ| reached {}", stats.max_delta))?;
        detail.push(format!("{proof} |Δ|={}", stats.max_delta));
    }
    Ok(detail.join(", "))
}

fn criterion_3() -> Outcome {
    let required: [(&str, &[&str]); 4] = [
        ("subtyping.colf", &["s", "t", "s_sub_t", "inf/arr", "fold", "unfold"]),
        ("polarized.colf", &["il_sub_rl", "eg_s_sub_t", "intlist", "reallist", "eg_s", "eg_t"]),
        ("cyclic_terms.colf", &["fix", "fix2", "eqfix", "r", "r'", "eqr"]),
        (
            "bisim.colf",
            &["omega", "ev_omega", "od_omega", "isconat_omega", "bisim_ev_z", "bisim_ev_s", "bisim_od_s"],
        ),
    ];
    let mut detail = Vec::new();
    for (file, names) in required {
        let path = corpus(file);
        let path_str = path.to_string_lossy().to_string();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let status = colf::cli::run(["colf", "check", path_str.as_str()], &mut out, &mut err);
        ensure(status == 0, || {
            format!("{file}: exit {status}: {}", String::from_utf8_lossy(&out))
        })?;
        let c = check_file(&path);
        for n in names {
            ensure(c.verdict(n) == Some(Verdict::Ok), || format!("{file}: {n} not accepted"))?;
        }
        detail.push(format!("{file} ({} decls)", c.results.len()));
    }
    Ok(format!("exit 0 on {}", detail.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut pairs = 0;
    let mut equal_pairs = 0;
    for path in corpus_files() {
        let c = check_file(&path);
        let sig = &c.accepted;
        let mut groups: BTreeMap<String, Vec<(String, Term)>> = BTreeMap::new();
        for name in term_constants(sig) {
            let (m, ty) = constant_term(sig, &name).map_err(|e| e.to_string())?;
            groups.entry(type_key(sig, &ty)).or_default().push((name.clone(), m));
            if let Some(DeclKind::RecDef { ty, body }) = sig.get(&name).map(|d| &d.kind) {
                groups
                    .entry(type_key(sig, ty))
                    .or_default()
                    .push((format!("body of {name}"), body.clone()));
            }
        }
        for members in groups.values() {
            for i in 0..members.len() {
                for j in i..members.len() {
                    let (na, a) = &members[i];
                    let (nb, b) = &members[j];
                    pairs += 1;
                    let (v, _) = equal_terms(&EqContext::new(), &[], a, b, sig, EqConfig::default())
                        .map_err(|e| format!("{na} = {nb}: {e}"))?;
                    if !v.is_equal() {
                        continue;
                    }
                    equal_pairs += 1;
                    for k in 0..=20 {
                        let ea = expand(sig, a, k).map_err(|e| format!("expanding {na}: {e}"))?;
                        let eb = expand(sig, b, k).map_err(|e| format!("expanding {nb}: {e}"))?;
                        ensure(approx_equal(&ea, &eb), || {
                            format!(
                                "{}: {na} = {nb} but depth-{k} expansions differ:\n{ea}\n{eb}",
                                path.display()
                            )
                        })?;
                    }
                }
            }
        }
    }
    ensure(equal_pairs > 0, || "no equal pairs found".into())?;
    Ok(format!(
        "{equal_pairs} equal pairs of {pairs} same-type pairs agree at every depth 0..=20"
    ))
}

fn criterion_5() -> Outcome {
    let original = check_file(&corpus("fig1_valid.colf"));
    for n in ["s1", "s3", "s4"] {
        ensure(original.verdict(n) == Some(Verdict::Ok), || format!("{n} rejected before mutation"))?;
    }
    let mut detail = Vec::new();
    for path in mutation_files() {
        let c = check_file(&path);
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        for n in ["s1", "s3", "s4"] {
            ensure(c.verdict(n) == Some(Verdict::GuardednessError), || {
                format!("{name}: {n} is {:?}", c.verdict(n))
            })?;
        }
        let mismatches = compare(&expectations(&path), &c.results);
        ensure(mismatches.is_empty(), || format!("{name}: {mismatches:?}"))?;
        detail.push(name);
    }
    ensure(detail.len() == 2, || format!("expected two mutations, found {detail:?}"))?;
    Ok(format!("s1, s3, s4 rejected under {}", detail.join(" and ")))
}

/// A closed term of the corpus with its type, in the signature it was
/// checked against.
struct Sample {
    file: usize,
    term: Term,
    key: String,
}

struct Corpus {
    sigs: Vec<Signature>,
    samples: Vec<Sample>,
}

fn is_closed(m: &Term) -> bool {
    match m {
        Term::Lam(..) => false,
        Term::Neutral(n) => {
            !matches!(n.head, Head::Var(_))
                && n.spine.iter().all(|e| match e {
                    SpineEntry::Term(t) => is_closed_under(t),
                    SpineEntry::Prepat(_) => false,
                })
        }
    }
}

fn is_closed_under(m: &Term) -> bool {
    fn go(m: &Term, bound: &mut Vec<Var>) -> bool {
        match m {
            Term::Lam(x, b) => {
                bound.push(x.clone());
                let r = go(b, bound);
                bound.pop();
                r
            }
            Term::Neutral(n) => {
                let head_ok = match &n.head {
                    Head::Var(x) => bound.iter().any(|y| y.id() == x.id()),
                    _ => true,
                };
                head_ok
                    && n.spine.iter().all(|e| match e {
                        SpineEntry::Term(t) => go(t, bound),
                        SpineEntry::Prepat(x) => bound.iter().any(|y| y.id() == x.id()),
                    })
            }
        }
    }
    go(m, &mut Vec::new())
}

/// Every closed neutral subterm of `m`, in pre-order.
fn closed_subterms(m: &Term, out: &mut Vec<Neutral>) {
    match m {
        Term::Lam(_, b) => closed_subterms(b, out),
        Term::Neutral(n) => {
            if is_closed(m) {
                out.push(n.clone());
            }
            for e in &n.spine {
                if let SpineEntry::Term(t) = e {
                    closed_subterms(t, out);
                }
            }
        }
    }
}

/// Replace the `target`-th closed neutral subterm (pre-order) by `x`.
fn abstract_nth(m: &Term, counter: &mut usize, target: usize, x: &Var) -> Term {
    match m {
        Term::Lam(y, b) => Term::lam(y.clone(), abstract_nth(b, counter, target, x)),
        Term::Neutral(n) => {
            if is_closed(m) {
                if *counter == target {
                    *counter += 1;
                    return Term::var(x);
                }
                *counter += 1;
            }
            let spine = n
                .spine
                .iter()
                .map(|e| match e {
                    SpineEntry::Term(t) => SpineEntry::Term(abstract_nth(t, counter, target, x)),
                    SpineEntry::Prepat(v) => SpineEntry::Prepat(v.clone()),
                })
                .collect();
            Term::neutral(n.head.clone(), spine)
        }
    }
}

fn load_corpus() -> Corpus {
    let mut sigs = Vec::new();
    let mut samples = Vec::new();
    for path in corpus_files() {
        let c = check_file(&path);
        let sig = c.accepted;
        let file = sigs.len();
        let mut found = Vec::new();
        for name in term_constants(&sig) {
            let (m, _) = constant_term(&sig, &name).unwrap();
            closed_subterms(&m, &mut found);
            if let Some(DeclKind::RecDef { body, .. }) = sig.get(&name).map(|d| &d.kind) {
                closed_subterms(body, &mut found);
            }
        }
        let mut seen: Vec<Term> = Vec::new();
        for n in found {
            let t = Term::Neutral(n.clone());
            if seen.iter().any(|s| s.alpha_eq(&t)) {
                continue;
            }
            seen.push(t.clone());
            let Ok(p) = checker(&sig).synth_neutral(&mut Context::new(), &n) else {
                continue;
            };
            let ty = Type::Atomic(p);
            samples.push(Sample {
                file,
                key: type_key(&sig, &ty),
                term: t,
            });
        }
        sigs.push(sig);
    }
    Corpus { sigs, samples }
}

fn criterion_6a(corpus: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01F);
    let mut groups: BTreeMap<(usize, &str), Vec<&Sample>> = BTreeMap::new();
    for s in &corpus.samples {
        groups.entry((s.file, s.key.as_str())).or_default().push(s);
    }
    let groups: Vec<_> = groups.into_values().collect();
    let (mut pairs, mut equal) = (0, 0);
    let eq = |sig: &Signature, a: &Term, b: &Term| -> Result<bool, String> {
        let (v, stats) = equal_terms(&EqContext::new(), &[], a, b, sig, EqConfig::default())
            .map_err(|e| e.to_string())?;
        ensure(stats.max_delta < DEFAULT_MEMO_CAP, || "memo cap reached".into())?;
        Ok(v.is_equal())
    };
    while pairs < 1000 {
        let g = &groups[rng.gen_range(0..groups.len())];
        let sig = &corpus.sigs[g[0].file];
        let pick = |rng: &mut ChaCha8Rng| {
            let s = g[rng.gen_range(0..g.len())];
            let mut budget = rng.gen_range(0..4);
            unfold_randomly(sig, &s.term, 0.5, &mut budget, rng)
        };
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let show = |m: &Term| Printer::for_signature(sig).term(m);
        ensure(eq(sig, &a, &a)?, || format!("not reflexive on {}", show(&a)))?;
        let ab = eq(sig, &a, &b)?;
        let ba = eq(sig, &b, &a)?;
        ensure(ab == ba, || format!("not symmetric on {} and {}", show(&a), show(&b)))?;
        let bc = eq(sig, &b, &c)?;
        if ab && bc {
            ensure(eq(sig, &a, &c)?, || {
                format!("not transitive on {}, {}, {}", show(&a), show(&b), show(&c))
            })?;
        }
        pairs += 1;
        equal += ab as usize;
    }
    ensure(equal > 0 && equal < pairs, || format!("degenerate sample: {equal} of {pairs} equal"))?;
    Ok(format!("{pairs} pairs ({equal} equal, {} unequal)", pairs - equal))
}

/// `Γ, x:A ⊢ M ⇐ B` and `⊢ N ⇐ A` drawn from the corpus.
struct Instance {
    file: usize,
    x: Var,
    a: Type,
    m: Term,
    b: Type,
    n: Term,
}

fn instances(corpus: &Corpus, count: usize, seed: u64) -> Result<Vec<Instance>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        ensure(attempts < 200_000, || format!("only {} instances found", out.len()))?;
        let t = &corpus.samples[rng.gen_range(0..corpus.samples.len())];
        let sig = &corpus.sigs[t.file];
        let mut subs = Vec::new();
        closed_subterms(&t.term, &mut subs);
        if subs.len() < 2 {
            continue;
        }
        let target = rng.gen_range(1..subs.len());
        let Ok(p) = checker(sig).synth_neutral(&mut Context::new(), &subs[target]) else {
            continue;
        };
        let a = Type::Atomic(p);
        let x = Var::fresh("x");
        let m = abstract_nth(&t.term, &mut 0, target, &x);
        let mut ctx = Context::new();
        ctx.push(x.clone(), a.clone(), Flavor::Ordinary);
        let Term::Neutral(mn) = &m else { continue };
        let Ok(b) = checker(sig).synth_neutral(&mut ctx, mn) else {
            continue;
        };
        let b = Type::Atomic(b);
        let key = type_key(sig, &a);
        let candidates: Vec<&Sample> = corpus
            .samples
            .iter()
            .filter(|s| s.file == t.file && s.key == key)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let n = candidates[rng.gen_range(0..candidates.len())].term.clone();
        let mut budget = rng.gen_range(0..3);
        let n = unfold_randomly(sig, &n, 0.5, &mut budget, &mut rng);
        out.push(Instance {
            file: t.file,
            x,
            a,
            m,
            b,
            n,
        });
    }
    Ok(out)
}

fn criterion_6b(corpus: &Corpus) -> Outcome {
    let insts = instances(corpus, 200, 6)?;
    let mut nontrivial = 0;
    for i in &insts {
        let sig = &corpus.sigs[i.file];
        let tau = erase(&i.a);
        let show = |m: &Term| Printer::for_signature(sig).term(m);
        checker(sig)
            .check_term(&mut Context::new(), &i.n, &i.a)
            .map_err(|d| format!("substituend {} ill-typed: {d}", show(&i.n)))?;
        let m2 = hsubst_term(&i.n, &i.x, &tau, &i.m).map_err(|e| e.to_string())?;
        let b2 = hsubst_type(&i.n, &i.x, &tau, &i.b).map_err(|e| e.to_string())?;
        checker(sig)
            .check_term(&mut Context::new(), &m2, &b2)
            .map_err(|d| format!("[{}/x] {} fails to check: {d}", show(&i.n), show(&i.m)))?;
        if !i.b.alpha_eq(&b2) {
            nontrivial += 1;
        }
    }
    Ok(format!("{} instances re-check ({nontrivial} with a type depending on x)", insts.len()))
}

fn criterion_6c(corpus: &Corpus) -> Outcome {
    let insts = instances(corpus, 200, 7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in &insts {
        let sig = &corpus.sigs[i.file];
        let k = rng.gen_range(0..=10);
        let tau = erase(&i.a);
        let m2 = hsubst_term(&i.n, &i.x, &tau, &i.m).map_err(|e| e.to_string())?;
        let lhs = expand(sig, &m2, k).map_err(|e| e.to_string())?;
        let en = expand(sig, &i.n, k).map_err(|e| e.to_string())?;
        let em = expand(sig, &i.m, k).map_err(|e| e.to_string())?;
        let rhs = hsubst_approx(&en, &i.x, &tau, &em).map_err(|e| e.to_string())?.truncate(k);
        ensure(approx_equal(&lhs, &rhs), || {
            format!("depth {k}: exp([N/x]M) = {lhs} but [exp N/x](exp M) = {rhs}")
        })?;
    }
    Ok(format!("{} instances commute at depths 0..=10", insts.len()))
}

fn criterion_6d() -> Outcome {
    let alphabet: &[&[u8]] = &[
        b"nat", b"X", b" ", b":", b".", b"->", b"{", b"}", b"[", b"]", b"(", b")", b"=", b"_",
        b"type", b"cotype", b"%", b"\n", b"-", b"\xff", b"\xce\xbb", b"\t", b"/", b"'",
    ];
    let sources: Vec<Vec<u8>> = corpus_files()
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let mut errors = 0;
    let mut decls = 0;
    for i in 0..100_000 {
        let len = rng.gen_range(0..120);
        let bytes: Vec<u8> = match i % 3 {
            0 => (0..len).map(|_| rng.gen()).collect(),
            1 => (0..len)
                .flat_map(|_| alphabet[rng.gen_range(0..alphabet.len())].iter().copied())
                .collect(),
            _ => {
                let mut b = sources[rng.gen_range(0..sources.len())].clone();
                for _ in 0..rng.gen_range(1..8) {
                    let at = rng.gen_range(0..b.len());
                    match rng.gen_range(0..3) {
                        0 => b[at] = rng.gen(),
                        1 => b.insert(at, alphabet[rng.gen_range(0..alphabet.len())][0]),
                        _ => {
                            b.remove(at);
                        }
                    }
                }
                b
            }
        };
        let parsed = std::panic::catch_unwind(|| parse_bytes(&bytes))
            .map_err(|_| format!("parser panicked on {bytes:?}"))?;
        errors += parsed.errors.len();
        decls += parsed.decls.len();
    }
    Ok(format!(
        "100000 inputs, no crashes ({decls} declarations and {errors} errors reported)"
    ))
}

fn criterion_6e() -> Outcome {
    let mut total = 0;
    for path in corpus_files().into_iter().chain(mutation_files()) {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let c = check_file(&path);
        let report = check_signature(&c.accepted, &CheckOptions::default());
        if let Some((d, diag)) = report.failures().next() {
            return Err(format!("{name}: kernel rejects elaborated `{}`: {diag}", d.name));
        }
        let printed = Printer::for_signature(&c.accepted).signature(&c.accepted);
        let surface = parse_signature(&printed).map_err(|e| format!("{name}: reparse: {e}"))?;
        let again = elaborate_signature(&surface);
        ensure(again.signature.len() == c.accepted.len(), || {
            format!("{name}: printed signature re-elaborates to fewer declarations")
        })?;
        for (a, b) in c.accepted.decls().iter().zip(again.signature.decls()) {
            ensure(a.alpha_eq(b), || format!("{name}: `{a}` printed and re-read as `{b}`"))?;
        }
        total += c.accepted.len();
    }
    Ok(format!(
        "{total} elaborated declarations re-check in the kernel and survive printing"
    ))
}

fn criterion_7() -> Outcome {
    let mut slowest = (Duration::ZERO, String::new());
    let mut max_delta = 0;
    for path in corpus_files().into_iter().chain(mutation_files()) {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let start = Instant::now();
        let c = check_file(&path);
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(5), || format!("{name} took {elapsed:?}"))?;
        ensure(!c.memo_cap_hit && c.max_delta < DEFAULT_MEMO_CAP, || {
            format!("{name} reached the memo cap")
        })?;
        max_delta = max_delta.max(c.max_delta);
        if elapsed > slowest.0 {
            slowest = (elapsed, name);
        }
    }
    Ok(format!(
        "slowest {} at {:.1} ms, largest |Δ| {max_delta}",
        slowest.1,
        slowest.0.as_secs_f64() * 1e3
    ))
}

fn main() {
    let corpus = with_big_stack(load_corpus);
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 introductory signatures", Box::new(criterion_1)),
        ("2 equality examples", Box::new(criterion_2)),
        ("3 case studies", Box::new(criterion_3)),
        ("4 expansion agrees with equality", Box::new(criterion_4)),
        ("5 mutations", Box::new(criterion_5)),
        ("6a equality is an equivalence", Box::new(|| criterion_6a(&corpus))),
        ("6b substitution preserves typing", Box::new(|| criterion_6b(&corpus))),
        ("6c expansion commutes with substitution", Box::new(|| criterion_6c(&corpus))),
        ("6d parser fuzz", Box::new(criterion_6d)),
        ("6e elaborated output re-checks", Box::new(criterion_6e)),
        ("7 decidability smoke test", Box::new(criterion_7)),
    ];
    let mut failed = 0;
    for (title, f) in &criteria {
        let outcome = with_big_stack(|| {
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
                .unwrap_or_else(|_| Err("panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {title}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {title}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

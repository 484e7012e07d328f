//! Machine-readable verdict records and expectation files.
//!
//! A record is `name<TAB>verdict<TAB>line:col`. An expectation file has one
//! `name<TAB>verdict` line per declaration; blank lines and lines starting
//! with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::driver::{DeclResult, Verdict};

pub fn machine_record(r: &DeclResult) -> String {
    format!("{}\t{}\t{}", r.name, r.verdict, r.pos)
}

pub fn machine_report(results: &[DeclResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(out, "{}", machine_record(r));
    }
    out
}

/// One human-readable diagnostic line for a failed declaration.
pub fn human_line(file: &str, r: &DeclResult) -> String {
    let mut line = format!("{file}:{}: {}: {}", r.pos, r.name, r.verdict);
    if let Some(m) = &r.message {
        line.push_str(": ");
        line.push_str(m);
    }
    line
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExpectationError {
    #[error("line {0}: expected `name<TAB>verdict`")]
    Malformed(usize),
    #[error("line {0}: unknown verdict `{1}`")]
    UnknownVerdict(usize, String),
}

/// Expected verdicts in file order.
pub type Expectations = Vec<(String, Verdict)>;

pub fn parse_expectations(text: &str) -> Result<Expectations, ExpectationError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, verdict) = line.split_once('\t').ok_or(ExpectationError::Malformed(i + 1))?;
        let v = Verdict::parse(verdict.trim())
            .ok_or_else(|| ExpectationError::UnknownVerdict(i + 1, verdict.trim().into()))?;
        out.push((name.to_string(), v));
    }
    Ok(out)
}

/// A disagreement between the expectations and the actual verdicts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    Wrong { name: String, expected: Verdict, found: Verdict },
    Missing { name: String, expected: Verdict },
    Unexpected { name: String, found: Verdict },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::Wrong { name, expected, found } => {
                write!(f, "{name}: expected {expected}, found {found}")
            }
            Mismatch::Missing { name, expected } => {
                write!(f, "{name}: expected {expected}, but no such declaration")
            }
            Mismatch::Unexpected { name, found } => {
                write!(f, "{name}: {found}, but no expectation was given")
            }
        }
    }
}

pub fn compare(expected: &Expectations, results: &[DeclResult]) -> Vec<Mismatch> {
    let mut actual: BTreeMap<&str, Verdict> = BTreeMap::new();
    for r in results {
        actual.entry(r.name.as_str()).or_insert(r.verdict);
    }
    let mut out = Vec::new();
    for (name, want) in expected {
        match actual.remove(name.as_str()) {
            Some(found) if found == *want => {}
            Some(found) => out.push(Mismatch::Wrong {
                name: name.clone(),
                expected: *want,
                found,
            }),
            None => out.push(Mismatch::Missing {
                name: name.clone(),
                expected: *want,
            }),
        }
    }
    for (name, found) in actual {
        out.push(Mismatch::Unexpected {
            name: name.into(),
            found,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::Pos;

    fn result(name: &str, verdict: Verdict) -> DeclResult {
        DeclResult {
            name: name.into(),
            verdict,
            pos: Pos { offset: 0, line: 3, col: 1 },
            message: None,
        }
    }

    #[test]
    fn record_format() {
        let r = result("w1", Verdict::GuardednessError);
        assert_eq!(machine_record(&r), "w1\tguardedness-error\t3:1");
        assert_eq!(machine_report(&[r.clone(), r]).lines().count(), 2);
    }

    #[test]
    fn expectations_parse_and_compare() {
        let e = parse_expectations("# header\nw1\tguardedness-error\nw2\tok\n\nw9\tok\n").unwrap();
        assert_eq!(e.len(), 3);
        let rs = [
            result("w1", Verdict::GuardednessError),
            result("w2", Verdict::TypeError),
            result("w4", Verdict::Ok),
        ];
        let m = compare(&e, &rs);
        assert_eq!(m.len(), 3);
        assert!(matches!(&m[0], Mismatch::Wrong { name, .. } if name == "w2"));
        assert!(matches!(&m[1], Mismatch::Missing { name, .. } if name == "w9"));
        assert!(matches!(&m[2], Mismatch::Unexpected { name, .. } if name == "w4"));
    }

    #[test]
    fn malformed_expectations() {
        assert_eq!(parse_expectations("w1 ok"), Err(ExpectationError::Malformed(1)));
        assert_eq!(
            parse_expectations("w1\tfine"),
            Err(ExpectationError::UnknownVerdict(1, "fine".into()))
        );
    }
}

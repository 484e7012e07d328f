//! Kernel for CoLF, a logical framework whose terms may be circular.
//!
//! Everything here is pure and `no_std`: abstract syntax in canonical spine
//! form, hereditary substitution, the validity side conditions (prepattern,
//! contractiveness, guardedness), circular term equality, depth-bounded
//! Böhm-tree expansion, and the bidirectional type checker for whole
//! signatures.
//!
//! Parsing and elaboration live in the `colf` crate; this crate only ever
//! sees fully explicit core syntax and trusts nothing it is handed.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod equality;
pub mod expansion;
pub mod print;
pub mod subst;
pub mod syntax;
pub mod typecheck;
pub mod validity;

#[cfg(test)]
pub(crate) mod fixtures;

pub use syntax::{
    AtomicType, Context, ContextEntry, Decl, DeclKind, Flavor, Head, Kind, Neutral, Polarity,
    Priority, Signature, SignatureError, Site, Spine, SpineEntry, Sym, Term, Type, Var,
};

//! Front end for CoLF: lexing, parsing, elaboration of implicit arguments,
//! the per-file checking driver, and the command-line interface.

pub mod cli;
pub mod driver;
pub mod elaborate;
pub mod parser;
pub mod report;
pub mod surface;
pub mod token;

//! The `colf` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::driver::{
    check_source, equal_constants, expand_constant, with_big_stack, Checked, Options,
};
use crate::report::{compare, human_line, machine_report, parse_expectations};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "colf", version, about = "Check CoLF signatures")]
pub struct Cli {
    /// Depth of Böhm-tree approximations printed by `expand`.
    #[arg(long, global = true, default_value_t = 12)]
    pub depth: usize,
    /// Maximum number of equations memoized during one equality query.
    #[arg(long = "memo-cap", global = true, default_value_t = colf_core::equality::DEFAULT_MEMO_CAP)]
    pub memo_cap: usize,
    /// Emit tab-separated records instead of prose.
    #[arg(long, global = true)]
    pub machine: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every declaration of each file.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Compare verdicts against an expectations file instead. Give one
        /// per input file, in the same order.
        #[arg(long)]
        expect: Vec<PathBuf>,
    },
    /// Decide whether two constants denote equal terms.
    Eq { file: PathBuf, left: String, right: String },
    /// Print the depth-bounded Böhm tree of a constant.
    Expand { file: PathBuf, constant: String },
}

/// Run the command line on `args` (including the program name) and return
/// the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return status;
        }
    };
    let opts = Options {
        memo_cap: cli.memo_cap,
    };
    match &cli.command {
        Command::Check { files, expect } => check(&cli, files, expect, &opts, out, err),
        Command::Eq { file, left, right } => {
            let Some(checked) = load(file, &opts, err) else {
                return EXIT_USAGE;
            };
            match with_big_stack(|| equal_constants(&checked.accepted, left, right, &opts)) {
                Ok((v, stats)) => {
                    if cli.machine {
                        let word = if v.is_equal() { "equal" } else { "unequal" };
                        let _ = writeln!(out, "{word}\t{}", stats.max_delta);
                    } else if v.is_equal() {
                        let _ = writeln!(
                            out,
                            "{left} = {right} (largest equation context: {})",
                            stats.max_delta
                        );
                    } else if let colf_core::equality::EqVerdict::Unequal(why) = &v {
                        let _ = writeln!(out, "{left} and {right} differ: {why}");
                    }
                    if v.is_equal() {
                        EXIT_OK
                    } else {
                        EXIT_FAIL
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", file.display());
                    EXIT_ERROR
                }
            }
        }
        Command::Expand { file, constant } => {
            let Some(checked) = load(file, &opts, err) else {
                return EXIT_USAGE;
            };
            match with_big_stack(|| expand_constant(&checked.accepted, constant, cli.depth)) {
                Ok(tree) => {
                    if cli.machine {
                        let _ = writeln!(out, "{tree}");
                    } else {
                        let _ = write!(out, "{}", tree.render());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", file.display());
                    EXIT_ERROR
                }
            }
        }
    }
}

fn load(file: &Path, opts: &Options, err: &mut dyn Write) -> Option<Checked> {
    match std::fs::read(file) {
        Ok(bytes) => Some(with_big_stack(|| check_source(&bytes, opts))),
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", file.display());
            None
        }
    }
}

fn check(
    cli: &Cli,
    files: &[PathBuf],
    expect: &[PathBuf],
    opts: &Options,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if !expect.is_empty() && expect.len() != files.len() {
        let _ = writeln!(err, "give one --expect file per input file");
        return EXIT_USAGE;
    }
    let mut inputs = Vec::new();
    for f in files {
        match std::fs::read(f) {
            Ok(b) => inputs.push(b),
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", f.display());
                return EXIT_USAGE;
            }
        }
    }
    let mut expectations = Vec::new();
    for f in expect {
        let text = match std::fs::read_to_string(f) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", f.display());
                return EXIT_USAGE;
            }
        };
        match parse_expectations(&text) {
            Ok(e) => expectations.push(e),
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", f.display());
                return EXIT_USAGE;
            }
        }
    }

    let results: Vec<Checked> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|bytes| {
                std::thread::Builder::new()
                    .stack_size(crate::driver::STACK_SIZE)
                    .spawn_scoped(s, move || check_source(bytes, opts))
                    .expect("spawn checking thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });

    let mut status = EXIT_OK;
    for (i, (file, checked)) in files.iter().zip(&results).enumerate() {
        let name = file.display().to_string();
        if cli.machine {
            if files.len() > 1 {
                let _ = writeln!(out, "# {name}");
            }
            let _ = write!(out, "{}", machine_report(&checked.results));
        }
        if let Some(exp) = expectations.get(i) {
            let mismatches = compare(exp, &checked.results);
            for m in &mismatches {
                let _ = writeln!(err, "{name}: {m}");
            }
            if !mismatches.is_empty() {
                status = EXIT_FAIL;
            }
        } else if !checked.is_ok() {
            status = EXIT_FAIL;
        }
        if !cli.machine {
            for r in checked.failures() {
                let _ = writeln!(out, "{}", human_line(&name, r));
            }
            let rejected = checked.failures().count();
            let _ = writeln!(
                err,
                "{name}: {} declarations, {} rejected; largest equation context {} \
                 (a priori bound 10^{:.1}){}; {:.1} ms",
                checked.results.len(),
                rejected,
                checked.max_delta,
                checked.delta_bound_log10,
                if checked.memo_cap_hit { "; memo cap reached" } else { "" },
                checked.elapsed.as_secs_f64() * 1e3,
            );
        }
    }
    status
}

//! Command-line front end for `lagfloer`.
//!
//! Documents are JSON files describing an operation system, optionally with a
//! Lagrangian presentation, named elements, morphisms and geometric data.
//! [`run`] parses arguments, executes one command and returns the exit code
//! with the bytes destined for standard output and standard error.

pub mod commands;
pub mod document;
pub mod report;

use std::io::Read;

use clap::Parser;

pub use commands::{Cli, Command, Output, ARITHMETIC, COMMANDS};
pub use document::{CliError, Loaded, PresentationDocument};

/// Exit code for a completed command whose verification passed.
pub const EXIT_OK: i32 = 0;
/// Exit code for a completed command whose verification failed.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for unusable input.
pub const EXIT_ERROR: i32 = 2;

/// Runs the command line `args` (program name first) against `stdin`.
///
/// Returns `(exit code, stdout, stderr)`. With `--out`, the output is
/// written to that file and stdout is empty.
pub fn run<S: AsRef<str>>(args: &[S], stdin: &mut dyn Read) -> (i32, String, String) {
    let cli = match Cli::try_parse_from(args.iter().map(|a| a.as_ref())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() { (code, String::new(), text) } else { (code, text, String::new()) };
        }
    };
    let out = match commands::dispatch(&cli, stdin) {
        Ok(o) => o,
        Err(e) => return (EXIT_ERROR, String::new(), format!("error: {e}\n")),
    };
    let text = out.render(cli.machine);
    let code = if out.ok() { EXIT_OK } else { EXIT_FAILED };
    match &cli.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => (code, String::new(), String::new()),
            Err(e) => (EXIT_ERROR, String::new(), format!("error: {}\n", CliError::Io(format!("{}: {e}", path.display())))),
        },
        None => (code, text, String::new()),
    }
}

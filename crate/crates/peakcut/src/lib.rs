//! Command-line front end and HTTP curation service.

pub mod cli;
pub mod inputs;
pub mod service;

use clap::Parser;

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli::run(parsed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("peakcut: {e}");
            e.exit_code()
        }
    }
}

//! Command-line front end for `finfree-core` and the acceptance suite.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::Context;
use crate::error::{CliError, CliResult};

/// Thread count from `--threads`, else `FINFREE_THREADS`.
fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return match n {
            0 => Err(CliError::input("--threads", "must be at least 1")),
            n => Ok(Some(n)),
        };
    }
    match std::env::var("FINFREE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(
                "FINFREE_THREADS",
                format!("'{v}' is not a positive integer"),
            )),
        },
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(n) = thread_count(cli.threads)? {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let ctx = Context {
        seed: cli.seed,
        format: cli.format,
    };
    match &cli.command {
        Command::Convolve(a) => commands::write(&a.out, &commands::convolve(&ctx, a)?),
        Command::Project(a) => commands::write(&a.out, &commands::project(&ctx, a)?),
        Command::Corners(a) => commands::write(&a.out, &commands::corners(&ctx, a)?),
        Command::Crystallize(a) => commands::write(&a.out, &commands::crystallize(&ctx, a)?),
        Command::Dgff(a) => commands::write(&a.out, &commands::dgff(&ctx, a)?),
        Command::Verify(a) => {
            let (bytes, failures) = commands::verify(&ctx, a)?;
            commands::write(&a.out, &bytes)?;
            match failures {
                0 => Ok(()),
                n => Err(CliError::Verify(n)),
            }
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

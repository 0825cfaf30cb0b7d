//! File formats, reports and the `infogeo` command line on top of
//! `infogeo-core`.
//!
//! Exit status: 0 on success, 1 when the mathematics rejects a well-formed
//! request (infeasible target, biased estimator, solver failure), 2 for
//! unreadable or malformed input and usage errors.

pub mod cli;
pub mod commands;
pub mod error;
pub mod model;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::Parser;

pub use cli::{Cli, Command};
pub use commands::{execute, Output, Report};
pub use error::{CliError, CliResult, EXIT_DOMAIN, EXIT_INPUT, EXIT_OK};

/// Parses `args` (program name first), runs the command and writes the
/// report. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            // --help and --version are not errors
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_INPUT
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = execute(&cli.command).and_then(|report| {
        for w in &report.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
        emit(&cli.command, &report.output, stdout)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn destinations(command: &Command) -> (Option<&Path>, Option<&Path>) {
    use Command::*;
    match command {
        FitClassical(a) => (a.out.output.as_deref(), None),
        FitQuantum(a) => (a.out.output.as_deref(), None),
        CramerRao(a) => (a.out.output.as_deref(), None),
        QuantumCramerRao(a) => (a.out.output.as_deref(), None),
        Transport(a) => (a.out.output.as_deref(), None),
        AuditMonotonicity(a) => (a.out.output.as_deref(), None),
        KuboExpand(a) => (a.out.output.as_deref(), None),
        EntropyBound(a) => (a.out.output.as_deref(), None),
        Sample(a) => (a.out.output.as_deref(), None),
        Geodesic(a) => (a.out.output.as_deref(), a.out.summary.as_deref()),
        ProjectSimulate(a) => (a.out.output.as_deref(), a.out.summary.as_deref()),
    }
}

fn with_destination(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> CliResult<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn emit(command: &Command, output: &Output, stdout: &mut dyn Write) -> CliResult<()> {
    let (primary, summary_path) = destinations(command);
    match output {
        Output::Json(v) => with_destination(primary, stdout, |w| Ok(report::write_json(v, w)?)),
        Output::Csv { table, summary } => {
            with_destination(primary, stdout, |w| Ok(table.write_csv(w)?))?;
            match summary_path {
                Some(p) => with_destination(Some(p), stdout, |w| Ok(report::write_json(summary, w)?)),
                None => Ok(()),
            }
        }
    }
}

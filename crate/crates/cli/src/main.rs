//! `omplab`: dictionaries, pursuit, guarantee reports and recovery experiments.
//!
//! Exit codes: 0 success, 2 domain or precondition failure, 64 usage.

mod commands;
mod config;

use std::fmt;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Domain(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<omplab::Error> for CliError {
    fn from(e: omplab::Error) -> Self {
        let msg = match &e {
            omplab::Error::MipViolated { .. } => {
                format!("{e} (mutual incoherence condition: mu < 1/(2m-1))")
            }
            _ => e.to_string(),
        };
        CliError::Domain(msg)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("OMPLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("OMPLAB_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn run(args: Vec<String>) -> Result<bool, CliError> {
    let matches = match config::cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(true);
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = config::find(name).expect("clap only accepts known subcommands");
    let cfg = RunConfig::resolve(command, sub)?;

    let workers = threads()?;
    if let Some(t) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Domain(format!("cannot start {t} worker threads: {e}")))?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    out.write_all(cfg.render().as_bytes())?;
    writeln!(out, "# threads = {}", rayon::current_num_threads())?;

    let ok = match command.name {
        "analyze" => commands::analyze(&cfg, &mut out).map(|_| true),
        "build-dict" => commands::build_dict(&cfg, &mut out).map(|_| true),
        "solve" => commands::solve(&cfg, &mut out).map(|_| true),
        "curve" => commands::curve(&cfg, &mut out).map(|_| true),
        "region" => commands::region(&cfg, &mut out).map(|_| true),
        "validate" => commands::validate(&cfg, &mut out),
        _ => unreachable!("command table and dispatch disagree"),
    }?;
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("omplab: one or more suites failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("omplab: {}", e.to_string().trim_end());
            ExitCode::from(e.code())
        }
    }
}

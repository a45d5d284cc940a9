//! Command-line front end: `run`, `exact`, `simulate`, `sweep` and
//! `validate`.
//!
//! Data goes to standard output (or `--out`), diagnostics to standard
//! error. Exit status is 0 on success, 1 for I/O failures or a target that
//! fails `validate`, and 2 for usage errors.

pub mod args;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

use rsp_core::analysis::{self, closed_form_success, exact_branch_report, AnalysisError, SweepSampling};
use rsp_core::protocol::{run_protocol, ProtocolError, RunOptions, TargetState};

pub use args::{parse_args, Format, Mode, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing report: {0}")]
    Stdout(#[source] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// A rendered report and whether the run counts as successful.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub body: String,
    pub ok: bool,
}

fn target(cfg: &RunConfig) -> &TargetState {
    cfg.target
        .as_ref()
        .expect("parse_args guarantees a target for this mode")
}

/// Computes the report for `cfg` without writing it anywhere.
pub fn render(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let ch = &cfg.channel;
    let body = match cfg.mode {
        Mode::Run => {
            let options = RunOptions {
                alice: cfg.forced_outcome,
                aux: cfg.forced_aux,
            };
            let mut rng = analysis::trial_rng(cfg.seed, 0);
            let result = run_protocol(target(cfg), ch, options, &mut rng)?;
            report::protocol_result(cfg, &result)?
        }
        Mode::Exact => {
            let rep = exact_branch_report(target(cfg), ch)?;
            report::branch_report(cfg, &rep, closed_form_success(ch))?
        }
        Mode::Simulate => {
            let trials = cfg.trials.unwrap_or(args::DEFAULT_TRIALS);
            let summary = analysis::monte_carlo(target(cfg), ch, trials, cfg.seed)?;
            report::monte_carlo(cfg, &summary, closed_form_success(ch))?
        }
        Mode::Sweep => {
            let sampling = match (cfg.trials, cfg.target.as_ref()) {
                (Some(trials), Some(target)) => Some(SweepSampling {
                    target,
                    trials,
                    seed: cfg.seed,
                }),
                _ => None,
            };
            let rows = analysis::sweep(cfg.step, sampling)?;
            report::sweep(cfg, &rows)?
        }
        Mode::Validate => {
            let raw = cfg.raw_target.expect("parse_args guarantees a target");
            let checks = TargetState::check_constraints(raw);
            let ok = TargetState::validate(raw).is_ok();
            return Ok(Rendered {
                body: report::validation(cfg, &checks)?,
                ok,
            });
        }
    };
    Ok(Rendered { body, ok: true })
}

/// Renders the report and writes it to `--out` or standard output.
/// Returns whether the run counts as successful.
pub fn execute(cfg: &RunConfig) -> Result<bool, CliError> {
    let rendered = render(cfg)?;
    match &cfg.output_path {
        Some(path) => std::fs::write(path, &rendered.body).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(rendered.body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(CliError::Stdout)?;
        }
    }
    Ok(rendered.ok)
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_args(argv).and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("rsp: target violates at least one constraint");
            ExitCode::from(1)
        }
        Err(e @ CliError::Clap(_)) => {
            let code = e.exit_code();
            if let CliError::Clap(inner) = e {
                let _ = inner.print();
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("rsp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

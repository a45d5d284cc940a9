//! JSON and CSV renderers.
//!
//! JSON reports are objects `{"mode", "inputs", "results"}` with keys in
//! sorted order and floats in shortest round-trip form, so parsing and
//! re-serializing a report reproduces it byte for byte. Complex numbers are
//! `[re, im]` pairs.

use serde_json::{json, Value};

use rsp_core::analysis::{BranchReport, MonteCarloSummary, SweepRow};
use rsp_core::protocol::{AliceOutcome, ConstraintCheck, ProtocolResult};
use rsp_core::{Amplitude, StateVector};

use crate::args::{Format, RunConfig};
use crate::CliError;

fn complex(a: Amplitude) -> Value {
    json!([a.re, a.im])
}

fn state(s: &StateVector) -> Value {
    Value::Array(s.amps().iter().copied().map(complex).collect())
}

fn inputs(cfg: &RunConfig) -> Value {
    let ch = &cfg.channel;
    json!({
        "target": cfg.raw_target.map(|t| t.iter().copied().map(complex).collect::<Vec<_>>()),
        "channel": { "a": ch.a(), "b": ch.b(), "c": ch.c(), "d": ch.d() },
        "trials": cfg.trials,
        "seed": cfg.seed,
        "forced_outcome": cfg.forced_outcome.map(|o| o.label()),
        "forced_aux": cfg.forced_aux.map(|a| a.bit()),
        "step": cfg.step,
    })
}

fn envelope(cfg: &RunConfig, results: Value) -> Value {
    json!({ "mode": cfg.mode.name(), "inputs": inputs(cfg), "results": results })
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("Value always serializes");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv of ascii fields"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Shortest round-trip text, switching to exponent form for tiny or huge values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn protocol_result(cfg: &RunConfig, r: &ProtocolResult) -> Result<String, CliError> {
    match cfg.format {
        Format::Json => Ok(to_json_text(&envelope(
            cfg,
            json!({
                "alice_outcome": r.alice_outcome.label(),
                "message_bits": r.alice_outcome.bits(),
                "alice_probability": r.alice_probability,
                "corrected": r.corrected,
                "aux_outcome": r.aux_outcome.map(|a| a.bit()),
                "aux_probability": r.aux_probability,
                "joint_probability": r.joint_probability(),
                "final_bob_state": state(&r.final_bob_state),
                "fidelity_to_target": r.fidelity_to_target,
                "success": r.success,
            }),
        ))),
        Format::Csv => {
            let mut header = vec![
                "alice_outcome",
                "alice_probability",
                "corrected",
                "aux_outcome",
                "aux_probability",
                "fidelity_to_target",
                "success",
            ];
            header.extend([
                "bob_00_re", "bob_00_im", "bob_01_re", "bob_01_im", "bob_10_re", "bob_10_im",
                "bob_11_re", "bob_11_im",
            ]);
            let mut row = vec![
                r.alice_outcome.label().to_string(),
                num(r.alice_probability),
                r.corrected.to_string(),
                opt(r.aux_outcome.map(|a| a.bit())),
                opt_num(r.aux_probability),
                num(r.fidelity_to_target),
                r.success.to_string(),
            ];
            for a in r.final_bob_state.amps() {
                row.push(num(a.re));
                row.push(num(a.im));
            }
            csv_text(&header, vec![row])
        }
    }
}

pub fn branch_report(cfg: &RunConfig, rep: &BranchReport, closed_form: f64) -> Result<String, CliError> {
    match cfg.format {
        Format::Json => {
            let branches: Vec<Value> = AliceOutcome::ALL
                .iter()
                .map(|&o| {
                    json!({
                        "outcome": o.label(),
                        "probability": rep.probability(o),
                        "success": rep.success_of(o),
                        "correctable": o.is_correctable(),
                    })
                })
                .collect();
            Ok(to_json_text(&envelope(
                cfg,
                json!({
                    "branches": branches,
                    "total_success": rep.total_success,
                    "closed_form": closed_form,
                }),
            )))
        }
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = AliceOutcome::ALL
                .iter()
                .map(|&o| {
                    vec![
                        o.label().to_string(),
                        num(rep.probability(o)),
                        num(rep.success_of(o)),
                    ]
                })
                .collect();
            rows.push(vec![
                "total".into(),
                num(rep.probabilities.iter().sum::<f64>()),
                num(rep.total_success),
            ]);
            csv_text(&["outcome", "probability", "success"], rows)
        }
    }
}

pub fn monte_carlo(cfg: &RunConfig, s: &MonteCarloSummary, closed_form: f64) -> Result<String, CliError> {
    match cfg.format {
        Format::Json => Ok(to_json_text(&envelope(
            cfg,
            json!({
                "trials": s.trials,
                "successes": s.successes,
                "estimated_rate": s.estimated_rate,
                "standard_error": s.standard_error,
                "seed": s.seed,
                "closed_form": closed_form,
            }),
        ))),
        Format::Csv => csv_text(
            &["trials", "successes", "estimated_rate", "standard_error", "seed", "closed_form"],
            vec![vec![
                s.trials.to_string(),
                s.successes.to_string(),
                num(s.estimated_rate),
                num(s.standard_error),
                s.seed.to_string(),
                num(closed_form),
            ]],
        ),
    }
}

pub fn sweep(cfg: &RunConfig, rows: &[SweepRow]) -> Result<String, CliError> {
    let trials = cfg.trials.unwrap_or(0);
    match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "a": r.a,
                        "c": r.c,
                        "closed_form": r.closed_form,
                        "mc_rate": r.monte_carlo.as_ref().map(|m| m.estimated_rate),
                        "mc_stderr": r.monte_carlo.as_ref().map(|m| m.standard_error),
                        "trials": trials,
                        "seed": r.monte_carlo.as_ref().map_or(cfg.seed, |m| m.seed),
                    })
                })
                .collect();
            Ok(to_json_text(&envelope(cfg, json!({ "rows": rows }))))
        }
        Format::Csv => csv_text(
            &["a", "c", "closed_form", "mc_rate", "mc_stderr", "trials", "seed"],
            rows.iter()
                .map(|r| {
                    let mc = r.monte_carlo.as_ref();
                    vec![
                        num(r.a),
                        num(r.c),
                        num(r.closed_form),
                        opt_num(mc.map(|m| m.estimated_rate)),
                        opt_num(mc.map(|m| m.standard_error)),
                        trials.to_string(),
                        mc.map_or(cfg.seed, |m| m.seed).to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

pub fn validation(cfg: &RunConfig, checks: &[ConstraintCheck]) -> Result<String, CliError> {
    let valid = checks.iter().all(|c| c.satisfied);
    match cfg.format {
        Format::Json => {
            let list: Vec<Value> = checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "deviation": c.deviation,
                        "tolerance": c.tolerance,
                        "satisfied": c.satisfied,
                    })
                })
                .collect();
            Ok(to_json_text(&envelope(cfg, json!({ "constraints": list, "valid": valid }))))
        }
        Format::Csv => csv_text(
            &["constraint", "deviation", "tolerance", "satisfied"],
            checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.to_string(),
                        num(c.deviation),
                        num(c.tolerance),
                        c.satisfied.to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

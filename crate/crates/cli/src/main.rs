//! `ctxlab`: contextuality checks, optimisations and threshold searches from
//! the command line.
//!
//! Exit codes: 0 holds/feasible/success, 1 fails/infeasible, 2 usage, parse
//! or resource error, 3 heuristic-only or nonmonotone result.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ctxlab::ce::{ce_optimize, consistent_optimize, nc_check, nc_optimize, threshold_search, CeChecker, Family};
use ctxlab::format::{resolve_functional, resolve_probability, resolve_scenario, write_probability};
use ctxlab::lp::{FarkasCertificate, LinearProgram};
use ctxlab::probability::{JointDistribution, ProbabilityFunction};
use ctxlab::qm::{qm_feasible, qm_optimize, PairMeasure, QmMethod, QmRow, QmStatus};
use ctxlab::report::{bounds_report, exact_text, ReportOptions};
use ctxlab::scenario::{exclusivity_graph, ExclusivityMode, Scenario};
use ctxlab::{Error, Limits, Rational};

#[derive(Parser)]
#[command(name = "ctxlab", version, about = "Non-contextual, joint-measure and Consistent Exclusivity sets of probability tables")]
struct Cli {
    /// Print a JSON report (sorted keys, no timings) instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Size caps as key=value pairs, e.g. `cliques=1000,qm_enumerate=16`.
    /// Overrides CTXLAB_LIMITS.
    #[arg(long, global = true)]
    limits: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Element count, measurements and exclusivity graph sizes.
    ScenarioInfo {
        /// Scenario file or preset: chsh, specker, pentagon, gyni3, cycle(n), bell(p,i,o).
        scenario: String,
    },
    /// Decide CE, non-contextuality, or existence of a joint measure.
    Check {
        kind: CheckKind,
        scenario: String,
        /// Probability file or box preset: pr, isotropic(v), uniform,
        /// deterministic(bits), uniform_cycle(p).
        prob: String,
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(long, value_enum, default_value_t = Exclusivity::Coarse)]
        exclusivity: Exclusivity,
        #[arg(long, value_enum, default_value_t = Method::Enumerate)]
        method: Method,
        /// Write the witness or certificate to this file as JSON.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Maximise an objective over one of the sets.
    Optimize {
        #[arg(long, value_enum)]
        set: Set,
        /// Functional file or preset: chsh, kcbs, gyni.
        #[arg(long)]
        objective: String,
        scenario: String,
        #[arg(long, value_enum, default_value_t = Exclusivity::Coarse)]
        exclusivity: Exclusivity,
        /// Write the optimal table to this file in the probability format.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Largest family parameter at which k-copy CE holds.
    Threshold {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Exclusivity::Coarse)]
        exclusivity: Exclusivity,
        scenario: String,
    },
    /// Recompute every headline bound and print a pass/fail matrix.
    BoundsReport {
        /// Random measure vertices per scenario.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Ce,
    Nc,
    Qm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Exclusivity {
    Strict,
    Coarse,
}

impl From<Exclusivity> for ExclusivityMode {
    fn from(e: Exclusivity) -> Self {
        match e {
            Exclusivity::Strict => ExclusivityMode::Strict,
            Exclusivity::Coarse => ExclusivityMode::Coarse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Enumerate,
    Rowgen,
}

#[derive(Clone, Copy, ValueEnum)]
enum Set {
    Nc,
    Ce1,
    Qm,
    Consistent,
}

impl Set {
    fn name(self) -> &'static str {
        match self {
            Set::Nc => "nc",
            Set::Ce1 => "ce1",
            Set::Qm => "qm",
            Set::Consistent => "consistent",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Isotropic,
    UniformCycle,
}

/// A finished command: exit code, text lines, and the JSON pieces.
struct Outcome {
    code: u8,
    lines: Vec<String>,
    scenario: Option<Value>,
    flags: Value,
    result: Value,
}

fn exact(v: &Rational) -> Value {
    json!({ "exact": v.to_string(), "decimal": v.to_f64() })
}

fn scenario_summary(s: &Scenario) -> Value {
    json!({ "name": s.name(), "elements": s.element_count(), "measurements": s.measurements().len() })
}

fn scenario_line(s: &Scenario) -> String {
    format!("scenario {}: {} elements, {} measurements", s.name(), s.element_count(), s.measurements().len())
}

fn write_file(path: &Path, text: &str) -> ctxlab::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, v: &Value) -> ctxlab::Result<()> {
    write_file(path, &(render_json(v) + "\n"))
}

fn render_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialise")
}

/// Nonzero multipliers of a certificate, each with what its row says.
fn certificate_json(cert: &FarkasCertificate, lp: &LinearProgram, describe: impl Fn(usize) -> String) -> Value {
    let ne = cert.equalities.len();
    let rows: Vec<Value> = cert
        .equalities
        .iter()
        .chain(&cert.inequalities)
        .enumerate()
        .filter(|(_, y)| !y.is_zero())
        .map(|(k, y)| {
            json!({
                "row": k,
                "kind": if k < ne { "equality" } else { "inequality" },
                "meaning": describe(k),
                "multiplier": y.to_string(),
            })
        })
        .collect();
    let bounds: Vec<Value> = cert
        .bounds
        .iter()
        .enumerate()
        .filter(|(_, z)| !z.is_zero())
        .map(|(j, z)| json!({ "variable": j, "multiplier": z.to_string() }))
        .collect();
    json!({ "rows": rows, "bounds": bounds, "value": cert.value(lp).to_string() })
}

fn measure_json(pm: &PairMeasure) -> Value {
    json!({
        "singletons": pm.sing().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "pairs": pm.pairs().iter().map(ToString::to_string).collect::<Vec<_>>(),
    })
}

fn joint_json(s: &Scenario, j: &JointDistribution) -> Value {
    let support: Vec<Value> = j
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(x, w)| json!({ "element": element_name(s, x), "weight": w.to_string() }))
        .collect();
    Value::Array(support)
}

fn element_name(s: &Scenario, x: usize) -> String {
    s.element_labels().map_or_else(|| x.to_string(), |l| l[x].clone())
}

fn table_json(p: &ProbabilityFunction) -> Value {
    let s = p.scenario();
    let entries: Vec<Value> = (0..s.outcomes().len())
        .map(|id| json!({ "outcome": s.outcome_label(id), "value": p.value(id).to_string() }))
        .collect();
    Value::Array(entries)
}

fn scenario_info(arg: &str) -> ctxlab::Result<Outcome> {
    let s = resolve_scenario(arg)?;
    let mut lines = vec![scenario_line(&s)];
    let measurements: Vec<Value> = (0..s.measurements().len())
        .map(|m| {
            let cells: Vec<String> = s.cell_ids(m).iter().map(|&id| s.outcome_label(id)).collect();
            lines.push(format!("  M{}: {} cells", m + 1, cells.len()));
            json!({ "index": m + 1, "cells": cells })
        })
        .collect();
    let mut graphs = serde_json::Map::new();
    for mode in [ExclusivityMode::Strict, ExclusivityMode::Coarse] {
        let g = exclusivity_graph(&s, mode);
        lines.push(format!("exclusivity graph ({mode}): {} vertices, {} edges", g.vertex_count(), g.edge_count()));
        graphs.insert(mode.to_string(), json!({ "vertices": g.vertex_count(), "edges": g.edge_count() }));
    }
    Ok(Outcome {
        code: 0,
        lines,
        scenario: Some(scenario_summary(&s)),
        flags: json!({}),
        result: json!({
            "status": "ok",
            "fine_outcomes": s.outcomes().len(),
            "measurements": measurements,
            "exclusivity_graph": graphs,
        }),
    })
}

struct CheckArgs<'a> {
    kind: CheckKind,
    scenario: &'a str,
    prob: &'a str,
    copies: usize,
    mode: ExclusivityMode,
    method: Method,
    witness: Option<&'a Path>,
}

fn check(a: CheckArgs<'_>, limits: &Limits) -> ctxlab::Result<Outcome> {
    let s = Arc::new(resolve_scenario(a.scenario)?);
    let p = resolve_probability(a.prob, s.clone())?;
    p.ensure_valid()?;
    let mut lines = vec![scenario_line(&s), format!("table: {}", p.name())];
    let (code, status, detail, mut flags) = match a.kind {
        CheckKind::Ce => {
            let r = CeChecker::new(s.clone(), a.copies, a.mode, limits)?.check(&p)?;
            let status = if r.holds { "holds" } else { "fails" };
            lines.push(format!("CE with {} cop{} ({}): {status}", a.copies, if a.copies == 1 { "y" } else { "ies" }, a.mode));
            lines.push(format!("largest clique sum: {}", exact_text(&r.worst_sum)));
            lines.push(format!("clique: {}", r.worst_labels.join("  ")));
            let detail = json!({
                "worst_clique": r.worst_labels,
                "worst_sum": exact(&r.worst_sum),
                "clique_method": r.method,
                "clique_count": r.clique_count,
            });
            let flags = json!({ "copies": a.copies, "exclusivity": a.mode.to_string() });
            (u8::from(!r.holds), status, detail, flags)
        }
        CheckKind::Nc => {
            let r = nc_check(&p, limits)?;
            let status = if r.feasible { "feasible" } else { "infeasible" };
            lines.push(format!("non-contextual: {}", if r.feasible { "yes" } else { "no" }));
            let detail = match (&r.joint, &r.certificate) {
                (Some(j), _) => {
                    for (x, w) in j.weights.iter().enumerate().filter(|(_, w)| !w.is_zero()) {
                        lines.push(format!("  P({}) = {}", element_name(&s, x), exact_text(w)));
                    }
                    json!({ "joint_distribution": joint_json(&s, j) })
                }
                (None, Some(cert)) => {
                    let c = certificate_json(cert, &r.program, |k| match k {
                        0 => "sum of all weights = 1".to_string(),
                        _ => format!("weights of {} = P", s.outcome_label(k - 1)),
                    });
                    push_certificate_lines(&mut lines, &c);
                    json!({ "certificate": c })
                }
                _ => Value::Null,
            };
            (u8::from(!r.feasible), status, detail, json!({}))
        }
        CheckKind::Qm => {
            let method = match a.method {
                Method::Enumerate => QmMethod::Enumerate,
                Method::Rowgen => QmMethod::Rowgen,
            };
            let r = qm_feasible(&p, method, limits)?;
            let (code, status) = match r.status {
                QmStatus::Feasible => (0, "feasible"),
                QmStatus::Infeasible => (1, "infeasible"),
                QmStatus::HeuristicallyFeasible => (3, "heuristically_feasible"),
            };
            lines.push(format!("joint measure: {status} ({} separation, {} rounds)", r.regime, r.rounds));
            let mut detail = match (&r.witness, &r.certificate) {
                (Some(pm), _) => json!({ "measure": measure_json(pm) }),
                (None, Some(cert)) => {
                    let c = certificate_json(cert, &r.program, |k| qm_row_text(&s, &r.rows[k]));
                    push_certificate_lines(&mut lines, &c);
                    json!({ "certificate": c })
                }
                _ => json!({}),
            };
            if let Some(note) = &r.unverified_note {
                lines.push(format!("note: {note}"));
                detail["unverified_note"] = json!(note);
            }
            detail["rounds"] = json!(r.rounds);
            detail["separation"] = json!(r.regime.to_string());
            let m = match a.method {
                Method::Enumerate => "enumerate",
                Method::Rowgen => "rowgen",
            };
            (code, status, detail, json!({ "method": m }))
        }
    };
    if let Some(path) = a.witness {
        write_json(path, &detail)?;
        lines.push(format!("witness written to {}", path.display()));
        flags["witness"] = json!(path.display().to_string());
    }
    let kind = match a.kind {
        CheckKind::Ce => "ce",
        CheckKind::Nc => "nc",
        CheckKind::Qm => "qm",
    };
    flags["kind"] = json!(kind);
    flags["table"] = json!(p.name());
    Ok(Outcome {
        code,
        lines,
        scenario: Some(scenario_summary(&s)),
        flags,
        result: json!({ "status": status, "detail": detail }),
    })
}

fn push_certificate_lines(lines: &mut Vec<String>, c: &Value) {
    let rows = c["rows"].as_array().map_or(&[][..], Vec::as_slice);
    lines.push(format!("Farkas certificate: {} rows, combined right-hand side {}", rows.len(), c["value"].as_str().unwrap_or("")));
    for r in rows {
        lines.push(format!("  {} x [{}]", r["multiplier"].as_str().unwrap_or(""), r["meaning"].as_str().unwrap_or("")));
    }
}

fn qm_row_text(s: &Scenario, row: &QmRow) -> String {
    match row {
        QmRow::Value { outcome } => format!("mu({}) = P", s.describe(outcome)),
        QmRow::Normalization => "mu(all) = 1".into(),
        QmRow::Interference { measurement, cells } => format!(
            "no interference between cells {} and {} of M{}",
            cells.0 + 1,
            cells.1 + 1,
            measurement + 1
        ),
        QmRow::Nonnegative { subset } => format!("mu({}) >= 0", s.describe(subset)),
    }
}

fn optimize(set: Set, objective: &str, scen: &str, mode: ExclusivityMode, witness: Option<&Path>, limits: &Limits) -> ctxlab::Result<Outcome> {
    let s = Arc::new(resolve_scenario(scen)?);
    let f = resolve_functional(objective, &s)?;
    let mut lines = vec![scenario_line(&s)];
    let mut detail = serde_json::Map::new();
    let (value, table) = match set {
        Set::Nc => {
            let o = nc_optimize(s.clone(), &f, limits)?;
            if let Some(j) = &o.joint {
                detail.insert("joint_distribution".into(), joint_json(&s, j));
            }
            (o.value, o.table)
        }
        Set::Consistent => {
            let o = consistent_optimize(s.clone(), &f)?;
            (o.value, o.table)
        }
        Set::Ce1 => {
            let o = ce_optimize(s.clone(), &f, mode, limits)?;
            detail.insert("clique_cuts".into(), json!(o.cuts));
            (o.value, o.table)
        }
        Set::Qm => {
            let o = qm_optimize(s.clone(), &f, limits)?;
            detail.insert("measure".into(), measure_json(&o.measure));
            detail.insert("rounds".into(), json!(o.rounds));
            detail.insert("cuts".into(), json!(o.cuts));
            (o.value, o.table)
        }
    };
    lines.push(format!("max {} over {}: {}", f.name, set.name(), exact_text(&value)));
    detail.insert("table".into(), table_json(&table));
    let mut flags = json!({ "set": set.name(), "objective": f.name });
    if matches!(set, Set::Ce1) {
        flags["exclusivity"] = json!(mode.to_string());
    }
    if let Some(path) = witness {
        write_file(path, &write_probability(&table))?;
        lines.push(format!("optimal table written to {}", path.display()));
        flags["witness"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        code: 0,
        lines,
        scenario: Some(scenario_summary(&s)),
        flags,
        result: json!({ "status": "optimal", "value": exact(&value), "detail": detail }),
    })
}

fn threshold(family: FamilyArg, copies: usize, tol: f64, mode: ExclusivityMode, scen: &str, limits: &Limits) -> ctxlab::Result<Outcome> {
    let s = Arc::new(resolve_scenario(scen)?);
    let family = match family {
        FamilyArg::Isotropic => Family::Isotropic,
        FamilyArg::UniformCycle => Family::UniformCycle,
    };
    let r = threshold_search(s.clone(), family, copies, mode, tol, limits)?;
    let mut lines = vec![scenario_line(&s)];
    if r.saturated {
        lines.push(format!("CE with {copies} cop{} holds on the whole {family} range", if copies == 1 { "y" } else { "ies" }));
    } else {
        lines.push(format!("{family} threshold: {} (bracket [{}, {}])", r.parameter, r.lower, r.upper));
    }
    lines.push(format!("{} at threshold: {}", r.functional, r.value));
    lines.push(format!("{} CE evaluations", r.evaluations));
    let result = serde_json::to_value(&r).expect("report serialises");
    Ok(Outcome {
        code: 0,
        lines,
        scenario: Some(scenario_summary(&s)),
        flags: json!({ "family": family.to_string(), "copies": copies, "tol": tol, "exclusivity": mode.to_string() }),
        result: json!({ "status": if r.saturated { "saturated" } else { "bracketed" }, "threshold": result }),
    })
}

fn report(samples: usize, limits: &Limits) -> ctxlab::Result<Outcome> {
    let opts = ReportOptions { samples, ..ReportOptions::default() };
    let r = bounds_report(&opts, limits)?;
    let lines = vec![r.render(true).trim_end().to_string()];
    Ok(Outcome {
        code: u8::from(!r.passed),
        lines,
        scenario: None,
        flags: json!({ "samples": samples }),
        result: json!({
            "status": if r.passed { "pass" } else { "fail" },
            "rows": serde_json::to_value(&r.rows).expect("report serialises"),
        }),
    })
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::NonMonotone(_) => 3,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) | Error::ParseAt { .. } => "parse",
        Error::InvalidScenario(_) => "invalid_scenario",
        Error::InvalidProbability(_) => "invalid_probability",
        Error::Incompatible(_) => "incompatible",
        Error::OutOfRange(_) => "out_of_range",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::Resource(_) => "resource",
        Error::NonMonotone(_) => "nonmonotone",
        Error::Verification(_) => "verification",
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::ScenarioInfo { .. } => "scenario-info",
        Command::Check { .. } => "check",
        Command::Optimize { .. } => "optimize",
        Command::Threshold { .. } => "threshold",
        Command::BoundsReport { .. } => "bounds-report",
    }
}

fn run(cli: &Cli) -> ctxlab::Result<Outcome> {
    let limits = match &cli.limits {
        Some(l) => Limits::parse(l)?,
        None => Limits::from_env()?,
    };
    match &cli.command {
        Command::ScenarioInfo { scenario } => scenario_info(scenario),
        Command::Check { kind, scenario, prob, copies, exclusivity, method, witness } => check(
            CheckArgs {
                kind: *kind,
                scenario,
                prob,
                copies: *copies,
                mode: (*exclusivity).into(),
                method: *method,
                witness: witness.as_deref(),
            },
            &limits,
        ),
        Command::Optimize { set, objective, scenario, exclusivity, witness } => {
            optimize(*set, objective, scenario, (*exclusivity).into(), witness.as_deref(), &limits)
        }
        Command::Threshold { family, copies, tol, exclusivity, scenario } => {
            threshold(*family, *copies, *tol, (*exclusivity).into(), scenario, &limits)
        }
        Command::BoundsReport { samples } => report(*samples, &limits),
    }
}

/// Writes one block to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let start = Instant::now();
    let outcome = run(&cli);
    let elapsed = start.elapsed();
    match outcome {
        Ok(o) => {
            if cli.json {
                let mut report = json!({
                    "command": command_name(&cli.command),
                    "args": args,
                    "flags": o.flags,
                    "result": o.result,
                    "exit_code": o.code,
                });
                if let Some(s) = o.scenario {
                    report["scenario"] = s;
                }
                emit(&render_json(&report));
            } else {
                let mut lines = o.lines;
                lines.push(format!("time: {elapsed:.2?}"));
                emit(&lines.join("\n"));
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            let code = error_code(&e);
            if cli.json {
                let report = json!({
                    "command": command_name(&cli.command),
                    "args": args,
                    "error": { "kind": error_kind(&e), "message": e.to_string() },
                    "exit_code": code,
                });
                emit(&render_json(&report));
            }
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

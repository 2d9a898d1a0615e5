//! Command orchestration: configuration loading, runs, sweeps, exponent
//! queries and audit replays, with their artifact sets and exit statuses.
//!
//! Commands return a rendered [`CommandOutcome`] instead of printing, so
//! the binary and the tests can route the streams themselves. Estimate
//! verdicts are data and never turn into failing statuses; only hard
//! errors (bad configuration, I/O, solver aborts, failed sweep
//! constituents) do.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde_json::{Map, Value};

use crate::audit::{full_report, uniformity_study_full, AuditReport, SweepAxis, UniformityReport};
use crate::config::{document_to_config, load_document, ParsedConfig};
use crate::domain::Basis;
use crate::error::{AuditError, ConfigError};
use crate::io::{
    audit_report_value, json_f64, trajectory_container, uniformity_report_value, write_audit_csv,
    write_audit_json, write_diagnostics_csv, write_uniformity_json, FieldContainer,
};
use crate::model::exponents::{
    check_admissibility, derive_exponents, parse_rational, DerivedExponents, ExponentInputs,
};
use crate::solver::{run, RkStats, Sample, Trajectory};

/// Process exit codes of the command layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    ConfigFailure,
    IoFailure,
    PartialSweep,
    SolverAbort,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ConfigFailure => 1,
            ExitStatus::IoFailure => 2,
            ExitStatus::PartialSweep => 3,
            ExitStatus::SolverAbort => 4,
        }
    }
}

/// Rendered result of one command: exit status, standard-output text, and
/// messages destined for the error stream (failures and warnings).
#[derive(Debug)]
pub struct CommandOutcome {
    pub status: ExitStatus,
    pub stdout: String,
    pub errors: Vec<String>,
}

impl CommandOutcome {
    fn fail(status: ExitStatus, msg: impl Into<String>) -> Self {
        CommandOutcome {
            status,
            stdout: String::new(),
            errors: vec![msg.into()],
        }
    }
}

fn config_fail(e: ConfigError) -> CommandOutcome {
    CommandOutcome::fail(ExitStatus::ConfigFailure, e.to_string())
}

fn io_fail(e: impl std::fmt::Display) -> CommandOutcome {
    CommandOutcome::fail(ExitStatus::IoFailure, e.to_string())
}

fn load(config_path: &Path, force_override: bool) -> Result<ParsedConfig, Box<CommandOutcome>> {
    let mut doc = load_document(config_path).map_err(|e| Box::new(config_fail(e)))?;
    if force_override {
        doc.model.override_admissibility = true;
    }
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    document_to_config(&doc, base).map_err(|e| Box::new(config_fail(e)))
}

fn ensure_dir(out_dir: &Path) -> Result<(), CommandOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| {
        CommandOutcome::fail(
            ExitStatus::IoFailure,
            format!("cannot create {}: {e}", out_dir.display()),
        )
    })
}

fn stats_value(stats: &RkStats) -> Value {
    let mut m = Map::new();
    m.insert("accepted".into(), Value::Number(stats.accepted.into()));
    m.insert("rejected".into(), Value::Number(stats.rejected.into()));
    m.insert("rhs_evals".into(), Value::Number(stats.rhs_evals.into()));
    Value::Object(m)
}

fn files_value(files: &[(&str, &Path)]) -> Value {
    let mut m = Map::new();
    for (key, path) in files {
        m.insert((*key).into(), Value::String(path.display().to_string()));
    }
    Value::Object(m)
}

fn render_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("string keys only");
    text.push('\n');
    text
}

fn human_audit(report: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<44} {:>14} {:>14} {:>14}  verdict",
        "estimate", "lhs", "rhs/bound", "margin"
    );
    for r in &report.records {
        let verdict = match r.verdict {
            crate::audit::Verdict::Holds => "holds",
            crate::audit::Verdict::Violated => "VIOLATED",
            crate::audit::Verdict::Measured => "measured",
        };
        let _ = writeln!(
            out,
            "{:<44} {:>14.6e} {:>14.6e} {:>14.6e}  {}",
            r.name, r.lhs, r.rhs_or_bound, r.margin, verdict
        );
    }
    let _ = writeln!(
        out,
        "positivity events: {}   min k: {:.6e}",
        report.positivity_events, report.min_k
    );
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

/// Executes a run plus the full audit and writes the artifact set:
/// `trajectory.tkef`, `diagnostics.csv`, `audit.json`, `audit.csv`.
pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    json: bool,
    force_override: bool,
) -> CommandOutcome {
    let parsed = match load(config_path, force_override) {
        Ok(p) => p,
        Err(o) => return *o,
    };
    if let Err(o) = ensure_dir(out_dir) {
        return o;
    }
    log::info!(
        "running {} into {}",
        config_path.display(),
        out_dir.display()
    );
    let output = match run(&parsed.run) {
        Ok(o) => o,
        Err(e) => return CommandOutcome::fail(ExitStatus::SolverAbort, e.to_string()),
    };
    log::debug!(
        "integration finished: {} accepted, {} rejected, {} rhs evaluations",
        output.trajectory.stats.accepted,
        output.trajectory.stats.rejected,
        output.trajectory.stats.rhs_evals
    );
    let report = match full_report(&output.trajectory, &parsed.run, &output.basis) {
        Ok(r) => r,
        Err(e) => return CommandOutcome::fail(ExitStatus::SolverAbort, e.to_string()),
    };

    let traj_path = out_dir.join("trajectory.tkef");
    let diag_path = out_dir.join("diagnostics.csv");
    let json_path = out_dir.join("audit.json");
    let csv_path = out_dir.join("audit.csv");
    let container = trajectory_container(&output.trajectory, &output.basis);
    if let Err(e) = container.write(&traj_path) {
        return io_fail(e);
    }
    if let Err(e) = write_diagnostics_csv(&diag_path, &output.trajectory.diagnostics) {
        return io_fail(e);
    }
    if let Err(e) = write_audit_json(&json_path, &report) {
        return io_fail(e);
    }
    if let Err(e) = write_audit_csv(&csv_path, &report) {
        return io_fail(e);
    }

    let stdout = if json {
        let mut m = Map::new();
        m.insert("audit".into(), audit_report_value(&report));
        m.insert(
            "files".into(),
            files_value(&[
                ("trajectory", &traj_path),
                ("diagnostics", &diag_path),
                ("audit_json", &json_path),
                ("audit_csv", &csv_path),
            ]),
        );
        m.insert("steps".into(), stats_value(&output.trajectory.stats));
        m.insert(
            "warnings".into(),
            Value::Array(parsed.warnings.iter().cloned().map(Value::String).collect()),
        );
        render_json(&Value::Object(m))
    } else {
        let mut out = human_audit(&report);
        let s = &output.trajectory.stats;
        let _ = writeln!(
            out,
            "steps: {} accepted, {} rejected, {} rhs evaluations",
            s.accepted, s.rejected, s.rhs_evals
        );
        let _ = writeln!(out, "wrote {}", out_dir.display());
        out
    };
    CommandOutcome {
        status: ExitStatus::Success,
        stdout,
        errors: parsed.warnings.iter().map(|w| format!("warning: {w}")).collect(),
    }
}

/// Replays the audit on an existing trajectory dump.
///
/// Nodal records are projected back onto the configured mode families;
/// step diagnostics are not part of the dump, so the energy identity
/// record is skipped with a note.
pub fn cmd_audit(
    config_path: &Path,
    trajectory_path: &Path,
    out_dir: &Path,
    json: bool,
    force_override: bool,
) -> CommandOutcome {
    let parsed = match load(config_path, force_override) {
        Ok(p) => p,
        Err(o) => return *o,
    };
    if let Err(o) = ensure_dir(out_dir) {
        return o;
    }
    let container = match FieldContainer::read(trajectory_path) {
        Ok(c) => c,
        Err(e) => return io_fail(e),
    };
    let basis = match Basis::build(
        &parsed.run.spec,
        parsed.run.n_velocity,
        parsed.run.n_scalar,
    ) {
        Ok(b) => b,
        Err(e) => return CommandOutcome::fail(ExitStatus::ConfigFailure, e.to_string()),
    };
    let nodes = basis.grid.node_count();
    if let Err(e) = container.expect_layout(
        trajectory_path,
        2,
        parsed.run.spec.grid_n,
        3,
        nodes,
    ) {
        return io_fail(e);
    }
    if container.records.windows(2).any(|w| w[1].t <= w[0].t) {
        return io_fail(format!(
            "{}: record times must increase strictly",
            trajectory_path.display()
        ));
    }

    let mut min_k = f64::INFINITY;
    let samples: Vec<Sample<f64>> = container
        .records
        .iter()
        .map(|r| {
            for &v in &r.fields[2] {
                min_k = min_k.min(v);
            }
            Sample {
                t: r.t,
                velocity: basis.project_velocity(&r.fields[0], &r.fields[1]),
                tke: basis.project_scalar(&r.fields[2]),
            }
        })
        .collect();
    let traj = Trajectory {
        samples,
        audit: Vec::new(),
        diagnostics: Vec::new(),
        stats: RkStats::default(),
        positivity_events: 0,
        min_k_seen: if min_k.is_finite() { min_k } else { 0.0 },
        max_discarded_mass: 0.0,
        mollifier_under_resolved: false,
        initial_below_floor: false,
    };

    let report = match full_report(&traj, &parsed.run, &basis) {
        Ok(r) => r,
        Err(AuditError::MissingSamples(what)) => {
            return io_fail(format!(
                "{}: dump is missing {what}",
                trajectory_path.display()
            ));
        }
        Err(e) => return CommandOutcome::fail(ExitStatus::SolverAbort, e.to_string()),
    };
    let json_path = out_dir.join("audit.json");
    let csv_path = out_dir.join("audit.csv");
    if let Err(e) = write_audit_json(&json_path, &report) {
        return io_fail(e);
    }
    if let Err(e) = write_audit_csv(&csv_path, &report) {
        return io_fail(e);
    }

    let stdout = if json {
        let mut m = Map::new();
        m.insert("audit".into(), audit_report_value(&report));
        m.insert(
            "files".into(),
            files_value(&[("audit_json", &json_path), ("audit_csv", &csv_path)]),
        );
        m.insert(
            "warnings".into(),
            Value::Array(parsed.warnings.iter().cloned().map(Value::String).collect()),
        );
        render_json(&Value::Object(m))
    } else {
        let mut out = human_audit(&report);
        let _ = writeln!(out, "wrote {}", out_dir.display());
        out
    };
    CommandOutcome {
        status: ExitStatus::Success,
        stdout,
        errors: parsed.warnings.iter().map(|w| format!("warning: {w}")).collect(),
    }
}

fn human_uniformity(report: &UniformityReport) -> String {
    let mut out = String::new();
    let axis = match report.axis {
        SweepAxis::Regularization => "regularization level",
        SweepAxis::VelocityModes => "velocity modes",
        SweepAxis::ScalarModes => "scalar modes",
    };
    let _ = writeln!(out, "sweep over {axis}: {:?}", report.levels);
    for t in &report.tracks {
        let vals: Vec<String> = t.values.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(
            out,
            "{:<44} [{}] max {:.6e} {}",
            t.name,
            vals.join(", "),
            t.max,
            if t.bounded { "bounded" } else { "GROWING" }
        );
    }
    let cauchy: Vec<String> = report
        .velocity_cauchy
        .iter()
        .map(|v| format!("{v:.6e}"))
        .collect();
    let _ = writeln!(
        out,
        "velocity differences between consecutive levels: [{}] ({})",
        cauchy.join(", "),
        if report.cauchy_decreasing {
            "decreasing"
        } else {
            "NOT decreasing"
        }
    );
    let _ = writeln!(
        out,
        "verdict: {}",
        if report.bounded { "bounded" } else { "growing" }
    );
    for (level, msg) in &report.failures {
        let _ = writeln!(out, "level {level} failed: {msg}");
    }
    out
}

/// Runs the refinement study of the `[sweep]` section and writes
/// `uniformity.json` plus per-level `trajectory.tkef` / `audit.json`
/// artifacts under `level-<value>/`.
pub fn cmd_sweep(
    config_path: &Path,
    out_dir: &Path,
    jobs: usize,
    json: bool,
    force_override: bool,
) -> CommandOutcome {
    let parsed = match load(config_path, force_override) {
        Ok(p) => p,
        Err(o) => return *o,
    };
    let Some(request) = parsed.sweep.clone() else {
        return CommandOutcome::fail(
            ExitStatus::ConfigFailure,
            "configuration has no [sweep] section",
        );
    };
    if let Err(o) = ensure_dir(out_dir) {
        return o;
    }
    log::info!(
        "sweeping {:?} over {:?} with {} worker(s)",
        request.axis,
        request.levels,
        if jobs == 0 { "all".to_string() } else { jobs.to_string() }
    );

    let outcome = match uniformity_study_full(&parsed.run, request.axis, &request.levels, jobs) {
        Ok(o) => o,
        Err(AuditError::Config(msg)) => {
            return CommandOutcome::fail(ExitStatus::ConfigFailure, msg);
        }
        Err(e) => return CommandOutcome::fail(ExitStatus::SolverAbort, e.to_string()),
    };

    let report_path = out_dir.join("uniformity.json");
    if let Err(e) = write_uniformity_json(&report_path, &outcome.report) {
        return io_fail(e);
    }
    let mut level_dirs: Vec<(usize, PathBuf)> = Vec::new();
    for (lv, slot) in request.levels.iter().zip(&outcome.runs) {
        let Some((traj, basis)) = slot else { continue };
        let mut cfg = parsed.run.clone();
        match request.axis {
            SweepAxis::Regularization => cfg.level = *lv as u32,
            SweepAxis::VelocityModes => cfg.n_velocity = *lv,
            SweepAxis::ScalarModes => cfg.n_scalar = *lv,
        }
        let dir = out_dir.join(format!("level-{lv}"));
        if let Err(o) = ensure_dir(&dir) {
            return o;
        }
        if let Err(e) = trajectory_container(traj, basis).write(&dir.join("trajectory.tkef")) {
            return io_fail(e);
        }
        match full_report(traj, &cfg, basis) {
            Ok(report) => {
                if let Err(e) = write_audit_json(&dir.join("audit.json"), &report) {
                    return io_fail(e);
                }
            }
            Err(e) => return CommandOutcome::fail(ExitStatus::SolverAbort, e.to_string()),
        }
        level_dirs.push((*lv, dir));
    }

    let status = if outcome.report.failures.is_empty() {
        ExitStatus::Success
    } else {
        ExitStatus::PartialSweep
    };
    let stdout = if json {
        let mut m = Map::new();
        m.insert("uniformity".into(), uniformity_report_value(&outcome.report));
        m.insert(
            "report".into(),
            Value::String(report_path.display().to_string()),
        );
        let mut lv = Map::new();
        for (level, dir) in &level_dirs {
            lv.insert(level.to_string(), Value::String(dir.display().to_string()));
        }
        m.insert("level_artifacts".into(), Value::Object(lv));
        m.insert(
            "warnings".into(),
            Value::Array(parsed.warnings.iter().cloned().map(Value::String).collect()),
        );
        render_json(&Value::Object(m))
    } else {
        let mut out = human_uniformity(&outcome.report);
        let _ = writeln!(out, "wrote {}", out_dir.display());
        out
    };
    CommandOutcome {
        status,
        stdout,
        errors: parsed.warnings.iter().map(|w| format!("warning: {w}")).collect(),
    }
}

/// Raw exponent flags as typed on the command line. Values accept
/// integers, decimals, scientific notation and `a/b` fractions; rational
/// input makes the output carry exact values alongside the floats.
#[derive(Debug, Clone)]
pub struct ExponentFlags {
    pub d: u32,
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
    pub eta: String,
    pub zeta: String,
    pub theta: String,
}

fn rational_value<S: std::fmt::Display>(x: &S) -> Value {
    Value::String(x.to_string())
}

fn exponents_value<S: std::fmt::Display>(ex: &DerivedExponents<S>, f: impl Fn(&S) -> Value) -> Value {
    let mut m = Map::new();
    m.insert("r_u".into(), f(&ex.r_u));
    m.insert("rho_k".into(), f(&ex.rho_k));
    m.insert("r_k".into(), f(&ex.r_k));
    m.insert("sigma0".into(), f(&ex.sigma0));
    m.insert("sigma1".into(), f(&ex.sigma1));
    m.insert("sigma2".into(), f(&ex.sigma2));
    m.insert("sigma3".into(), f(&ex.sigma3));
    m.insert("sigma4".into(), f(&ex.sigma4));
    m.insert("sigma5".into(), f(&ex.sigma5));
    m.insert("rho0".into(), f(&ex.rho0));
    m.insert("rho0_omitting_rho1".into(), f(&ex.rho0_omitting_rho1));
    m.insert("rho1".into(), f(&ex.rho1));
    m.insert("rho2".into(), f(&ex.rho2));
    m.insert("rho3".into(), f(&ex.rho3));
    m.insert("rho4".into(), f(&ex.rho4));
    m.insert("rho5".into(), f(&ex.rho5));
    m.insert("q_gradient".into(), f(&ex.q_gradient));
    m.insert(
        "q_gradient_attained".into(),
        Value::Bool(ex.q_gradient_attained),
    );
    m.insert("drag_dominated".into(), Value::Bool(ex.drag_dominated));
    Value::Object(m)
}

/// Prints the admissibility report and every derived exponent.
///
/// Output is always JSON on standard output (the schema is the point of
/// this command); `json = false` appends a human summary after it.
pub fn cmd_exponents(flags: &ExponentFlags, json: bool) -> CommandOutcome {
    let mut floats = [0.0f64; 6];
    let mut rationals = Vec::with_capacity(6);
    for (i, (name, text)) in [
        ("alpha", &flags.alpha),
        ("beta", &flags.beta),
        ("gamma", &flags.gamma),
        ("eta", &flags.eta),
        ("zeta", &flags.zeta),
        ("theta", &flags.theta),
    ]
    .into_iter()
    .enumerate()
    {
        let rational = parse_rational(text);
        let float = match &rational {
            Some(r) => r.to_f64().unwrap_or(f64::NAN),
            None => match text.trim().parse::<f64>() {
                Ok(v) => v,
                Err(_) => {
                    return CommandOutcome::fail(
                        ExitStatus::ConfigFailure,
                        format!("--{name}: cannot parse \"{text}\" as a number"),
                    );
                }
            },
        };
        floats[i] = float;
        rationals.push(rational);
    }

    let float_inputs = ExponentInputs {
        d: flags.d,
        alpha: floats[0],
        beta: floats[1],
        gamma: floats[2],
        eta: floats[3],
        zeta: floats[4],
        theta: floats[5],
    };
    if !(2..=4).contains(&flags.d) {
        return CommandOutcome::fail(
            ExitStatus::ConfigFailure,
            format!("--d: dimension must lie in 2..=4, got {}", flags.d),
        );
    }
    let ex = derive_exponents(&float_inputs);
    let adm = check_admissibility(&float_inputs);

    let mut m = Map::new();
    {
        let mut im = Map::new();
        im.insert("d".into(), Value::Number(flags.d.into()));
        im.insert("alpha".into(), json_f64(floats[0]));
        im.insert("beta".into(), json_f64(floats[1]));
        im.insert("gamma".into(), json_f64(floats[2]));
        im.insert("eta".into(), json_f64(floats[3]));
        im.insert("zeta".into(), json_f64(floats[4]));
        im.insert("theta".into(), json_f64(floats[5]));
        m.insert("inputs".into(), Value::Object(im));
    }
    {
        let mut am = Map::new();
        am.insert("admissible".into(), Value::Bool(adm.admissible));
        am.insert("cond1_ok".into(), Value::Bool(adm.cond1_ok));
        am.insert("cond2_ok".into(), Value::Bool(adm.cond2_ok));
        am.insert("cond3_ok".into(), Value::Bool(adm.cond3_ok));
        am.insert("slack1".into(), json_f64(adm.slack1));
        am.insert("slack2".into(), json_f64(adm.slack2));
        am.insert("slack3".into(), json_f64(adm.slack3));
        am.insert(
            "violations".into(),
            Value::Array(adm.violations.iter().cloned().map(Value::String).collect()),
        );
        m.insert("admissibility".into(), Value::Object(am));
    }
    m.insert("exponents".into(), exponents_value(&ex, |v| json_f64(*v)));

    let exact = if rationals.iter().all(Option::is_some) {
        let mut it = rationals.into_iter().map(Option::unwrap);
        let inputs = ExponentInputs {
            d: flags.d,
            alpha: it.next().unwrap(),
            beta: it.next().unwrap(),
            gamma: it.next().unwrap(),
            eta: it.next().unwrap(),
            zeta: it.next().unwrap(),
            theta: it.next().unwrap(),
        };
        let exact_ex = derive_exponents(&inputs);
        let exact_adm = check_admissibility(&inputs);
        let mut em = Map::new();
        em.insert(
            "exponents".into(),
            exponents_value(&exact_ex, rational_value),
        );
        em.insert("admissible".into(), Value::Bool(exact_adm.admissible));
        em.insert("slack1".into(), rational_value(&exact_adm.slack1));
        em.insert("slack2".into(), rational_value(&exact_adm.slack2));
        em.insert("slack3".into(), rational_value(&exact_adm.slack3));
        m.insert("exact".into(), Value::Object(em));
        Some(exact_ex)
    } else {
        m.insert("exact".into(), Value::Null);
        None
    };

    let mut stdout = render_json(&Value::Object(m));
    if !json {
        let _ = writeln!(
            stdout,
            "admissible: {}{}",
            adm.admissible,
            if adm.violations.is_empty() {
                String::new()
            } else {
                format!(" ({})", adm.violations.join("; "))
            }
        );
        if let Some(exact_ex) = exact {
            let _ = writeln!(
                stdout,
                "r_u = {} = {:.6}, rho0 = {} = {:.6}, rho0 omitting rho1 = {}",
                exact_ex.r_u, ex.r_u, exact_ex.rho0, ex.rho0, exact_ex.rho0_omitting_rho1
            );
        }
    }
    CommandOutcome {
        status: ExitStatus::Success,
        stdout,
        errors: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(d: u32, alpha: &str) -> ExponentFlags {
        ExponentFlags {
            d,
            alpha: alpha.into(),
            beta: "1".into(),
            gamma: "3/10".into(),
            eta: "0".into(),
            zeta: "0".into(),
            theta: "0".into(),
        }
    }

    fn parse_stdout(outcome: &CommandOutcome) -> Value {
        serde_json::from_str(&outcome.stdout).unwrap()
    }

    #[test]
    fn exponents_carry_exact_fractions_next_to_floats() {
        let outcome = cmd_exponents(&flags(3, "2"), true);
        assert_eq!(outcome.status, ExitStatus::Success);
        let doc = parse_stdout(&outcome);
        assert_eq!(doc["exact"]["exponents"]["r_u"], "10/3");
        assert_eq!(doc["exact"]["exponents"]["r_k"], "5/3");
        assert_eq!(doc["exact"]["exponents"]["rho0"], "10/9");
        assert_eq!(doc["exact"]["exponents"]["rho0_omitting_rho1"], "10/9");
        assert_eq!(doc["admissibility"]["admissible"], true);
        assert_eq!(doc["exact"]["admissible"], true);
        let r_u = doc["exponents"]["r_u"].as_f64().unwrap();
        assert!((r_u - 10.0 / 3.0).abs() < 1e-15);

        // decimal text hits the same exact rationals as fraction text
        let decimal = cmd_exponents(
            &ExponentFlags {
                gamma: "0.3".into(),
                ..flags(3, "2")
            },
            true,
        );
        assert_eq!(parse_stdout(&decimal)["exact"]["exponents"]["rho0"], "10/9");
    }

    #[test]
    fn drag_dominated_branch_raises_r_u() {
        let doc = parse_stdout(&cmd_exponents(&flags(2, "3"), true));
        assert_eq!(doc["exact"]["exponents"]["r_u"], "4");
        assert_eq!(doc["exponents"]["drag_dominated"], false);

        let doc = parse_stdout(&cmd_exponents(&flags(3, "4"), true));
        assert_eq!(doc["exact"]["exponents"]["r_u"], "4");
        assert_eq!(doc["exponents"]["drag_dominated"], true);
    }

    #[test]
    fn malformed_exponent_flags_exit_with_config_failure() {
        let outcome = cmd_exponents(&flags(3, "two"), true);
        assert_eq!(outcome.status, ExitStatus::ConfigFailure);
        assert!(outcome.errors[0].contains("--alpha"));

        let outcome = cmd_exponents(&flags(7, "2"), true);
        assert_eq!(outcome.status, ExitStatus::ConfigFailure);
        assert!(outcome.errors[0].contains("--d"));
    }

    const SMALL_RUN: &str = "\
[model]
t_final = 0.25
[domain]
resolution = 8
[truncation]
level = 4
velocity_modes = 2
scalar_modes = 3
[integrator]
rel_tol = 1e-7
abs_tol = 1e-9
[output]
sample_count = 3
geometric_samples = false
[initial]
velocity = { coefficients = [0.5] }
tke = 0.5
";

    #[test]
    fn run_command_writes_the_artifact_set_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, SMALL_RUN).unwrap();

        let out_a = dir.path().join("a");
        let outcome = cmd_run(&cfg, &out_a, true, false);
        assert_eq!(outcome.status, ExitStatus::Success, "{:?}", outcome.errors);
        for f in ["trajectory.tkef", "diagnostics.csv", "audit.json", "audit.csv"] {
            assert!(out_a.join(f).is_file(), "missing {f}");
        }
        let doc = parse_stdout(&outcome);
        assert!(doc["audit"]["records"].as_array().unwrap().len() > 10);
        assert!(doc["steps"]["accepted"].as_u64().unwrap() > 0);

        let out_b = dir.path().join("b");
        let again = cmd_run(&cfg, &out_b, true, false);
        assert_eq!(again.status, ExitStatus::Success);
        let ta = std::fs::read(out_a.join("trajectory.tkef")).unwrap();
        let tb = std::fs::read(out_b.join("trajectory.tkef")).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(
            std::fs::read(out_a.join("audit.json")).unwrap(),
            std::fs::read(out_b.join("audit.json")).unwrap()
        );
    }

    #[test]
    fn unwritable_out_dir_fails_before_any_work() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, SMALL_RUN).unwrap();
        let blocker = dir.path().join("blocker");
        std::fs::write(&blocker, b"file, not a directory").unwrap();
        let outcome = cmd_run(&cfg, &blocker.join("out"), false, false);
        assert_eq!(outcome.status, ExitStatus::IoFailure);
        assert_eq!(outcome.status.code(), 2);
    }

    #[test]
    fn audit_replay_recovers_the_supremum_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, SMALL_RUN).unwrap();
        let out = dir.path().join("out");
        let ran = cmd_run(&cfg, &out, true, false);
        assert_eq!(ran.status, ExitStatus::Success, "{:?}", ran.errors);
        let original = parse_stdout(&ran);

        let replay_dir = dir.path().join("replay");
        let replay = cmd_audit(&cfg, &out.join("trajectory.tkef"), &replay_dir, true, false);
        assert_eq!(replay.status, ExitStatus::Success, "{:?}", replay.errors);
        let doc = parse_stdout(&replay);
        assert!(replay_dir.join("audit.json").is_file());
        assert!(replay_dir.join("audit.csv").is_file());

        // t = 0 is a dump record, so the supremum seen there is exact
        let find = |d: &Value, name: &str| -> f64 {
            d["audit"]["records"]
                .as_array()
                .unwrap()
                .iter()
                .find(|r| r["name"] == name)
                .unwrap()["lhs"]
                .as_f64()
                .unwrap()
        };
        let a = find(&original, "sup_kinetic_energy");
        let b = find(&doc, "sup_kinetic_energy");
        assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        let notes = doc["audit"]["notes"].as_array().unwrap();
        assert!(
            notes.iter().any(|n| n.as_str().unwrap().contains("sample")),
            "{notes:?}"
        );

        // replaying against a grid of the wrong size is an i/o failure
        let bigger = SMALL_RUN.replace("resolution = 8", "resolution = 16");
        std::fs::write(&cfg, bigger).unwrap();
        let mismatched = cmd_audit(&cfg, &out.join("trajectory.tkef"), &replay_dir, true, false);
        assert_eq!(mismatched.status, ExitStatus::IoFailure);
    }

    #[test]
    fn sweep_partial_failure_keeps_artifacts_and_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("sweep.toml");
        std::fs::write(
            &cfg,
            format!("{SMALL_RUN}[sweep]\naxis = \"scalar-modes\"\nlevels = [2, 3, 100000]\n"),
        )
        .unwrap();
        let out = dir.path().join("out");
        let outcome = cmd_sweep(&cfg, &out, 2, true, false);
        assert_eq!(outcome.status, ExitStatus::PartialSweep);
        assert_eq!(outcome.status.code(), 3);
        let doc = parse_stdout(&outcome);
        assert_eq!(doc["uniformity"]["failures"][0]["level"], 100000);
        assert!(out.join("uniformity.json").is_file());
        assert!(out.join("level-2/trajectory.tkef").is_file());
        assert!(out.join("level-3/audit.json").is_file());
        assert!(!out.join("level-100000").exists());
    }

    #[test]
    fn sweep_without_a_sweep_section_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, SMALL_RUN).unwrap();
        let outcome = cmd_sweep(&cfg, &dir.path().join("out"), 1, false, false);
        assert_eq!(outcome.status, ExitStatus::ConfigFailure);
        assert!(outcome.errors[0].contains("[sweep]"));
    }
}

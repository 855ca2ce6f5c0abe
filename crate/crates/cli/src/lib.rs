//! Front end for the `regpath` binary: problem files, solve reports, traces,
//! certification checks and convergence tables.

pub mod spec;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use regpath::catalog;
use regpath::geometry::{certified_local_bound, check_angle_bound, shell_probes, BoundSource};
use regpath::operators::{check_monotone, SampleRegion};
use regpath::oracle::{self, Bounds};
use regpath::trace::certificate_slack;
use regpath::{solve_observed, Event, Schedule, SolveConfig, SolveReport, Status, Trace, TraceRow, Vector, ZeroSet};
use serde::Serialize;

pub use spec::{Problem, SpecError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VIOLATIONS: i32 = 4;

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::ToleranceReached => EXIT_OK,
        Status::BudgetExhausted => EXIT_BUDGET,
        Status::DivergenceSuspected => EXIT_DIVERGENCE,
    }
}

/// Command-line settings that take precedence over the problem file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub max_evals: Option<u64>,
    pub target_mu: Option<u64>,
    pub schedule: Option<String>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Problem) -> Result<()> {
        if let Some(n) = self.max_evals {
            p.config.max_evals = n;
        }
        if let Some(n) = self.target_mu {
            p.config.target_mu = n;
        }
        if let Some(s) = &self.schedule {
            let sched = Schedule::parse(s)?;
            sched.ensure_valid()?;
            p.schedule = sched;
            p.schedule_name = s.clone();
        }
        p.config.validate()?;
        Ok(())
    }
}

fn catalog_problem(f: catalog::Fixture) -> Problem {
    Problem {
        name: f.name.to_string(),
        op: f.op,
        x0: f.x0,
        schedule: Schedule::sqrt(),
        schedule_name: "sqrt".into(),
        config: SolveConfig::default(),
    }
}

/// A problem file path, a catalog fixture name, or `all` for the whole catalog.
pub fn resolve(target: &str) -> Result<Vec<Problem>> {
    if target == "all" {
        return Ok(catalog::fixtures().into_iter().map(catalog_problem).collect());
    }
    let path = Path::new(target);
    if path.exists() || path.extension().is_some_and(|e| e == "toml") {
        return Ok(vec![spec::load(path)?]);
    }
    match catalog::fixture(target) {
        Some(f) => Ok(vec![catalog_problem(f)]),
        None => bail!("{target}: no such file or catalog fixture"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub problem: String,
    pub status: Status,
    pub x_final: Vec<f64>,
    pub v_final: Vec<f64>,
    pub cert_radius: f64,
    pub r_final: f64,
    pub mu_final: u64,
    pub n_final: u64,
    pub evals: u64,
    pub schedule: String,
    pub seed: u64,
    /// |x_final − minimum-norm zero|, or |v_final + a⁰| when there is no zero.
    pub final_error: Option<f64>,
    /// Rows with dist_pmu above r + slack; present only with the oracle on.
    pub certificate_violations: Option<usize>,
}

pub struct SolveRun {
    pub report: Report,
    pub raw: SolveReport,
    pub trace: Option<Trace>,
}

pub fn final_error(problem: &Problem, raw: &SolveReport) -> Option<f64> {
    match problem.op.zero_set() {
        ZeroSet::Unique(p) | ZeroSet::MinNorm(p) => Some((&raw.x_final - p).norm()),
        _ => problem.op.range_min_norm().map(|a0| (&raw.v_final + a0).norm()),
    }
}

/// Runs the engine; with `oracle` every trace row carries |x_n − p_μ|.
pub fn run_solve(problem: &Problem, record: bool, oracle_on: bool, seed: u64) -> Result<SolveRun> {
    let op = problem.op.as_ref();
    let mut rows = Vec::new();
    let mut cache: Option<(u64, Vector)> = None;
    let mut oracle_err = None;
    let mut violations = 0usize;

    let raw = solve_observed(op, &problem.x0, &problem.schedule, &problem.config, |ev| {
        let Event::Step(s) = ev else { return };
        let mut row = TraceRow::from_step(&s);
        if oracle_on && oracle_err.is_none() {
            if cache.as_ref().map(|c| c.0) != Some(s.mu) {
                match oracle::p_mu(op, &problem.schedule, s.mu) {
                    Ok(sol) => cache = Some((s.mu, sol.p)),
                    Err(e) => oracle_err = Some(e),
                }
            }
            if let Some((_, p)) = &cache {
                let d = (s.x - p).norm();
                if d > s.r + certificate_slack(s.r) {
                    violations += 1;
                }
                row.dist_pmu = Some(d);
            }
        }
        if record {
            rows.push(row);
        }
    })?;
    if let Some(e) = oracle_err {
        return Err(anyhow!(e).context("reference solution failed"));
    }

    let report = Report {
        problem: problem.name.clone(),
        status: raw.status,
        x_final: raw.x_final.iter().copied().collect(),
        v_final: raw.v_final.iter().copied().collect(),
        cert_radius: raw.cert_radius,
        r_final: raw.r_final,
        mu_final: raw.mu_final,
        n_final: raw.n_final,
        evals: raw.evals,
        schedule: problem.schedule_name.clone(),
        seed,
        final_error: final_error(problem, &raw),
        certificate_violations: oracle_on.then_some(violations),
    };
    Ok(SolveRun {
        report,
        raw,
        trace: record.then_some(Trace { rows }),
    })
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub target: String,
    pub trace: Option<PathBuf>,
    pub oracle: bool,
    pub seed: u64,
    pub overrides: Overrides,
}

/// `regpath solve`: returns the JSON report and the exit code.
pub fn cmd_solve(args: &SolveArgs) -> Result<(String, i32)> {
    let mut problems = resolve(&args.target)?;
    if problems.len() != 1 {
        bail!("solve takes a single problem");
    }
    let mut problem = problems.remove(0);
    args.overrides.apply(&mut problem)?;
    let run = run_solve(&problem, args.trace.is_some(), args.oracle, args.seed)?;
    if let (Some(path), Some(trace)) = (&args.trace, &run.trace) {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        trace.write_csv(BufWriter::new(file))?;
    }
    let json = serde_json::to_string_pretty(&run.report)?;
    Ok((json, exit_code(run.report.status)))
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub seed: u64,
    pub pairs: usize,
    pub probes: usize,
    pub samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: 0, pairs: 10_000, probes: 1_000, samples: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub check: &'static str,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub name: String,
    pub lines: Vec<CheckLine>,
}

impl CheckSummary {
    pub fn violations(&self) -> usize {
        self.lines.iter().filter(|l| !l.ok).count()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.name);
        for l in &self.lines {
            let tag = if l.ok { "ok" } else { "FAIL" };
            out.push_str(&format!("  {:<12}{:<6}{}\n", l.check, tag, l.detail));
        }
        out
    }
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Runs every applicable certification on one problem. `Err` means the
/// checking machinery itself failed, not that a property was violated.
pub fn check_problem(problem: &Problem, opts: &CheckOptions) -> Result<CheckSummary> {
    let op = problem.op.as_ref();
    let d = op.dim();
    let x0 = &problem.x0;
    let mut lines = Vec::new();

    let region = SampleRegion::around_origin(d, 10.0 + x0.norm(), opts.pairs);
    let bad = check_monotone(op, &region, opts.seed);
    lines.push(CheckLine {
        check: "monotone",
        ok: bad.is_empty(),
        detail: match bad.first() {
            None => format!("{} pairs", opts.pairs),
            Some(v) => format!("{} of {} pairs, worst inner product {:e}", bad.len(), opts.pairs, v.inner),
        },
    });

    let bound = certified_local_bound(op, x0, 1.0, opts.samples, opts.seed)?;
    let probes = shell_probes(x0, 1.0, opts.probes, opts.seed.wrapping_add(1));
    let angle = check_angle_bound(op, &bound, &probes);
    let source = match bound.source {
        BoundSource::Analytic => "analytic",
        BoundSource::Sampled => "sampled",
    };
    lines.push(CheckLine {
        check: "angle",
        ok: angle.violations.is_empty(),
        detail: format!(
            "{} violations, {} tested, {} skipped, c0 = {:.6} ({source})",
            angle.violations.len(),
            angle.tested,
            angle.skipped,
            bound.c0
        ),
    });

    if op.resolvent(1.0, &Vector::zeros(d)).is_some() {
        let grid = oracle::log_grid(1e-2, 1e6, 4);
        let path = oracle::resolvent_path(op, &grid).context("resolvent path")?;
        let limits = oracle::check_path_limits(op, &path, 4, 1e-2);
        let mut detail = format!("tail (1/lambda)J0 = {}", fmt_vec(&limits.tail_scaled));
        if let Some(e) = limits.zero_error {
            detail.push_str(&format!(", zero rel err {e:.3e}"));
        }
        if let Some(e) = limits.range_error {
            detail.push_str(&format!(", range rel err {e:.3e}"));
        }
        for v in &limits.violations {
            detail.push_str(&format!("; {v}"));
        }
        lines.push(CheckLine { check: "path", ok: limits.violations.is_empty(), detail });
    } else {
        lines.push(CheckLine { check: "path", ok: true, detail: "skipped (no closed-form resolvent)".into() });
    }

    let schedule = &problem.schedule;
    let mut worst = 0.0f64;
    for mu in [0, 10, 100, 1_000] {
        let sol = oracle::p_mu(op, schedule, mu).with_context(|| format!("reference solution at mu = {mu}"))?;
        worst = worst.max(sol.residual / (1.0 + sol.p.norm()));
    }
    lines.push(CheckLine {
        check: "regularized",
        ok: true,
        detail: format!("mu in {{0, 10, 100, 1000}}, worst relative residual {worst:.3e}"),
    });

    if d <= 3 {
        match op.zero_set() {
            ZeroSet::Unique(p) | ZeroSet::MinNorm(p) => {
                let half = 2.0 * (p.norm() + 1.0);
                let got = oracle::min_norm_zero_bruteforce(op, &Bounds::cube(d, half), 41);
                let (ok, detail) = match got {
                    Some(g) => {
                        let e = (&g - &p).norm();
                        (e < 1e-3, format!("grid {} vs metadata {}, gap {e:.3e}", fmt_vec(&g), fmt_vec(&p)))
                    }
                    None => (false, format!("grid found no zero, metadata says {}", fmt_vec(&p))),
                };
                lines.push(CheckLine { check: "bruteforce", ok, detail });
            }
            ZeroSet::Empty => {
                let got = oracle::min_norm_zero_bruteforce(op, &Bounds::cube(d, 5.0), 21);
                lines.push(CheckLine {
                    check: "bruteforce",
                    ok: got.is_none(),
                    detail: match got {
                        None => "no zero in [-5, 5]^d, as expected".into(),
                        Some(g) => format!("found {} but the zero set is empty", fmt_vec(&g)),
                    },
                });
            }
            ZeroSet::Unknown => {}
        }
    }

    Ok(CheckSummary { name: problem.name.clone(), lines })
}

/// `regpath check`: rendered summaries and the exit code.
pub fn cmd_check(target: &str, opts: &CheckOptions) -> Result<(String, i32)> {
    let problems = resolve(target)?;
    let summaries: Vec<Result<CheckSummary>> = problems.par_iter().map(|p| check_problem(p, opts)).collect();
    let mut out = String::new();
    let mut failed = 0;
    for (p, s) in problems.iter().zip(summaries) {
        let s = s.with_context(|| format!("{}: infrastructure failure", p.name))?;
        failed += s.violations();
        out.push_str(&s.render());
    }
    out.push_str(&format!("{} problems, {failed} failed checks\n", problems.len()));
    Ok((out, if failed == 0 { EXIT_OK } else { EXIT_VIOLATIONS }))
}

pub const TABLE_LEVELS: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const TABLE_HEADER: &str =
    "problem,dim,status,evals,mu_final,evals_to_cert_1e-1,evals_to_cert_1e-2,evals_to_cert_1e-3,final_error";

fn status_name(s: Status) -> &'static str {
    match s {
        Status::ToleranceReached => "tolerance_reached",
        Status::BudgetExhausted => "budget_exhausted",
        Status::DivergenceSuspected => "divergence_suspected",
    }
}

pub fn table_row(problem: &Problem) -> Result<String> {
    let mut hits: [Option<u64>; 3] = [None; 3];
    let raw = solve_observed(problem.op.as_ref(), &problem.x0, &problem.schedule, &problem.config, |ev| {
        if let Event::EpochAdvance { r, evals, .. } = ev {
            for (hit, level) in hits.iter_mut().zip(TABLE_LEVELS) {
                if hit.is_none() && r <= level {
                    *hit = Some(evals);
                }
            }
        }
    })?;
    let cell = |v: Option<u64>| v.map(|e| e.to_string()).unwrap_or_default();
    let err = final_error(problem, &raw).map(|e| e.to_string()).unwrap_or_default();
    Ok(format!(
        "{},{},{},{},{},{},{},{},{}",
        problem.name,
        problem.op.dim(),
        status_name(raw.status),
        raw.evals,
        raw.mu_final,
        cell(hits[0]),
        cell(hits[1]),
        cell(hits[2]),
        err
    ))
}

/// `regpath table`: one row per problem, in input order.
pub fn cmd_table(targets: &[String], overrides: &Overrides) -> Result<String> {
    let mut problems = Vec::new();
    for t in targets {
        problems.extend(resolve(t)?);
    }
    for p in &mut problems {
        overrides.apply(p)?;
    }
    let rows: Vec<String> = problems.par_iter().map(table_row).collect::<Result<_>>()?;
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

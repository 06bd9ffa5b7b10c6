use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};

use gsocp::grid::fmt_sci;
use gsocp::{
    builtin, extract_policy, hjb_residual, mc_lower_bound, solve, ExactSolution, McEstimate,
    ProblemSpec, SolveResult,
};

use crate::report::{ConvergenceReport, ReportRow};
use crate::RunConfig;

pub const RESIDUAL_FD_STEP: f64 = 1e-4;
pub const RESIDUAL_CONTROL_SAMPLES: usize = 201;

pub fn load_problem(cfg: &RunConfig) -> Result<(ProblemSpec, ExactSolution)> {
    Ok(builtin(&cfg.problem, &cfg.params)?)
}

/// Solves at every `N` of the list and tabulates `|v - v_exact|` at `(0, x0)`.
pub fn run_converge(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let (p, exact) = load_problem(cfg)?;
    let target = exact.value(0.0, cfg.x0);
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let r = solve(&p, cfg.x0, &cfg.solver_config(n)).with_context(|| format!("N = {n}"))?;
        if r.clamp_count > 0 {
            eprintln!(
                "warning: N = {n}: {} lookups clamped at the grid edge",
                r.clamp_count
            );
        }
        let ms = if cfg.timing {
            r.wall_time.as_secs_f64() * 1e3
        } else {
            0.0
        };
        rows.push(ReportRow::new(n, r.delta, r.value_at_start, target, ms));
    }
    let report = ConvergenceReport::from_rows(rows);
    if report.rate.is_none() {
        eprintln!("warning: errors admit no rate fit");
    }
    Ok(report)
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub steps: usize,
    pub result: SolveResult,
}

/// One solve at the largest `N` of the list.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let (p, _) = load_problem(cfg)?;
    let steps = *cfg
        .n_list
        .last()
        .ok_or_else(|| anyhow!("n_list is empty"))?;
    let result = solve(&p, cfg.x0, &cfg.solver_config(steps))?;
    Ok(SolveOutcome { steps, result })
}

impl SolveOutcome {
    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "N,{}", self.steps)?;
        writeln!(
            out,
            "value_at_start,{}",
            fmt_sci(self.result.value_at_start)
        )?;
        writeln!(out, "clamp_count,{}", self.result.clamp_count)?;
        writeln!(
            out,
            "wall_time_ms,{}",
            fmt_sci(self.result.wall_time.as_secs_f64() * 1e3)
        )
    }

    /// The time-0 field with its argmax columns.
    pub fn write_field<W: Write>(&self, out: W) -> io::Result<()> {
        let r = &self.result;
        r.fields[0].write_csv(out, &r.controls, &r.sigma_levels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `(t, x, residual)` over the sample.
    pub points: Vec<(f64, f64, f64)>,
    pub max_abs: f64,
}

impl ResidualReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,residual")?;
        for (t, x, r) in &self.points {
            writeln!(out, "{},{},{}", fmt_sci(*t), fmt_sci(*x), fmt_sci(*r))?;
        }
        writeln!(out, "max_abs,{}", fmt_sci(self.max_abs))
    }
}

/// HJB residual of the exact solution on `t in {0.1, .., 0.9} x (x0 + {-1, .., 1})`.
pub fn run_residual(cfg: &RunConfig) -> Result<ResidualReport> {
    let (p, exact) = load_problem(cfg)?;
    let value = |t: f64, x: f64| exact.value(t, x);
    let mut points = Vec::with_capacity(25);
    for i in 0..5 {
        let t = p.horizon * (0.1 + 0.2 * i as f64);
        for dx in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let x = cfg.x0 + dx;
            let r = hjb_residual(&p, &value, t, x, RESIDUAL_FD_STEP, cfg.control_samples)?;
            points.push((t, x, r));
        }
    }
    let max_abs = points.iter().map(|(_, _, r)| r.abs()).fold(0.0, f64::max);
    Ok(ResidualReport { points, max_abs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub steps: usize,
    pub theta: f64,
    pub scheme_value: f64,
    pub mc: McEstimate,
}

impl OracleReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "N,theta,seed,paths,scheme_value,mc_mean,mc_stderr")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.steps,
            fmt_sci(self.theta),
            self.mc.seed,
            self.mc.n_paths,
            fmt_sci(self.scheme_value),
            fmt_sci(self.mc.mean),
            fmt_sci(self.mc.stderr)
        )
    }
}

/// Simulates the scheme's own recorded policy at constant volatility
/// `theta` and compares with the scheme value, at the largest `N`.
pub fn run_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let (p, _) = load_problem(cfg)?;
    let steps = *cfg
        .n_list
        .last()
        .ok_or_else(|| anyhow!("n_list is empty"))?;
    let r = solve(&p, cfg.x0, &cfg.solver_config(steps))?;
    let theta = cfg.theta.unwrap_or(p.gparams.sigma_hi);
    let policy = |t: f64, x: f64| extract_policy(&r, t, x).map_or(0.0, |(a, _)| a);
    let mc = mc_lower_bound(&p, cfg.x0, steps, theta, &policy, cfg.paths, cfg.seed)?;
    Ok(OracleReport {
        steps,
        theta,
        scheme_value: r.value_at_start,
        mc,
    })
}

/// Writes to `path`, or standard output when there is none.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

//! Backward dynamic programming on the lattice family.
//!
//! Starting from `v(T, x) = g(x)`, each step computes
//!
//! ```text
//! v(t_n, x) = max_a max_xi [ sum_i w_i v(t_{n+1}, zeta_i) + f(t_n, x, a) dt ]
//! zeta_i    = x + b dt + sigma sqrt(dt) p_i + h dt p_i^2
//! ```
//!
//! over the sampled controls `a` and the family members `xi = (p_i, w_i)`.
//! Off-grid successors are read back by interpolation.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{level_grids, ClampCounter, Grid1D, Interp, PolicyEntry, ValueField};
use crate::lattice::{make_family, FamilyKind, LatticeFamily};
use crate::problem::{Coefficients, ProblemSpec};

pub const DEFAULT_CONTROL_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of time steps; `dt = T / steps`.
    pub steps: usize,
    pub scheme: FamilyKind,
    pub control_samples: usize,
    /// Grid spacing is `grid_factor * dt`.
    pub grid_factor: f64,
    pub interp: Interp,
    /// Fail instead of clamping when a successor leaves the grid.
    pub strict_domain: bool,
    /// Interior volatility levels added between `sigma_lo` and `sigma_hi`.
    pub extra_levels: usize,
    pub record_policy: bool,
    /// Truncate every level grid to `[x0 - r, x0 + r]`.
    pub truncation_radius: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            steps: 16,
            scheme: FamilyKind::Trinomial,
            control_samples: DEFAULT_CONTROL_SAMPLES,
            grid_factor: 1.0,
            interp: Interp::Linear,
            strict_domain: false,
            extra_levels: 0,
            record_policy: true,
            truncation_radius: None,
        }
    }
}

impl SolverConfig {
    pub fn new(steps: usize, scheme: FamilyKind) -> Self {
        Self {
            steps,
            scheme,
            ..Self::default()
        }
    }

    pub fn delta(&self, horizon: f64) -> f64 {
        horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("number of time steps must be >= 1".into()));
        }
        if self.control_samples == 0 {
            return Err(Error::Config("control sample count must be >= 1".into()));
        }
        if !(self.grid_factor > 0.0 && self.grid_factor.is_finite()) {
            return Err(Error::Config(format!(
                "grid factor {} must be positive",
                self.grid_factor
            )));
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!(
                    "truncation radius {r} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub value_at_start: f64,
    /// One field per level, `fields[n]` at `t_n`.
    pub fields: Vec<ValueField>,
    pub clamp_count: u64,
    pub wall_time: Duration,
    pub delta: f64,
    /// Sampled controls, indexed by `PolicyEntry::control`.
    pub controls: Vec<f64>,
    /// Family volatility levels, indexed by `PolicyEntry::sigma`.
    pub sigma_levels: Vec<f64>,
}

fn checked_coefficients(p: &ProblemSpec, t: f64, x: f64, a: f64) -> Result<Coefficients> {
    let c = p.coefficients(t, x, a);
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Evaluation { t, x, a })
    }
}

#[inline]
fn advance(x: f64, c: &Coefficients, point: f64, delta: f64, sqrt_delta: f64) -> f64 {
    x + c.drift * delta + c.diffusion * sqrt_delta * point + c.quad * delta * point * point
}

/// `x + b dt + sigma sqrt(dt) p + h dt p^2` with coefficients at `(t, x, a)`.
pub fn successor(
    x: f64,
    t: f64,
    a: f64,
    point: f64,
    delta: f64,
    prob: &ProblemSpec,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("time step {delta} must be positive")));
    }
    let c = checked_coefficients(prob, t, x, a)?;
    Ok(advance(x, &c, point, delta, delta.sqrt()))
}

/// One application of the scheme: builds level `n` on `grid` from `next`
/// (level `n + 1`).
///
/// Ties are broken towards the lowest control index, then the lowest
/// sigma index. Returns the field and the number of clamped lookups.
#[allow(clippy::too_many_arguments)]
pub fn backward_step(
    next: &ValueField,
    grid: &Grid1D,
    n: usize,
    p: &ProblemSpec,
    fam: &LatticeFamily,
    controls: &[f64],
    delta: f64,
    cfg: &SolverConfig,
) -> Result<(ValueField, u64)> {
    if next.time_index() != n + 1 {
        return Err(Error::Domain(format!(
            "backward step to level {n} needs level {} data, got level {}",
            n + 1,
            next.time_index()
        )));
    }
    let t = n as f64 * delta;
    let sqrt_delta = delta.sqrt();
    let clamps = ClampCounter::new();
    let members = fam.members();

    let solved: Vec<(f64, PolicyEntry)> = (0..grid.n_nodes())
        .into_par_iter()
        .map(|j| {
            let x = grid.node(j);
            let mut best = f64::NEG_INFINITY;
            let mut arg = PolicyEntry {
                control: 0,
                sigma: 0,
            };
            for (ia, &a) in controls.iter().enumerate() {
                let c = checked_coefficients(p, t, x, a)?;
                let running = c.running * delta;
                for (is, lat) in members.iter().enumerate() {
                    let expectation: f64 = lat
                        .points()
                        .iter()
                        .zip(lat.probs())
                        .map(|(&pt, &w)| {
                            let y = advance(x, &c, pt, delta, sqrt_delta);
                            w * next.interpolate_counted(y, cfg.interp, &clamps)
                        })
                        .sum();
                    let candidate = expectation + running;
                    if candidate > best {
                        best = candidate;
                        arg = PolicyEntry {
                            control: ia as u32,
                            sigma: is as u32,
                        };
                    }
                }
            }
            Ok((best, arg))
        })
        .collect::<Result<_>>()?;

    let count = clamps.get();
    if cfg.strict_domain && count > 0 {
        return Err(Error::DomainViolation { count });
    }
    let (values, policy): (Vec<f64>, Vec<PolicyEntry>) = solved.into_iter().unzip();
    let mut field = ValueField::new(*grid, values, n)?;
    if cfg.record_policy {
        field = field.with_policy(policy, controls.len(), members.len())?;
    }
    Ok((field, count))
}

/// Terminal level: `g` sampled at the nodes.
pub fn terminal_field(p: &ProblemSpec, grid: &Grid1D, level: usize) -> Result<ValueField> {
    ValueField::new(*grid, grid.nodes().map(|x| p.terminal(x)).collect(), level)
}

/// Runs the full backward sweep from `T` to `0` and reads off the value at `x0`.
pub fn solve(p: &ProblemSpec, x0: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !x0.is_finite() {
        return Err(Error::Domain(format!("start point {x0} is not finite")));
    }
    let started = Instant::now();
    let fam = make_family(
        cfg.scheme,
        p.gparams.sigma_lo,
        p.gparams.sigma_hi,
        cfg.extra_levels,
    )?;
    let controls = p.controls.sample(cfg.control_samples)?;
    let delta = cfg.delta(p.horizon);
    let spacing = cfg.grid_factor * delta;
    let grids = level_grids(
        p,
        x0,
        cfg.steps,
        &fam,
        delta,
        spacing,
        &controls,
        cfg.truncation_radius,
    )?;

    let mut fields = Vec::with_capacity(cfg.steps + 1);
    fields.push(terminal_field(p, &grids[cfg.steps], cfg.steps)?);
    let mut clamp_count = 0;
    for n in (0..cfg.steps).rev() {
        let next = fields.last().expect("terminal level present");
        let (field, clamps) = backward_step(next, &grids[n], n, p, &fam, &controls, delta, cfg)?;
        clamp_count += clamps;
        fields.push(field);
    }
    fields.reverse();

    let value_at_start = fields[0].interpolate(x0, cfg.interp);
    Ok(SolveResult {
        value_at_start,
        fields,
        clamp_count,
        wall_time: started.elapsed(),
        delta,
        controls,
        sigma_levels: fam.sigma_levels(),
    })
}

/// Recorded argmax `(control, sigma level)` at the grid node nearest to `x`
/// on the time level nearest to `t`.
pub fn extract_policy(result: &SolveResult, t: f64, x: f64) -> Result<(f64, f64)> {
    let last_decision = result.fields.len().saturating_sub(2);
    let n = ((t / result.delta).round().max(0.0) as usize).min(last_decision);
    let field = &result.fields[n];
    let policy = field.policy().ok_or(Error::PolicyNotRecorded)?;
    let entry = policy[field.grid().nearest(x)];
    Ok((
        result.controls[entry.control as usize],
        result.sigma_levels[entry.sigma as usize],
    ))
}

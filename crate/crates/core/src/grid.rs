//! Uniform 1-D grids, value fields and interpolation.
//!
//! Grids are anchored: node `j` sits at `anchor + (first + j) * spacing`, so
//! grids built for different time levels around the same anchor share their
//! nodes exactly.

use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::lattice::LatticeFamily;
use crate::problem::ProblemSpec;

/// Queries this close to the grid edge (in units of spacing) count as inside.
const EDGE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    anchor: f64,
    first: i64,
    n_nodes: usize,
    spacing: f64,
}

impl Grid1D {
    /// `n_nodes` equally spaced nodes from `lo` to `hi`.
    pub fn new(lo: f64, hi: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "grid needs lo < hi and at least 2 nodes, got [{lo}, {hi}] with {n_nodes}"
            )));
        }
        Ok(Self {
            anchor: lo,
            first: 0,
            n_nodes,
            spacing: (hi - lo) / (n_nodes - 1) as f64,
        })
    }

    /// Nodes `anchor + i * spacing` for `i` in `first..=last`.
    pub fn anchored(anchor: f64, spacing: f64, first: i64, last: i64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || !anchor.is_finite() || last < first {
            return Err(Error::Domain(format!(
                "anchored grid needs spacing > 0 and first <= last (spacing {spacing}, {first}..={last})"
            )));
        }
        Ok(Self {
            anchor,
            first,
            n_nodes: (last - first + 1) as usize,
            spacing,
        })
    }

    pub fn lo(&self) -> f64 {
        self.node(0)
    }

    pub fn hi(&self) -> f64 {
        self.node(self.n_nodes - 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Anchor-relative index of node 0.
    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn node(&self, j: usize) -> f64 {
        self.anchor + (self.first + j as i64) as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|j| self.node(j))
    }

    /// Fractional node coordinate of `x`.
    fn coordinate(&self, x: f64) -> f64 {
        (x - self.anchor) / self.spacing - self.first as f64
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let s = self.coordinate(x).round();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_nodes - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Linear,
    /// Piecewise cubic Hermite with harmonic-mean slopes (no new extrema).
    CubicMonotone,
}

impl std::str::FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Interp::Linear),
            "cubic" | "cubic_monotone" | "pchip" => Ok(Interp::CubicMonotone),
            other => Err(Error::Config(format!("unknown interpolation {other:?}"))),
        }
    }
}

/// Counts queries that fell outside the grid and were clamped.
#[derive(Debug, Default)]
pub struct ClampCounter(AtomicU64);

impl ClampCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

/// The maximizing `(control index, sigma-level index)` at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyEntry {
    pub control: u32,
    pub sigma: u32,
}

/// Value function at time level `time_index`, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: Grid1D,
    values: Vec<f64>,
    time_index: usize,
    policy: Option<Vec<PolicyEntry>>,
}

impl ValueField {
    pub fn new(grid: Grid1D, values: Vec<f64>, time_index: usize) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Domain(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "field value at x = {} is not finite",
                grid.node(j)
            )));
        }
        Ok(Self {
            grid,
            values,
            time_index,
            policy: None,
        })
    }

    /// Attaches an argmax record per node; indices must be below the given
    /// control and sigma-level counts.
    pub fn with_policy(
        mut self,
        policy: Vec<PolicyEntry>,
        n_controls: usize,
        n_sigmas: usize,
    ) -> Result<Self> {
        if policy.len() != self.values.len() {
            return Err(Error::Domain(
                "policy length does not match the grid".into(),
            ));
        }
        if policy
            .iter()
            .any(|e| e.control as usize >= n_controls || e.sigma as usize >= n_sigmas)
        {
            return Err(Error::Domain("policy index out of range".into()));
        }
        self.policy = Some(policy);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn policy(&self) -> Option<&[PolicyEntry]> {
        self.policy.as_deref()
    }

    pub fn interpolate(&self, x: f64, method: Interp) -> f64 {
        interpolate(self, x, method, None)
    }

    pub fn interpolate_counted(&self, x: f64, method: Interp, clamps: &ClampCounter) -> f64 {
        interpolate(self, x, method, Some(clamps))
    }

    /// Writes `x,value,argmax_control,argmax_sigma` rows; the policy
    /// columns are empty when no policy was recorded.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        controls: &[f64],
        sigmas: &[f64],
    ) -> io::Result<()> {
        writeln!(out, "x,value,argmax_control,argmax_sigma")?;
        for (j, (x, v)) in self.grid.nodes().zip(&self.values).enumerate() {
            match self.policy.as_ref().map(|p| p[j]) {
                Some(e) => writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_sci(x),
                    fmt_sci(*v),
                    fmt_sci(controls[e.control as usize]),
                    fmt_sci(sigmas[e.sigma as usize])
                )?,
                None => writeln!(out, "{},{},,", fmt_sci(x), fmt_sci(*v))?,
            }
        }
        Ok(())
    }
}

/// Nine significant digits, scientific notation, locale independent.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.8e}")
}

/// Harmonic-mean slope at interior node `j` (zero at local extrema).
fn monotone_slope(values: &[f64], j: usize, spacing: f64) -> f64 {
    let n = values.len();
    if j == 0 {
        return (values[1] - values[0]) / spacing;
    }
    if j == n - 1 {
        return (values[n - 1] - values[n - 2]) / spacing;
    }
    let left = (values[j] - values[j - 1]) / spacing;
    let right = (values[j + 1] - values[j]) / spacing;
    if left * right > 0.0 {
        2.0 / (1.0 / left + 1.0 / right)
    } else {
        0.0
    }
}

/// Evaluates the field at `x`. Queries beyond the grid return the boundary
/// node's value and bump `clamps`.
pub fn interpolate(
    field: &ValueField,
    x: f64,
    method: Interp,
    clamps: Option<&ClampCounter>,
) -> f64 {
    let values = &field.values;
    let last = values.len() - 1;
    let s = field.grid.coordinate(x);
    if !(s > 0.0) {
        if s < -EDGE_SLACK || s.is_nan() {
            if let Some(c) = clamps {
                c.bump();
            }
        }
        return values[0];
    }
    if s >= last as f64 {
        if s > last as f64 + EDGE_SLACK {
            if let Some(c) = clamps {
                c.bump();
            }
        }
        return values[last];
    }
    let j = (s as usize).min(last - 1);
    let frac = s - j as f64;
    if frac == 0.0 {
        return values[j];
    }
    let (v0, v1) = (values[j], values[j + 1]);
    match method {
        Interp::Linear => v0 + frac * (v1 - v0),
        Interp::CubicMonotone => {
            let h = field.grid.spacing;
            let d0 = monotone_slope(values, j, h);
            let d1 = monotone_slope(values, j + 1, h);
            let t2 = frac * frac;
            let t3 = t2 * frac;
            (2.0 * t3 - 3.0 * t2 + 1.0) * v0
                + (t3 - 2.0 * t2 + frac) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * v1
                + (t3 - t2) * h * d1
        }
    }
}

#[allow(clippy::too_many_arguments)]
/// Per-step growth `dt |b| + sqrt(dt) p |sigma| + dt p^2 |h|` over `[lo, hi]`.
fn step_radius(
    p: &ProblemSpec,
    t: f64,
    lo: f64,
    hi: f64,
    controls: &[f64],
    p_max: f64,
    delta: f64,
    step: usize,
) -> Result<f64> {
    let b = p.coefficient_bounds(t, lo, hi, controls);
    let r = delta * b.drift + delta.sqrt() * p_max * b.diffusion + delta * p_max * p_max * b.quad;
    if !b.is_finite() || !r.is_finite() {
        return Err(Error::DomainGrowth { step });
    }
    Ok(r)
}

/// Interval reachable from `x0` in `steps` scheme steps.
///
/// Grows `D_{k+1} = D_k + [-r_k, r_k]` with `r_k` from the coefficient
/// suprema over `D_k x controls` and the largest lattice point of `fam`.
pub fn reachable_domain(
    p: &ProblemSpec,
    x0: f64,
    steps: usize,
    fam: &LatticeFamily,
    delta: f64,
    controls: &[f64],
) -> Result<(f64, f64)> {
    let p_max = fam.max_abs_point();
    let (mut lo, mut hi) = (x0, x0);
    for k in 0..steps {
        let r = step_radius(p, k as f64 * delta, lo, hi, controls, p_max, delta, k)?;
        lo -= r;
        hi += r;
    }
    Ok((lo, hi))
}

/// Grids for levels `0..=steps`, anchored at `x0` with common `spacing`.
///
/// Level `k + 1` covers every successor of every node of level `k`, so the
/// backward sweep never leaves the grid unless `radius` truncates it.
#[allow(clippy::too_many_arguments)]
pub fn level_grids(
    p: &ProblemSpec,
    x0: f64,
    steps: usize,
    fam: &LatticeFamily,
    delta: f64,
    spacing: f64,
    controls: &[f64],
    radius: Option<f64>,
) -> Result<Vec<Grid1D>> {
    let p_max = fam.max_abs_point();
    let cap = radius.map(|r| (r / spacing).floor() as i64);
    let (mut first, mut last) = (0i64, 0i64);
    let mut grids = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        // a single node still needs two to interpolate between
        let (f, l) = if first == last {
            (first - 1, last + 1)
        } else {
            (first, last)
        };
        let grid = Grid1D::anchored(x0, spacing, f, l)?;
        grids.push(grid);
        if k == steps {
            break;
        }
        let r = step_radius(
            p,
            k as f64 * delta,
            grid.lo(),
            grid.hi(),
            controls,
            p_max,
            delta,
            k,
        )?;
        let widen = (r / spacing - 1e-9).ceil().max(0.0);
        if widen > 1e9 {
            return Err(Error::DomainGrowth { step: k });
        }
        first = f - widen as i64;
        last = l + widen as i64;
        if let Some(cap) = cap {
            first = first.max(-cap.max(1));
            last = last.min(cap.max(1));
        }
    }
    Ok(grids)
}

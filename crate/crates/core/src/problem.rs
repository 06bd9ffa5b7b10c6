//! Controlled dynamics, payoffs and the built-in test problems.
//!
//! The state follows
//!
//! ```text
//! dX = b(t, X, a) dt + sigma(t, X, a) dB + h(t, X, a) d<B>
//! ```
//!
//! with `B` a one-dimensional G-Brownian motion, and the controller
//! maximizes `E[g(X_T) + int f(s, X_s, a_s) ds]` under the sublinear
//! expectation. All coefficients are scalar functions of `(t, x, a)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type CoefficientFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type PayoffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `(t, lo, hi) -> bounds` over `[lo, hi] x A` at time `t`.
pub type GrowthBoundFn = Arc<dyn Fn(f64, f64, f64) -> CoefficientBounds + Send + Sync>;

/// Volatility bounds of the G-Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GParams {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl GParams {
    pub fn new(sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        if !(sigma_lo >= 0.0 && sigma_lo <= sigma_hi && sigma_hi.is_finite()) {
            return Err(Error::Domain(format!(
                "G parameters must satisfy 0 <= sigma_lo <= sigma_hi < inf, got [{sigma_lo}, {sigma_hi}]"
            )));
        }
        Ok(Self { sigma_lo, sigma_hi })
    }

    pub fn g(&self, a: f64) -> f64 {
        g_function(self, a)
    }
}

/// `G(a) = (sigma_hi^2 a^+ - sigma_lo^2 a^-) / 2`.
pub fn g_function(gp: &GParams, a: f64) -> f64 {
    0.5 * (gp.sigma_hi * gp.sigma_hi * a.max(0.0) - gp.sigma_lo * gp.sigma_lo * (-a).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    /// A compact interval, sampled uniformly at solve time.
    Interval { lo: f64, hi: f64 },
    /// An explicit finite set; the sample count is ignored.
    Points(Vec<f64>),
}

impl ControlSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "control interval [{lo}, {hi}] is empty or unbounded"
            )));
        }
        Ok(ControlSet::Interval { lo, hi })
    }

    /// The "no control" set.
    pub fn singleton() -> Self {
        ControlSet::Points(vec![0.0])
    }

    /// `m` equally spaced points with both endpoints when `m >= 2`, the
    /// midpoint when `m == 1`.
    pub fn sample(&self, m: usize) -> Result<Vec<f64>> {
        match self {
            ControlSet::Points(points) => {
                if points.is_empty() {
                    return Err(Error::Domain("explicit control set is empty".into()));
                }
                Ok(points.clone())
            }
            ControlSet::Interval { lo, hi } => match m {
                0 => Err(Error::Config("control sample count must be >= 1".into())),
                1 => Ok(vec![0.5 * (lo + hi)]),
                _ => {
                    let last = (m - 1) as f64;
                    Ok((0..m)
                        .map(|i| match i {
                            0 => *lo,
                            i if i == m - 1 => *hi,
                            i => {
                                // symmetric in i <-> m-1-i
                                let s = i as f64 / last;
                                if 2 * i < m - 1 {
                                    lo + (hi - lo) * s
                                } else {
                                    hi - (hi - lo) * (1.0 - s)
                                }
                            }
                        })
                        .collect())
                }
            },
        }
    }
}

/// Coefficient values at one `(t, x, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub drift: f64,
    pub diffusion: f64,
    pub quad: f64,
    pub running: f64,
}

impl Coefficients {
    pub fn is_finite(&self) -> bool {
        self.drift.is_finite()
            && self.diffusion.is_finite()
            && self.quad.is_finite()
            && self.running.is_finite()
    }
}

/// Suprema of `|b|`, `|sigma|`, `|h|` over a state interval times the control set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    pub drift: f64,
    pub diffusion: f64,
    pub quad: f64,
}

impl CoefficientBounds {
    pub fn is_finite(&self) -> bool {
        self.drift.is_finite() && self.diffusion.is_finite() && self.quad.is_finite()
    }
}

/// A controlled system with its payoff.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub horizon: f64,
    pub controls: ControlSet,
    pub gparams: GParams,
    drift: CoefficientFn,
    diffusion: CoefficientFn,
    quad: CoefficientFn,
    running: CoefficientFn,
    terminal: PayoffFn,
    growth_bound: Option<GrowthBoundFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("controls", &self.controls)
            .field("gparams", &self.gparams)
            .field("growth_bound", &self.growth_bound.is_some())
            .finish_non_exhaustive()
    }
}

fn zero3() -> CoefficientFn {
    Arc::new(|_, _, _| 0.0)
}

impl ProblemSpec {
    /// A problem with zero coefficients, zero running cost and zero payoff;
    /// fill in the pieces with the `with_*` builders.
    pub fn new(
        name: impl Into<String>,
        horizon: f64,
        controls: ControlSet,
        gparams: GParams,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        Ok(Self {
            name: name.into(),
            horizon,
            controls,
            gparams,
            drift: zero3(),
            diffusion: zero3(),
            quad: zero3(),
            running: zero3(),
            terminal: Arc::new(|_| 0.0),
            growth_bound: None,
        })
    }

    pub fn with_drift(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.drift = Arc::new(f);
        self
    }

    pub fn with_diffusion(
        mut self,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.diffusion = Arc::new(f);
        self
    }

    /// Coefficient `h` of the quadratic-variation term.
    pub fn with_quad(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.quad = Arc::new(f);
        self
    }

    pub fn with_running(
        mut self,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.running = Arc::new(f);
        self
    }

    pub fn with_terminal(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.terminal = Arc::new(g);
        self
    }

    /// Supplies exact coefficient suprema for reachable-domain estimates.
    /// Without one, suprema are estimated by sampling.
    pub fn with_growth_bound(
        mut self,
        f: impl Fn(f64, f64, f64) -> CoefficientBounds + Send + Sync + 'static,
    ) -> Self {
        self.growth_bound = Some(Arc::new(f));
        self
    }

    pub fn drift(&self, t: f64, x: f64, a: f64) -> f64 {
        (self.drift)(t, x, a)
    }

    pub fn diffusion(&self, t: f64, x: f64, a: f64) -> f64 {
        (self.diffusion)(t, x, a)
    }

    pub fn quad(&self, t: f64, x: f64, a: f64) -> f64 {
        (self.quad)(t, x, a)
    }

    pub fn running(&self, t: f64, x: f64, a: f64) -> f64 {
        (self.running)(t, x, a)
    }

    pub fn terminal(&self, x: f64) -> f64 {
        (self.terminal)(x)
    }

    pub fn coefficients(&self, t: f64, x: f64, a: f64) -> Coefficients {
        Coefficients {
            drift: self.drift(t, x, a),
            diffusion: self.diffusion(t, x, a),
            quad: self.quad(t, x, a),
            running: self.running(t, x, a),
        }
    }

    /// Suprema of `|b|, |sigma|, |h|` over `[lo, hi] x controls` at time `t`.
    ///
    /// Uses the supplied growth bound when present. Otherwise the
    /// coefficients are sampled at 129 states (endpoints included) times
    /// `controls`, which is an estimate rather than a guarantee.
    pub fn coefficient_bounds(
        &self,
        t: f64,
        lo: f64,
        hi: f64,
        controls: &[f64],
    ) -> CoefficientBounds {
        if let Some(bound) = &self.growth_bound {
            return bound(t, lo, hi);
        }
        const SAMPLES: usize = 129;
        let mut out = CoefficientBounds {
            drift: 0.0,
            diffusion: 0.0,
            quad: 0.0,
        };
        for i in 0..SAMPLES {
            let x = if hi > lo {
                lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64
            } else {
                lo
            };
            for &a in controls {
                let c = self.coefficients(t, x, a);
                out.drift = out.drift.max(c.drift.abs());
                out.diffusion = out.diffusion.max(c.diffusion.abs());
                out.quad = out.quad.max(c.quad.abs());
                if !c.is_finite() {
                    return CoefficientBounds {
                        drift: f64::INFINITY,
                        diffusion: f64::INFINITY,
                        quad: f64::INFINITY,
                    };
                }
            }
            if hi <= lo {
                break;
            }
        }
        out
    }
}

/// Closed-form value (and optionally feedback control) of a problem.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: ValueFn,
    pub optimal_control: Option<ValueFn>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("optimal_control", &self.optimal_control.is_some())
            .finish_non_exhaustive()
    }
}

impl ExactSolution {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.value)(t, x)
    }

    pub fn control(&self, t: f64, x: f64) -> Option<f64> {
        self.optimal_control.as_ref().map(|c| c(t, x))
    }
}

/// Terminal payoff of the G-heat test: two cosine arcs glued with matching
/// slope, repeated with period `2 pi`. `beta = sigma_hi / sigma_lo`.
pub fn gheat_terminal(beta: f64, x: f64) -> f64 {
    let left = PI / (1.0 + beta);
    let period = 2.0 * PI;
    let y = x - period * ((x + left) / period).floor();
    if y < left {
        2.0 / (1.0 + beta) * ((1.0 + beta) / 2.0 * y).cos()
    } else {
        2.0 * beta / (1.0 + beta)
            * ((1.0 + beta) / (2.0 * beta) * y + (beta - 1.0) / (2.0 * beta) * PI).cos()
    }
}

/// G-heat equation `v_t + G(v_xx) = 0` with no control.
pub fn builtin_gheat(sigma_lo: f64, sigma_hi: f64) -> Result<(ProblemSpec, ExactSolution)> {
    let gp = GParams::new(sigma_lo, sigma_hi)?;
    if sigma_lo == 0.0 {
        return Err(Error::Domain(
            "gheat needs sigma_lo > 0: the payoff shape uses sigma_hi / sigma_lo".into(),
        ));
    }
    let beta = sigma_hi / sigma_lo;
    let horizon = 1.0;
    let spec = ProblemSpec::new("gheat", horizon, ControlSet::singleton(), gp)?
        .with_diffusion(|_, _, _| 1.0)
        .with_terminal(move |x| gheat_terminal(beta, x))
        .with_growth_bound(|_, _, _| CoefficientBounds {
            drift: 0.0,
            diffusion: 1.0,
            quad: 0.0,
        });
    let rho = 0.5 * (sigma_lo + sigma_hi);
    let exact = ExactSolution {
        value: Arc::new(move |t, x| {
            (-rho * rho * (horizon - t) / 2.0).exp() * gheat_terminal(beta, x)
        }),
        optimal_control: None,
    };
    Ok((spec, exact))
}

/// Linear dynamics `dX = (kappa X - a) dt + a dB`, payoff `X_T` plus
/// `int 2 sqrt(a) exp(-r0 s) ds`, controls in `[1/5, 1]`.
pub fn builtin_lq(
    kappa: f64,
    r0: f64,
    sigma_lo: f64,
    sigma_hi: f64,
) -> Result<(ProblemSpec, ExactSolution)> {
    let gp = GParams::new(sigma_lo, sigma_hi)?;
    let gap = kappa - 2.0 * r0;
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::DegenerateParameter(format!(
            "lq needs kappa != 2 r0 (kappa = {kappa}, r0 = {r0})"
        )));
    }
    let horizon = 1.0;
    let (a_lo, a_hi) = (0.2, 1.0);
    let spec = ProblemSpec::new("lq", horizon, ControlSet::interval(a_lo, a_hi)?, gp)?
        .with_drift(move |_, x, a| kappa * x - a)
        .with_diffusion(|_, _, a| a)
        .with_running(move |t, _, a| 2.0 * a.sqrt() * (-r0 * t).exp())
        .with_terminal(|x| x)
        .with_growth_bound(move |_, lo, hi| {
            // |kappa x - a| is extremal at a corner of the box
            let drift = [lo, hi]
                .iter()
                .flat_map(|&x| [a_lo, a_hi].map(|a| (kappa * x - a).abs()))
                .fold(0.0, f64::max);
            CoefficientBounds {
                drift,
                diffusion: a_hi,
                quad: 0.0,
            }
        });
    let exact = ExactSolution {
        value: Arc::new(move |t, x| {
            (kappa * (horizon - t)).exp() * x
                + (-kappa * horizon).exp() / gap * ((gap * horizon).exp() - (gap * t).exp())
        }),
        optimal_control: Some(Arc::new(move |t, _| {
            (2.0 * t * (kappa - r0) - 2.0 * kappa * horizon).exp()
        })),
    };
    Ok((spec, exact))
}

/// State-dependent test with value `v(t, x) = x` and feedback `sin^2(t + x)`.
pub fn builtin_sine(sigma_lo: f64, sigma_hi: f64) -> Result<(ProblemSpec, ExactSolution)> {
    let gp = GParams::new(sigma_lo, sigma_hi)?;
    let spec = ProblemSpec::new("sine", 1.0, ControlSet::interval(0.0, 1.0)?, gp)?
        .with_drift(|t, x, a| 2.0 * a * (t + x).sin().powi(2) - 1.0)
        .with_diffusion(|t, x, _| (t + x).sin().powi(2))
        .with_running(|t, x, a| {
            let c2 = (t + x).cos().powi(2);
            2.0 * c2 - c2 * c2 - a * a
        })
        .with_terminal(|x| x)
        .with_growth_bound(|_, _, _| CoefficientBounds {
            drift: 1.0,
            diffusion: 1.0,
            quad: 0.0,
        });
    let exact = ExactSolution {
        value: Arc::new(|_, x| x),
        optimal_control: Some(Arc::new(|t, x| (t + x).sin().powi(2))),
    };
    Ok((spec, exact))
}

/// Parameter overrides for the named built-ins; `None` takes the
/// problem's default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuiltinParams {
    pub kappa: Option<f64>,
    pub r0: Option<f64>,
    pub sigma_lo: Option<f64>,
    pub sigma_hi: Option<f64>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["gheat", "lq", "sine"];

/// Default `(sigma_lo, sigma_hi)` of a built-in.
pub fn builtin_default_sigmas(name: &str) -> Option<(f64, f64)> {
    match name {
        "gheat" => Some((0.1, 1.0)),
        "lq" | "sine" => Some((0.5, 1.0)),
        _ => None,
    }
}

/// Looks up `"gheat"`, `"lq"` or `"sine"`.
pub fn builtin(name: &str, params: &BuiltinParams) -> Result<(ProblemSpec, ExactSolution)> {
    let (lo, hi) = builtin_default_sigmas(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown problem {name:?}; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))
    })?;
    let lo = params.sigma_lo.unwrap_or(lo);
    let hi = params.sigma_hi.unwrap_or(hi);
    match name {
        "gheat" => builtin_gheat(lo, hi),
        "lq" => builtin_lq(
            params.kappa.unwrap_or(0.5),
            params.r0.unwrap_or(0.03),
            lo,
            hi,
        ),
        _ => builtin_sine(lo, hi),
    }
}

/// Finite-difference residual of the HJB equation
///
/// ```text
/// v_t + max_a [ G(sigma^2 v_xx + 2 h v_x) + b v_x + f ]
/// ```
///
/// at an interior point, with central differences of step `fd_step` and the
/// maximum taken over `control_samples` points of the control set.
pub fn hjb_residual(
    p: &ProblemSpec,
    value: &dyn Fn(f64, f64) -> f64,
    t: f64,
    x: f64,
    fd_step: f64,
    control_samples: usize,
) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step {fd_step} must be positive"
        )));
    }
    if !(t - fd_step >= 0.0 && t + fd_step <= p.horizon) {
        return Err(Error::Domain(format!(
            "t = {t} with step {fd_step} leaves [0, {}]",
            p.horizon
        )));
    }
    let eval = |t: f64, x: f64| -> Result<f64> {
        let v = value(t, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!(
                "value function is not finite at ({t}, {x})"
            )))
        }
    };
    let h = fd_step;
    let centre = eval(t, x)?;
    let (up, down) = (eval(t, x + h)?, eval(t, x - h)?);
    let v_t = (eval(t + h, x)? - eval(t - h, x)?) / (2.0 * h);
    let v_x = (up - down) / (2.0 * h);
    let v_xx = (up - 2.0 * centre + down) / (h * h);

    let mut best = f64::NEG_INFINITY;
    for a in p.controls.sample(control_samples)? {
        let c = p.coefficients(t, x, a);
        if !c.is_finite() {
            return Err(Error::Evaluation { t, x, a });
        }
        let hamiltonian = p
            .gparams
            .g(c.diffusion * c.diffusion * v_xx + 2.0 * c.quad * v_x)
            + c.drift * v_x
            + c.running;
        best = best.max(hamiltonian);
    }
    Ok(v_t + best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn g_function_examples() {
        let gp = GParams::new(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(g_function(&gp, 1.0), 0.5, epsilon = 1e-15);
        assert_eq!(g_function(&gp, 0.0), 0.0);
        assert_abs_diff_eq!(g_function(&gp, -1.0), -0.005, epsilon = 1e-15);
    }

    #[test]
    fn gparams_validation() {
        assert!(GParams::new(0.5, 0.4).is_err());
        assert!(GParams::new(-0.1, 0.4).is_err());
        assert!(GParams::new(0.1, f64::INFINITY).is_err());
        assert!(GParams::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn control_sampling() {
        let set = ControlSet::interval(0.2, 1.0).unwrap();
        assert_eq!(set.sample(1).unwrap(), vec![0.6]);
        let s = set.sample(5).unwrap();
        assert_eq!(s.first(), Some(&0.2));
        assert_eq!(s.last(), Some(&1.0));
        assert_abs_diff_eq!(s[2], 0.6, epsilon = 1e-15);
        assert!(set.sample(0).is_err());
        assert_eq!(ControlSet::singleton().sample(65).unwrap(), vec![0.0]);
        assert!(ControlSet::interval(1.0, 0.0).is_err());
    }

    #[test]
    fn gheat_examples() {
        assert_abs_diff_eq!(gheat_terminal(10.0, 0.0), 2.0 / 11.0, epsilon = 1e-15);
        let (spec, exact) = builtin_gheat(0.1, 1.0).unwrap();
        for x in [-3.0, -0.2, 0.0, 0.4, 2.5, 7.0] {
            assert_abs_diff_eq!(exact.value(1.0, x), spec.terminal(x), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(exact.value(0.0, 0.0), 0.15629687, epsilon = 1e-8);
        assert!(exact.control(0.0, 0.0).is_none());
        assert!(matches!(builtin_gheat(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gheat_terminal_is_periodic_and_c1() {
        let beta = 10.0;
        for x in [-1.3, 0.1, 0.29, 2.0, 5.9] {
            assert_abs_diff_eq!(
                gheat_terminal(beta, x),
                gheat_terminal(beta, x + 2.0 * PI),
                epsilon = 1e-12
            );
        }
        // slope is continuous across the branch joins
        for join in [PI / 11.0, 21.0 * PI / 11.0 - 2.0 * PI] {
            let h = 1e-7;
            let left = (gheat_terminal(beta, join - h) - gheat_terminal(beta, join - 2.0 * h)) / h;
            let right = (gheat_terminal(beta, join + 2.0 * h) - gheat_terminal(beta, join + h)) / h;
            assert_abs_diff_eq!(left, right, epsilon = 1e-4);
        }
    }

    #[test]
    fn lq_examples() {
        let (spec, exact) = builtin_lq(0.5, 0.03, 0.5, 1.0).unwrap();
        let expected = (-0.5f64).exp() / 0.44 * (0.44f64.exp() - 1.0);
        assert_abs_diff_eq!(exact.value(0.0, 0.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(exact.value(0.0, 0.0), 0.76189517, epsilon = 1e-8);
        assert_abs_diff_eq!(exact.control(0.0, 3.0).unwrap(), 0.3678794, epsilon = 5e-8);
        assert_abs_diff_eq!(exact.value(1.0, 2.5), 2.5, epsilon = 1e-15);
        assert_eq!(spec.terminal(1.5), 1.5);
        assert!(matches!(
            builtin_lq(0.06, 0.03, 0.5, 1.0),
            Err(Error::DegenerateParameter(_))
        ));
        for i in 0..=100 {
            let a = exact.control(i as f64 / 100.0, 0.0).unwrap();
            assert!((0.2..=1.0).contains(&a));
        }
    }

    #[test]
    fn sine_examples() {
        let (spec, exact) = builtin_sine(0.5, 1.0).unwrap();
        assert_eq!(exact.value(0.3, 0.7), 0.7);
        assert_eq!(exact.control(0.0, 0.0), Some(0.0));
        assert_abs_diff_eq!(spec.running(0.0, 0.0, 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn builtin_lookup() {
        let (spec, _) = builtin("lq", &BuiltinParams::default()).unwrap();
        assert_eq!(spec.gparams, GParams::new(0.5, 1.0).unwrap());
        let params = BuiltinParams {
            sigma_lo: Some(0.2),
            ..Default::default()
        };
        let (spec, _) = builtin("gheat", &params).unwrap();
        assert_eq!(spec.gparams.sigma_lo, 0.2);
        assert!(matches!(builtin("heat", &params), Err(Error::Config(_))));
    }

    #[test]
    fn residual_of_exact_solutions() {
        let (sine, exact) = builtin_sine(0.5, 1.0).unwrap();
        let r = hjb_residual(&sine, &|t, x| exact.value(t, x), 0.3, 0.2, 1e-4, 201).unwrap();
        assert!(r.abs() <= 1e-4, "sine residual {r}");

        let (heat, exact) = builtin_gheat(0.1, 1.0).unwrap();
        let r = hjb_residual(&heat, &|t, x| exact.value(t, x), 0.5, 0.1, 1e-4, 201).unwrap();
        assert!(r.abs() <= 1e-3, "gheat residual {r}");

        let (lq, exact) = builtin_lq(0.5, 0.03, 0.5, 1.0).unwrap();
        let r = hjb_residual(&lq, &|t, x| exact.value(t, x), 0.4, -0.3, 1e-4, 201).unwrap();
        assert!(r.abs() <= 1e-3, "lq residual {r}");
    }

    #[test]
    fn residual_of_constant_is_zero() {
        let gp = GParams::new(0.3, 0.9).unwrap();
        let p = ProblemSpec::new("c", 1.0, ControlSet::interval(-1.0, 1.0).unwrap(), gp)
            .unwrap()
            .with_drift(|t, x, a| t + x * a)
            .with_diffusion(|_, x, _| 1.0 + x * x)
            .with_quad(|_, _, a| a);
        let r = hjb_residual(&p, &|_, _| 4.2, 0.5, 0.3, 1e-3, 11).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_domain_errors() {
        let (p, exact) = builtin_sine(0.5, 1.0).unwrap();
        let v = |t: f64, x: f64| exact.value(t, x);
        assert!(matches!(
            hjb_residual(&p, &v, 0.0, 0.0, 1e-4, 11),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            hjb_residual(&p, &v, 0.5, 0.0, 0.0, 11),
            Err(Error::Domain(_))
        ));
        let bad = |_: f64, x: f64| x.ln();
        assert!(matches!(
            hjb_residual(&p, &bad, 0.5, -1.0, 1e-4, 11),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sampled_bounds_without_closure() {
        let gp = GParams::new(0.5, 1.0).unwrap();
        let p = ProblemSpec::new("s", 1.0, ControlSet::interval(0.0, 2.0).unwrap(), gp)
            .unwrap()
            .with_drift(|_, x, a| x * a)
            .with_diffusion(|_, _, a| -a);
        let b = p.coefficient_bounds(0.0, -1.0, 3.0, &[0.0, 1.0, 2.0]);
        assert_eq!(b.drift, 6.0);
        assert_eq!(b.diffusion, 2.0);
        assert_eq!(b.quad, 0.0);
    }

    proptest! {
        #[test]
        fn g_is_sublinear(lo in 0.0f64..2.0, span in 0.0f64..2.0, a in -10.0f64..10.0, b in -10.0f64..10.0, lambda in 0.01f64..100.0) {
            let gp = GParams::new(lo, lo + span).unwrap();
            // monotone
            let (small, big) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gp.g(small) <= gp.g(big));
            // positively homogeneous
            let lhs = gp.g(lambda * a);
            let rhs = lambda * gp.g(a);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs().max(f64::MIN_POSITIVE));
            // subadditive
            prop_assert!(gp.g(a + b) <= gp.g(a) + gp.g(b) + 1e-12);
        }

        #[test]
        fn control_samples_symmetric(lo in -5.0f64..5.0, width in 0.0f64..5.0, m in 2usize..300) {
            let hi = lo + width;
            let s = ControlSet::interval(lo, hi).unwrap().sample(m).unwrap();
            prop_assert_eq!(s.len(), m);
            prop_assert_eq!(s[0], lo);
            prop_assert_eq!(s[m - 1], hi);
            let mirrored = ControlSet::interval(-hi, -lo).unwrap().sample(m).unwrap();
            for i in 0..m {
                prop_assert!((s[i] + mirrored[m - 1 - i]).abs() <= 1e-14 * (1.0 + lo.abs() + hi.abs()));
            }
        }
    }
}

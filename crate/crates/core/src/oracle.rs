//! Independent checks on the grid solver.
//!
//! * [`tree_value`] evaluates the scheme by brute-force enumeration of every
//!   branch, with no spatial grid at all.
//! * [`mc_lower_bound`] simulates the Euler process for one fixed constant
//!   volatility and one feedback policy. Each such pair is a member of the
//!   supremum, so its expectation is a lower bound on the value.
//! * [`fit_rate`] is the log-log slope used for convergence tables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::LatticeFamily;
use crate::problem::{ControlSet, ProblemSpec};

pub const TREE_MAX_STEPS: usize = 8;
pub const MC_MIN_PATHS: usize = 100;

/// 32-bit words of keystream reserved per time step of a path.
const WORDS_PER_STEP: u128 = 64;

fn tree_node(
    p: &ProblemSpec,
    fam: &LatticeFamily,
    controls: &[f64],
    delta: f64,
    steps: usize,
    n: usize,
    x: f64,
) -> Result<f64> {
    if n == steps {
        return Ok(p.terminal(x));
    }
    let t = n as f64 * delta;
    let sqrt_delta = delta.sqrt();
    let mut best = f64::NEG_INFINITY;
    for &a in controls {
        let c = p.coefficients(t, x, a);
        if !c.is_finite() {
            return Err(Error::Evaluation { t, x, a });
        }
        for lat in fam.members() {
            let mut expectation = 0.0;
            for (&pt, &w) in lat.points().iter().zip(lat.probs()) {
                let y =
                    x + c.drift * delta + c.diffusion * sqrt_delta * pt + c.quad * delta * pt * pt;
                expectation += w * tree_node(p, fam, controls, delta, steps, n + 1, y)?;
            }
            best = best.max(expectation + c.running * delta);
        }
    }
    Ok(best)
}

/// Exact value of the scheme at `(0, x0)` by depth-first enumeration over
/// all `(control, member, point)` branches. Cost grows like
/// `(controls * members * points)^steps`, hence the step budget.
pub fn tree_value(
    p: &ProblemSpec,
    x0: f64,
    steps: usize,
    fam: &LatticeFamily,
    control_samples: usize,
) -> Result<f64> {
    if steps > TREE_MAX_STEPS {
        return Err(Error::Budget(steps));
    }
    if steps == 0 {
        return Ok(p.terminal(x0));
    }
    let controls = p.controls.sample(control_samples)?;
    let delta = p.horizon / steps as f64;
    tree_node(p, fam, &controls, delta, steps, 0, x0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

fn project(controls: &ControlSet, a: f64) -> f64 {
    match controls {
        ControlSet::Interval { lo, hi } => a.clamp(*lo, *hi),
        ControlSet::Points(points) => *points
            .iter()
            .min_by(|u, v| (*u - a).abs().total_cmp(&(*v - a).abs()))
            .expect("control set is nonempty"),
    }
}

/// Monte Carlo value of one member of the supremum: constant volatility
/// `theta` and the feedback `policy` (projected onto the control set).
///
/// The Euler increments are `dB = theta sqrt(dt) Z` and `d<B> = theta^2 dt`.
/// The normal draw of path `i`, step `k` comes from the ChaCha stream `i`
/// at a fixed offset for `k`, so results depend only on
/// `(seed, paths, steps)` and not on scheduling.
pub fn mc_lower_bound(
    p: &ProblemSpec,
    x0: f64,
    steps: usize,
    theta: f64,
    policy: &(dyn Fn(f64, f64) -> f64 + Sync),
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    let gp = p.gparams;
    if !(theta >= gp.sigma_lo && theta <= gp.sigma_hi) {
        return Err(Error::Domain(format!(
            "theta {theta} outside [{}, {}]",
            gp.sigma_lo, gp.sigma_hi
        )));
    }
    if n_paths < MC_MIN_PATHS {
        return Err(Error::Config(format!(
            "need at least {MC_MIN_PATHS} paths, got {n_paths}"
        )));
    }
    if steps == 0 {
        return Err(Error::Config("number of time steps must be >= 1".into()));
    }
    let delta = p.horizon / steps as f64;
    let noise_scale = theta * delta.sqrt();
    let quad_increment = theta * theta * delta;

    let payoffs: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let mut x = x0;
            let mut running = 0.0;
            for k in 0..steps {
                rng.set_word_pos(k as u128 * WORDS_PER_STEP);
                let z: f64 = StandardNormal.sample(&mut rng);
                let t = k as f64 * delta;
                let a = project(&p.controls, policy(t, x));
                let c = p.coefficients(t, x, a);
                if !c.is_finite() {
                    return Err(Error::Evaluation { t, x, a });
                }
                running += c.running * delta;
                x += c.drift * delta + c.diffusion * noise_scale * z + c.quad * quad_increment;
            }
            Ok(p.terminal(x) + running)
        })
        .collect::<Result<_>>()?;

    let n = n_paths as f64;
    let mean = pairwise_sum(&payoffs) / n;
    let squares: Vec<f64> = payoffs.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = pairwise_sum(&squares) / (n - 1.0);
    Ok(McEstimate {
        mean,
        stderr: (variance / n).sqrt(),
        n_paths,
        seed,
    })
}

/// Least-squares slope of `ln(error)` against `ln(delta)`.
pub fn fit_rate(deltas: &[f64], errors: &[f64]) -> Result<f64> {
    if deltas.len() != errors.len() {
        return Err(Error::RateFit(format!(
            "{} step sizes but {} errors",
            deltas.len(),
            errors.len()
        )));
    }
    if deltas.len() < 2 {
        return Err(Error::RateFit("need at least two points".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::RateFit(format!("error {e} has no logarithm")));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::RateFit(format!("step size {d} has no logarithm")));
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all step sizes are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_family, FamilyKind};
    use crate::problem::{builtin_gheat, GParams};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn tree_abs_payoff_one_step() {
        let (heat, _) = builtin_gheat(0.1, 1.0).unwrap();
        let heat = heat.with_terminal(f64::abs);
        let fam = make_family(FamilyKind::Trinomial, 0.1, 1.0, 0).unwrap();
        assert_eq!(tree_value(&heat, 0.0, 1, &fam, 1).unwrap(), 1.0);
    }

    #[test]
    fn tree_constant_and_budget() {
        let gp = GParams::new(0.3, 0.8).unwrap();
        let p = ProblemSpec::new("c", 1.0, ControlSet::interval(0.0, 1.0).unwrap(), gp)
            .unwrap()
            .with_drift(|_, x, a| a - x)
            .with_diffusion(|_, _, a| a + 0.1)
            .with_terminal(|_| 2.5);
        let fam = make_family(FamilyKind::Trinomial, 0.3, 0.8, 0).unwrap();
        for steps in 0..=4 {
            assert_abs_diff_eq!(
                tree_value(&p, 0.4, steps, &fam, 2).unwrap(),
                2.5,
                epsilon = 1e-14
            );
        }
        assert_eq!(tree_value(&p, 0.0, 9, &fam, 1), Err(Error::Budget(9)));
    }

    #[test]
    fn mc_constant_payoff() {
        let gp = GParams::new(0.3, 0.8).unwrap();
        let p = ProblemSpec::new("c", 1.0, ControlSet::interval(0.0, 1.0).unwrap(), gp)
            .unwrap()
            .with_diffusion(|_, _, a| a)
            .with_terminal(|_| -1.25);
        let est = mc_lower_bound(&p, 0.0, 8, 0.5, &|_, _| 0.7, 1000, 9).unwrap();
        assert_abs_diff_eq!(est.mean, -1.25, epsilon = 1e-14);
        assert!(est.stderr < 1e-14);
        assert_eq!((est.n_paths, est.seed), (1000, 9));
    }

    #[test]
    fn mc_is_reproducible_and_seed_sensitive() {
        let (heat, _) = builtin_gheat(0.1, 1.0).unwrap();
        let a = mc_lower_bound(&heat, 0.0, 16, 0.6, &|_, _| 0.0, 2000, 1).unwrap();
        let b = mc_lower_bound(&heat, 0.0, 16, 0.6, &|_, _| 0.0, 2000, 1).unwrap();
        let c = mc_lower_bound(&heat, 0.0, 16, 0.6, &|_, _| 0.0, 2000, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.mean, c.mean);
        // a path's draws do not depend on how many paths are simulated
        let short = mc_lower_bound(&heat, 0.0, 16, 0.6, &|_, _| 0.0, 1000, 1).unwrap();
        assert_ne!(short.mean, a.mean);
    }

    #[test]
    fn mc_gaussian_moments() {
        // pure diffusion with payoff x^2: E = theta^2 T
        let gp = GParams::new(0.5, 1.0).unwrap();
        let p = ProblemSpec::new("bm", 1.0, ControlSet::singleton(), gp)
            .unwrap()
            .with_diffusion(|_, _, _| 1.0)
            .with_terminal(|x| x * x);
        let est = mc_lower_bound(&p, 0.0, 10, 0.8, &|_, _| 0.0, 40_000, 5).unwrap();
        assert!((est.mean - 0.64).abs() < 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn mc_argument_errors() {
        let (heat, _) = builtin_gheat(0.1, 1.0).unwrap();
        assert!(matches!(
            mc_lower_bound(&heat, 0.0, 4, 1.5, &|_, _| 0.0, 1000, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            mc_lower_bound(&heat, 0.0, 4, 0.5, &|_, _| 0.0, 99, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn projection() {
        assert_eq!(
            project(&ControlSet::Interval { lo: 0.2, hi: 1.0 }, 1.7),
            1.0
        );
        assert_eq!(
            project(&ControlSet::Interval { lo: 0.2, hi: 1.0 }, 0.5),
            0.5
        );
        assert_eq!(project(&ControlSet::Points(vec![0.0, 1.0, 3.0]), 1.9), 1.0);
    }

    #[test]
    fn rate_examples() {
        let deltas = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        assert_abs_diff_eq!(
            fit_rate(&deltas, &[0.4, 0.2, 0.1]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(fit_rate(&deltas, &[0.3; 3]).unwrap(), 0.0, epsilon = 1e-12);

        let n = [16.0, 32.0, 64.0, 128.0, 256.0];
        let deltas: Vec<f64> = n.iter().map(|n| 1.0 / n).collect();
        let table = [3.217e-3, 1.684e-3, 8.693e-4, 4.405e-4, 2.226e-4];
        let rate = fit_rate(&deltas, &table).unwrap();
        assert!((rate - 0.964).abs() <= 0.005, "rate {rate}");
    }

    #[test]
    fn rate_errors() {
        assert!(fit_rate(&[0.1], &[0.1]).is_err());
        assert!(fit_rate(&[0.1, 0.05], &[0.1, 0.0]).is_err());
        assert!(fit_rate(&[0.1, 0.05], &[0.1, -1.0]).is_err());
        assert!(fit_rate(&[0.1, 0.1], &[0.1, 0.2]).is_err());
        assert!(fit_rate(&[0.1, 0.05, 0.01], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_abs_diff_eq!(pairwise_sum(&v), v.iter().sum::<f64>(), epsilon = 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn rate_is_scale_invariant(
            errors in proptest::collection::vec(1e-8f64..1.0, 2..8),
            scale in 1e-3f64..1e3,
        ) {
            let deltas: Vec<f64> = (0..errors.len()).map(|i| 0.5f64.powi(i as i32 + 2)).collect();
            let scaled: Vec<f64> = errors.iter().map(|e| e * scale).collect();
            let a = fit_rate(&deltas, &errors).unwrap();
            let b = fit_rate(&deltas, &scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

//! Discrete stand-ins for the G-Brownian increment.
//!
//! A [`Lattice`] is a finite, zero-mean random variable pinned to one
//! volatility level. A [`LatticeFamily`] collects lattices whose second
//! moments span `[sigma_lo^2, sigma_hi^2]`; the backward scheme takes the
//! supremum over its members at every node.
//!
//! Two constructions are provided:
//!
//! * trinomial: points `(-1, 0, 1)` with weights `(s^2/2, 1 - s^2, s^2/2)`,
//!   valid for `0 <= s <= 1`;
//! * Gauss-Hermite: points `s * sqrt(2) * x_i` with weights `A_i / sqrt(pi)`,
//!   where `(x_i, A_i)` is the L-point rule for the weight `exp(-x^2)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_GH_ORDER: usize = 64;

/// Nodes and weights of an L-point Gauss-Hermite rule (weight `exp(-x^2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Roots, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i A_i f(x_i)`, approximating `int f(x) exp(-x^2) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Orthonormal Hermite values `(h_L(z), h_{L-1}(z))` for the weight `exp(-x^2)`.
fn hermite_pair(order: usize, z: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for j in 1..=order {
        let jf = j as f64;
        let next = z * (2.0 / jf).sqrt() * cur - ((jf - 1.0) / jf).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Computes the L-point Gauss-Hermite rule.
///
/// Initial roots come from the eigenvalues of the symmetric Jacobi matrix
/// (zero diagonal, off-diagonal `sqrt(k/2)`). Each root is then polished by
/// Newton steps on the orthonormal recurrence, and the weights are taken
/// from the Christoffel formula `A_i = 2 / h'_L(x_i)^2`, which keeps the
/// tiny outer weights accurate for large L.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    if order > MAX_GH_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }

    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let mut roots: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    roots.sort_by(f64::total_cmp);

    let deriv_scale = (2.0 * order as f64).sqrt();
    let mut weights = Vec::with_capacity(order);
    for root in roots.iter_mut() {
        let mut z = *root;
        for _ in 0..20 {
            let (h, h_prev) = hermite_pair(order, z);
            let step = h / (deriv_scale * h_prev);
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        *root = z;
        let (_, h_prev) = hermite_pair(order, z);
        let deriv = deriv_scale * h_prev;
        weights.push(2.0 / (deriv * deriv));
    }

    // Exact symmetry about the origin.
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let x = 0.5 * (roots[j] - roots[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        roots[i] = -x;
        roots[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if order % 2 == 1 {
        roots[order / 2] = 0.0;
    }

    Ok(QuadratureRule {
        nodes: roots,
        weights,
    })
}

/// A finite zero-mean random variable with second moment `sigma_level^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    points: Vec<f64>,
    probs: Vec<f64>,
    sigma_level: f64,
}

impl Lattice {
    /// Builds a lattice from raw data, checking the distribution invariants:
    /// nonnegative probabilities summing to one, zero mean, and second
    /// moment equal to `sigma_level^2`.
    pub fn new(points: Vec<f64>, probs: Vec<f64>, sigma_level: f64) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::Domain(format!(
                "lattice needs matching nonempty points/probs, got {} and {}",
                points.len(),
                probs.len()
            )));
        }
        if !(sigma_level >= 0.0 && sigma_level.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma level {sigma_level} must be finite and >= 0"
            )));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Domain(
                "lattice probabilities must lie in [0, 1]".into(),
            ));
        }
        let lattice = Self {
            points,
            probs,
            sigma_level,
        };
        let mass = lattice.moment(0);
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {mass}, not 1")));
        }
        let mean = lattice.moment(1);
        if mean.abs() > 1e-12 {
            return Err(Error::Domain(format!("lattice mean {mean} is not zero")));
        }
        let second = lattice.moment(2);
        if (second - sigma_level * sigma_level).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "second moment {second} does not match sigma level {sigma_level}"
            )));
        }
        Ok(lattice)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sigma_level(&self) -> f64 {
        self.sigma_level
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sum_i probs_i * points_i^k`.
    pub fn moment(&self, k: u32) -> f64 {
        lattice_moment(self, k)
    }

    pub fn max_abs_point(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.abs()))
    }
}

/// Terms are added in mirrored pairs `(i, n - 1 - i)` first, so odd
/// moments of a symmetric lattice cancel exactly instead of leaving the
/// rounding residue of large high-degree terms.
pub fn lattice_moment(lat: &Lattice, k: u32) -> f64 {
    let term = |i: usize| lat.probs[i] * lat.points[i].powi(k as i32);
    let n = lat.points.len();
    let mut total: f64 = (0..n / 2).map(|i| term(i) + term(n - 1 - i)).sum();
    if n % 2 == 1 {
        total += term(n / 2);
    }
    total
}

/// Trinomial lattice: points `(-1, 0, 1)`, weights `(s^2/2, 1 - s^2, s^2/2)`.
pub fn make_trinomial_lattice(sigma: f64) -> Result<Lattice> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "trinomial volatility {sigma} must be >= 0"
        )));
    }
    if sigma > 1.0 {
        return Err(Error::InvalidVolatility(sigma));
    }
    let s2 = sigma * sigma;
    Ok(Lattice {
        points: vec![-1.0, 0.0, 1.0],
        probs: vec![0.5 * s2, 1.0 - s2, 0.5 * s2],
        sigma_level: sigma,
    })
}

/// Gauss-Hermite lattice: points `sigma * sqrt(2) * x_i`, weights `A_i / sqrt(pi)`.
pub fn make_gh_lattice(rule: &QuadratureRule, sigma: f64) -> Result<Lattice> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "volatility {sigma} must be finite and >= 0"
        )));
    }
    let scale = sigma * std::f64::consts::SQRT_2;
    let norm = PI.sqrt();
    Ok(Lattice {
        points: rule.nodes.iter().map(|&x| scale * x).collect(),
        probs: rule.weights.iter().map(|&a| a / norm).collect(),
        sigma_level: sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Trinomial,
    GaussHermite(usize),
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyKind::Trinomial => write!(f, "trinomial"),
            FamilyKind::GaussHermite(l) => write!(f, "gauss_hermite({l})"),
        }
    }
}

/// The finite parameter set the scheme maximizes over.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFamily {
    members: Vec<Lattice>,
    sigma_lo: f64,
    sigma_hi: f64,
    kind: FamilyKind,
}

impl LatticeFamily {
    pub fn members(&self) -> &[Lattice] {
        &self.members
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn sigma_levels(&self) -> Vec<f64> {
        self.members.iter().map(Lattice::sigma_level).collect()
    }

    /// Largest `|point|` over every member, zero-probability points included.
    pub fn max_abs_point(&self) -> f64 {
        self.members
            .iter()
            .fold(0.0, |m, lat| m.max(lat.max_abs_point()))
    }

    /// `(min, max)` of the members' second moments.
    pub fn second_moment_range(&self) -> (f64, f64) {
        self.members
            .iter()
            .map(|lat| lat.moment(2))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                (lo.min(m), hi.max(m))
            })
    }
}

/// Builds the family at levels `sigma_lo`, `extra_levels` equally spaced
/// interior levels, and `sigma_hi`, in increasing order. A degenerate
/// interval `sigma_lo == sigma_hi` gives a single member.
pub fn make_family(
    kind: FamilyKind,
    sigma_lo: f64,
    sigma_hi: f64,
    extra_levels: usize,
) -> Result<LatticeFamily> {
    if !(sigma_lo >= 0.0 && sigma_lo <= sigma_hi && sigma_hi.is_finite()) {
        return Err(Error::Domain(format!(
            "volatility bounds must satisfy 0 <= sigma_lo <= sigma_hi < inf, got [{sigma_lo}, {sigma_hi}]"
        )));
    }
    let levels: Vec<f64> = if sigma_lo == sigma_hi {
        vec![sigma_lo]
    } else {
        let step = (sigma_hi - sigma_lo) / (extra_levels + 1) as f64;
        (0..=extra_levels + 1)
            .map(|i| match i {
                0 => sigma_lo,
                i if i == extra_levels + 1 => sigma_hi,
                i => sigma_lo + step * i as f64,
            })
            .collect()
    };
    let members = match kind {
        FamilyKind::Trinomial => levels
            .iter()
            .map(|&s| make_trinomial_lattice(s))
            .collect::<Result<Vec<_>>>()?,
        FamilyKind::GaussHermite(order) => {
            let rule = gauss_hermite_rule(order)?;
            levels
                .iter()
                .map(|&s| make_gh_lattice(&rule, s))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(LatticeFamily {
        members,
        sigma_lo,
        sigma_hi,
        kind,
    })
}

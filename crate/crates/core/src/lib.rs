//! Numerical schemes for stochastic optimal control driven by a
//! G-Brownian motion (volatility known only to lie in an interval).
//!
//! The value function is approximated by a backward recursion in which the
//! G-Brownian increment over one time step is replaced by a finite family
//! of zero-mean lattices (trinomial or Gauss-Hermite), one per volatility
//! level, and the recursion takes the supremum over both the controls and
//! the family:
//!
//! ```
//! use gsocp::{builtin_gheat, solve, FamilyKind, SolverConfig};
//!
//! let (problem, exact) = builtin_gheat(0.1, 1.0)?;
//! let cfg = SolverConfig::new(16, FamilyKind::Trinomial);
//! let result = solve(&problem, 0.0, &cfg)?;
//! let error = (result.value_at_start - exact.value(0.0, 0.0)).abs();
//! assert!(error < 4e-3);
//! # Ok::<(), gsocp::Error>(())
//! ```
//!
//! Modules:
//!
//! * [`lattice`]: Gauss-Hermite rules and the lattice families;
//! * [`problem`]: controlled dynamics, the G function, built-in examples
//!   with closed-form solutions and an HJB residual check;
//! * [`grid`]: spatial grids, value fields and interpolation;
//! * [`solver`]: the backward dynamic-programming sweep;
//! * [`oracle`]: brute-force tree evaluation, Monte Carlo lower bounds and
//!   convergence-rate fitting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod lattice;
pub mod oracle;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{
    interpolate, reachable_domain, ClampCounter, Grid1D, Interp, PolicyEntry, ValueField,
};
pub use lattice::{
    gauss_hermite_rule, lattice_moment, make_family, make_gh_lattice, make_trinomial_lattice,
    FamilyKind, Lattice, LatticeFamily, QuadratureRule,
};
pub use oracle::{fit_rate, mc_lower_bound, tree_value, McEstimate};
pub use problem::{
    builtin, builtin_gheat, builtin_lq, builtin_sine, g_function, hjb_residual, BuiltinParams,
    ControlSet, ExactSolution, GParams, ProblemSpec,
};
pub use solver::{backward_step, extract_policy, solve, successor, SolveResult, SolverConfig};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
}

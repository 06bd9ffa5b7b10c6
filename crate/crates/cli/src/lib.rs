//! Batch front-end for the `gsocp` solver: convergence tables, single
//! solves, HJB residual checks and Monte Carlo lower bounds.

pub mod config;
pub mod report;
pub mod run;

pub use config::{resolve, FileConfig, Flags, Mode, RunConfig};
pub use report::{ConvergenceReport, ReportRow};
pub use run::{run_converge, run_oracle, run_residual, run_solve};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/convergence.md")]
mod book_convergence {}

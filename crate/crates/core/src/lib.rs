//! Stochastic forward-backward splitting for monotone inclusions
//! 0 ∈ Aw + Bw, where A is maximal monotone (accessed through its
//! resolvent) and B is cocoercive but only observed through unbiased noisy
//! estimates.
//!
//! The crate provides the solver, the operator and oracle catalogs, the
//! closed-form non-asymptotic bounds on E‖wₙ − w̄‖², an averaged variant for
//! variational inequalities with a merit-gap estimator, and a Monte Carlo
//! harness that fits empirical rates and compares them to the bounds.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod ergodic;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod problem;
pub mod random;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{dot, Matrix, Point};
pub use random::{derive_stream, RandomStream, SeedSpec};

//! Fixed-point iterations obtained from online regret minimizers.
//!
//! Feeding a regret minimizer the payoffs `u_t = γ_t (F(x_t) - x_t)` turns it into a
//! fixed-point method: online gradient descent gives Krasnoselskii-Mann, and the
//! AdaGrad family gives iterations that adapt to the best scalar or matrix
//! rescaling of `F` without knowing it.

pub mod error;
pub mod fixedpoint;
pub mod linalg;
pub mod metric;
pub mod operators;
pub mod par;
pub mod problems;
pub mod projections;
pub mod regret;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metric::{Metric, SpdMatrix};
pub use operators::{Operator, Residual};
pub use projections::Domain;
pub use regret::{RegretMinimizer, RmKind, Schedule};

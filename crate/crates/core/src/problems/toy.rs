//! `F(x) = Mx` with `M = diag(-α, 1 - ε)`. For `α > 1` the map is not nonexpansive,
//! yet `F_A = -I` for `A = diag((1 + α)/2, ε/2)`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metric::Metric;
use crate::operators::LinearOperator;

fn check(alpha: f64, epsilon: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

pub fn toy_matrix(alpha: f64, epsilon: f64) -> Result<Matrix> {
    check(alpha, epsilon)?;
    Ok(Matrix::from_diag(&[-alpha, 1.0 - epsilon]))
}

pub fn toy_operator(alpha: f64, epsilon: f64) -> Result<LinearOperator> {
    Ok(LinearOperator::new(toy_matrix(alpha, epsilon)?)?.with_label(format!("toy(alpha={alpha}, epsilon={epsilon})")))
}

/// The diagonal metric turning the toy operator into `-I`.
pub fn toy_metric(alpha: f64, epsilon: f64) -> Result<Metric> {
    check(alpha, epsilon)?;
    Metric::diagonal(vec![(1.0 + alpha) / 2.0, epsilon / 2.0])
}

/// Smallest `L` for which the toy operator is `L`-nonexpansive.
pub fn toy_l(alpha: f64) -> f64 {
    (1.0 + alpha) / 2.0
}

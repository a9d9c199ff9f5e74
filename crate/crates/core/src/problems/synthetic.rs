//! Seeded linear operators with a prescribed fixed point and a known nonexpansiveness
//! structure, used by the bound suites.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::metric::SpdMatrix;
use crate::operators::LinearOperator;
use crate::rng::SeededRng;

/// Haar-like orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(d: usize, rng: &mut SeededRng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = rng.normal_vec(d);
        for _ in 0..2 {
            for c in &cols {
                let p = dot(&v, c);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= p * ci;
                }
            }
        }
        let n = norm2(&v);
        if n > 1e-8 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    Matrix::from_fn(d, d, |i, j| cols[j][i])
}

/// `(I + Q)/2` for a random orthogonal `Q`: firmly nonexpansive.
pub fn random_averaged(d: usize, rng: &mut SeededRng) -> Matrix {
    let q = random_orthogonal(d, rng);
    Matrix::from_fn(d, d, |i, j| 0.5 * (q[(i, j)] + if i == j { 1.0 } else { 0.0 }))
}

/// SPD matrix `Qᵀ diag(λ) Q` with eigenvalues drawn log-uniformly in `[lo, hi]`.
pub fn random_spd(d: usize, lo: f64, hi: f64, rng: &mut SeededRng) -> Result<SpdMatrix> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!("eigenvalue range [{lo}, {hi}] must be positive")));
    }
    let q = random_orthogonal(d, rng);
    let lambdas: Vec<f64> = (0..d).map(|_| (rng.uniform_in(lo.ln(), hi.ln())).exp()).collect();
    let m = Matrix::from_fn(d, d, |i, j| (0..d).map(|k| q[(i, k)] * lambdas[k] * q[(j, k)]).sum());
    SpdMatrix::new(m.symmetrized())
}

pub fn random_positive_diagonal(d: usize, lo: f64, hi: f64, rng: &mut SeededRng) -> Vec<f64> {
    (0..d).map(|_| (rng.uniform_in(lo.ln(), hi.ln())).exp()).collect()
}

fn affine_around(b: Matrix, x_star: &[f64], label: String) -> Result<LinearOperator> {
    Ok(LinearOperator::around(b, x_star)?.with_label(label))
}

/// `F(x) = x* + (I + L(N - I))(x - x*)` with `N` firmly nonexpansive, so that
/// `I + (F - I)/L` is nonexpansive and `x*` is a fixed point.
pub fn l_nonexpansive(d: usize, l: f64, x_star: &[f64], rng: &mut SeededRng) -> Result<LinearOperator> {
    check_dim(d, x_star.len())?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("L must be positive, got {l}")));
    }
    let n = random_averaged(d, rng);
    let b = Matrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + l * (n[(i, j)] - id)
    });
    affine_around(b, x_star, format!("l_nonexpansive(L={l})"))
}

/// `F(x) = x* + (I + A(N - I))(x - x*)` with `N = A^{-1/2} N₀ A^{1/2}` and `N₀` firmly
/// nonexpansive, so that `F_A = I + A⁻¹(F - I) = N` is nonexpansive in `‖·‖_A`.
pub fn a_nonexpansive(a: &SpdMatrix, x_star: &[f64], rng: &mut SeededRng) -> Result<LinearOperator> {
    let d = a.dim();
    check_dim(d, x_star.len())?;
    let n0 = random_averaged(d, rng);
    let n = a.inv_sqrt().matmul(&n0)?.matmul(&a.sqrt())?;
    let id = Matrix::identity(d);
    let b = id.add(&a.matrix().matmul(&n.sub(&id)?)?)?;
    affine_around(b, x_star, "a_nonexpansive".to_string())
}

/// Diagonal-metric variant of `a_nonexpansive`.
pub fn a_nonexpansive_diagonal(a: &[f64], x_star: &[f64], rng: &mut SeededRng) -> Result<LinearOperator> {
    let spd = SpdMatrix::new(Matrix::from_diag(a))?;
    a_nonexpansive(&spd, x_star, rng)
}

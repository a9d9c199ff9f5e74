//! Scaling objects `A` and the Mahalanobis geometry they induce:
//! `⟨x, y⟩_A = xᵀAy`, `‖x‖_A`, the dual norm `‖x‖_{A⁻¹}` and PSD square roots.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, sym_eigen, Matrix, SymEigen};

/// Symmetric positive definite matrix with its eigendecomposition cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: Matrix,
    eigen: SymEigen,
}

impl SpdMatrix {
    /// Validates symmetry (`1e-12` relative) and positivity of every eigenvalue.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        let asym = matrix.asymmetry();
        if asym > 1e-12 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let matrix = matrix.symmetrized();
        let eigen = sym_eigen(&matrix)?;
        let min = eigen.min_value();
        if min.is_nan() || min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(SpdMatrix { matrix, eigen })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &SymEigen {
        &self.eigen
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// `A⁻¹ v` through the cached spectral decomposition.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.eigen.apply(v, |l| 1.0 / l)
    }

    pub fn sqrt(&self) -> Matrix {
        self.eigen.reconstruct(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> Matrix {
        self.eigen.reconstruct(|l| 1.0 / l.sqrt())
    }

    pub fn inverse(&self) -> Matrix {
        self.eigen.reconstruct(|l| 1.0 / l)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen.max_value()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen.min_value()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(SpdMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub trace: f64,
    pub lambda_max: f64,
}

impl Metric {
    pub fn scalar(l: f64) -> Result<Self> {
        let m = Metric::Scalar(l);
        m.validate()?;
        Ok(m)
    }

    pub fn diagonal(a: Vec<f64>) -> Result<Self> {
        let m = Metric::Diagonal(a);
        m.validate()?;
        Ok(m)
    }

    pub fn full(a: Matrix) -> Result<Self> {
        Ok(Metric::Full(SpdMatrix::new(a)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Metric::Euclidean | Metric::Full(_) => Ok(()),
            Metric::Scalar(l) => {
                if l.is_finite() && *l > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("scalar metric must be positive, got {l}")))
                }
            }
            Metric::Diagonal(a) => match a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                None => Ok(()),
                Some(v) => Err(Error::InvalidParameter(format!("diagonal metric entry must be positive, got {v}"))),
            },
        }
    }

    /// Fixed dimension of the metric, if it carries one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Metric::Euclidean | Metric::Scalar(_) => None,
            Metric::Diagonal(a) => Some(a.len()),
            Metric::Full(a) => Some(a.dim()),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        self.validate()?;
        if let Some(d) = self.dim() {
            check_dim(d, n)?;
        }
        Ok(())
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        Ok(match self {
            Metric::Euclidean => v.to_vec(),
            Metric::Scalar(l) => v.iter().map(|x| l * x).collect(),
            Metric::Diagonal(a) => v.iter().zip(a).map(|(x, ai)| ai * x).collect(),
            Metric::Full(a) => a.mul_vec(v),
        })
    }

    /// `A⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        Ok(match self {
            Metric::Euclidean => v.to_vec(),
            Metric::Scalar(l) => v.iter().map(|x| x / l).collect(),
            Metric::Diagonal(a) => v.iter().zip(a).map(|(x, ai)| x / ai).collect(),
            Metric::Full(a) => a.solve(v),
        })
    }

    /// `⟨x, A y⟩`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        let ay = self.apply(y)?;
        Ok(dot(x, &ay))
    }

    /// `‖x‖_A`, or `‖x‖_{A⁻¹}` when `inverse` is set.
    pub fn norm(&self, x: &[f64], inverse: bool) -> Result<f64> {
        let ax = if inverse { self.apply_inverse(x)? } else { self.apply(x)? };
        Ok(dot(x, &ax).max(0.0).sqrt())
    }

    /// Trace and largest eigenvalue of `A` in dimension `dim`.
    pub fn stats(&self, dim: usize) -> Result<MetricStats> {
        self.check(dim)?;
        Ok(match self {
            Metric::Euclidean => MetricStats { trace: dim as f64, lambda_max: 1.0 },
            Metric::Scalar(l) => MetricStats { trace: l * dim as f64, lambda_max: *l },
            Metric::Diagonal(a) => MetricStats {
                trace: a.iter().sum(),
                lambda_max: a.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            },
            Metric::Full(a) => MetricStats { trace: a.trace(), lambda_max: a.lambda_max() },
        })
    }

    /// Per-coordinate weights when the metric is diagonal in the canonical basis.
    pub fn diagonal_weights(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            Metric::Euclidean => Some(vec![1.0; dim]),
            Metric::Scalar(l) => Some(vec![*l; dim]),
            Metric::Diagonal(a) => Some(a.clone()),
            Metric::Full(_) => None,
        }
    }

    /// Dense `A` in dimension `dim`.
    pub fn to_matrix(&self, dim: usize) -> Result<Matrix> {
        self.check(dim)?;
        Ok(match self {
            Metric::Full(a) => a.matrix().clone(),
            other => Matrix::from_diag(&other.diagonal_weights(dim).unwrap_or_default()),
        })
    }
}

/// Principal square root of a symmetric PSD matrix. Eigenvalues in
/// `[-1e-12·max(1, max|λ|), 0)` are clamped to zero; more negative ones are rejected.
pub fn sqrt_psd(s: &Matrix) -> Result<Matrix> {
    let e = psd_eigen(s)?;
    Ok(e.reconstruct(|l| l.max(0.0).sqrt()))
}

/// Eigendecomposition of a PSD matrix with the tiny-negative clamp applied.
pub fn psd_eigen(s: &Matrix) -> Result<SymEigen> {
    let mut e = sym_eigen(s)?;
    let scale = e.values.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let min = e.min_value();
    if min < -1e-12 * scale {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    for l in e.values.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    Ok(e)
}

/// `Tr(S^{1/2})` for symmetric PSD `S`.
pub fn trace_sqrt(s: &Matrix) -> Result<f64> {
    Ok(psd_eigen(s)?.values.iter().map(|l| l.sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_examples() {
        assert_eq!(Metric::Euclidean.inner(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let d = Metric::diagonal(vec![2.0, 3.0]).unwrap();
        assert_eq!(d.inner(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 5.0);
    }

    #[test]
    fn scalar_norms() {
        let m = Metric::scalar(4.0).unwrap();
        assert_eq!(m.norm(&[3.0, 4.0], false).unwrap(), 10.0);
        assert_eq!(m.norm(&[3.0, 4.0], true).unwrap(), 2.5);
    }

    #[test]
    fn apply_inverse_examples() {
        assert_eq!(Metric::Scalar(2.0).apply_inverse(&[4.0, 6.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(Metric::Diagonal(vec![2.0, 4.0]).apply_inverse(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn stats_examples() {
        let s = Metric::Diagonal(vec![1.0, 2.0, 3.0]).stats(3).unwrap();
        assert_eq!((s.trace, s.lambda_max), (6.0, 3.0));
        let s = Metric::Scalar(5.0).stats(4).unwrap();
        assert_eq!((s.trace, s.lambda_max), (20.0, 5.0));
    }

    #[test]
    fn invalid_metrics_are_rejected() {
        assert!(Metric::scalar(0.0).is_err());
        assert!(Metric::diagonal(vec![1.0, -1.0]).is_err());
        assert!(Metric::Diagonal(vec![1.0, 0.0]).apply_inverse(&[1.0, 1.0]).is_err());
        let not_pd = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(Metric::full(not_pd), Err(Error::NotPositiveDefinite { .. })));
        assert!(Metric::Diagonal(vec![1.0; 3]).norm(&[1.0, 2.0], false).is_err());
    }

    #[test]
    fn sqrt_psd_examples() {
        let r = sqrt_psd(&Matrix::identity(3)).unwrap();
        assert!(r.sub(&Matrix::identity(3)).unwrap().frobenius_norm() < 1e-15);
        let r = sqrt_psd(&Matrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-15 && (r[(1, 1)] - 3.0).abs() < 1e-15);
        assert_eq!(r[(0, 1)], 0.0);
    }

    #[test]
    fn sqrt_psd_clamps_rank_deficient() {
        let u = [1.0, 2.0, -1.0];
        let mut s = Matrix::zeros(3, 3);
        s.add_outer(1.0, &u);
        let r = sqrt_psd(&s).unwrap();
        let rr = r.matmul(&r).unwrap();
        assert!(rr.sub(&s).unwrap().frobenius_norm() / s.frobenius_norm() < 1e-9);
        assert!(sqrt_psd(&Matrix::from_diag(&[1.0, -1e-3])).is_err());
    }
}

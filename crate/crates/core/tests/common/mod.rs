#![allow(dead_code)]

use adafix::linalg::Matrix;
use adafix::rng::SeededRng;
use nalgebra::{DMatrix, DVector};

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn vec_na(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// SPD matrix `BᵀB + c I` from a Gaussian `B`, built with nalgebra.
pub fn random_spd_na(d: usize, c: f64, rng: &mut SeededRng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.normal());
    let s = b.transpose() * &b + DMatrix::identity(d, d) * c;
    (&s + s.transpose()) * 0.5
}

pub fn random_psd_na(d: usize, rank: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(rank, d, |_, _| rng.normal());
    let s = b.transpose() * &b;
    (&s + s.transpose()) * 0.5
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Minimizer of `Σ a_i (x_i - y_i)²` over the simplex by enumerating supports and
/// solving each KKT system in closed form.
pub fn simplex_active_set_oracle(y: &[f64], a: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        // x_i = y_i - μ/a_i on the support, Σ x_i = 1.
        let sy: f64 = support.iter().map(|&i| y[i]).sum();
        let sa: f64 = support.iter().map(|&i| 1.0 / a[i]).sum();
        let mu = (sy - 1.0) / sa;
        let mut x = vec![0.0; d];
        let mut ok = true;
        for &i in &support {
            x[i] = y[i] - mu / a[i];
            if x[i] < -1e-14 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let obj: f64 = (0..d).map(|i| a[i] * (x[i] - y[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.expect("some support is feasible").1
}

pub fn random_simplex_point(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.uniform()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

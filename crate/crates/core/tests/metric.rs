mod common;

use adafix::linalg::Matrix;
use adafix::metric::{sqrt_psd, trace_sqrt, Metric, SpdMatrix};
use adafix::regret::lemmas::{full_minimizer, full_objective, klein_gap};
use adafix::rng::SeededRng;
use common::*;
use proptest::prelude::*;

fn full_metric(d: usize, seed: u64) -> (Metric, nalgebra::DMatrix<f64>) {
    let mut rng = SeededRng::new(seed);
    let a = random_spd_na(d, 0.5, &mut rng);
    (Metric::full(from_na(&a)).unwrap(), a)
}

#[test]
fn full_inner_matches_dense_matvec() {
    for seed in 0..20 {
        let (m, a) = full_metric(6, seed);
        let mut rng = SeededRng::new(100 + seed);
        let x = rng.normal_vec(6);
        let y = rng.normal_vec(6);
        let oracle = vec_na(&x).dot(&(&a * vec_na(&y)));
        assert!(rel(m.inner(&x, &y).unwrap(), oracle) < 1e-12);
    }
}

#[test]
fn full_dual_norm_matches_dense_solve() {
    for seed in 0..20 {
        let (m, a) = full_metric(5, seed);
        let x = SeededRng::new(7 + seed).normal_vec(5);
        let sol = a.clone().lu().solve(&vec_na(&x)).unwrap();
        let oracle = vec_na(&x).dot(&sol).sqrt();
        assert!(rel(m.norm(&x, true).unwrap(), oracle) < 1e-10);
    }
}

#[test]
fn apply_inverse_round_trips() {
    for seed in 0..20 {
        let (m, _) = full_metric(7, seed);
        let v = SeededRng::new(seed).normal_vec(7);
        let back = m.apply(&m.apply_inverse(&v).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &v) <= 1e-10 * v.iter().fold(1.0f64, |a, b| a.max(b.abs())));
    }
}

#[test]
fn lambda_max_matches_power_iteration() {
    for seed in 0..10 {
        let (m, a) = full_metric(6, seed);
        let mut v = vec_na(&[1.0; 6]);
        let mut lam = 0.0;
        for _ in 0..5000 {
            let w = &a * &v;
            lam = w.norm() / v.norm();
            v = w.normalize();
        }
        let stats = m.stats(6).unwrap();
        assert!(rel(stats.lambda_max, lam) < 1e-8);
        assert!(stats.lambda_max <= stats.trace);
        assert!(rel(stats.trace, a.trace()) < 1e-12);
    }
}

#[test]
fn sqrt_of_gram_matrix_squares_back() {
    for seed in 0..10 {
        let mut rng = SeededRng::new(seed);
        let s = random_psd_na(8, 8, &mut rng);
        let r = to_na(&sqrt_psd(&from_na(&s)).unwrap());
        let err = (&r * &r - &s).norm() / s.norm();
        assert!(err <= 1e-9, "{err}");
        assert!((&r - r.transpose()).norm() < 1e-12 * r.norm());
    }
}

#[test]
fn sqrt_is_monotone_on_diagonals() {
    let mut rng = SeededRng::new(4);
    for _ in 0..100 {
        let d1 = rng.uniform_vec(5, 0.0, 4.0);
        let d2: Vec<f64> = d1.iter().map(|v| v + rng.uniform_in(0.0, 2.0)).collect();
        let r1 = sqrt_psd(&Matrix::from_diag(&d1)).unwrap().diagonal();
        let r2 = sqrt_psd(&Matrix::from_diag(&d2)).unwrap().diagonal();
        assert!(r1.iter().zip(&r2).all(|(a, b)| a <= b));
    }
}

#[test]
fn klein_trace_inequality_on_random_pairs() {
    let mut rng = SeededRng::new(11);
    for _ in 0..1000 {
        let a = from_na(&random_spd_na(4, 0.05, &mut rng));
        let b = SpdMatrix::new(from_na(&random_spd_na(4, 0.05, &mut rng))).unwrap();
        assert!(klein_gap(&a, &b).unwrap() >= -1e-9);
    }
}

#[test]
fn infimum_over_full_metrics() {
    let mut rng = SeededRng::new(12);
    for k in 0..200 {
        let rank = 1 + k % 4;
        let m = from_na(&random_psd_na(4, rank, &mut rng));
        let tsq = trace_sqrt(&m).unwrap();
        for _ in 0..50 {
            let a = SpdMatrix::new(from_na(&random_spd_na(4, 0.05, &mut rng))).unwrap();
            assert!(tsq <= full_objective(&m, &a).unwrap() * (1.0 + 1e-9) + 1e-12);
        }
        let best = full_minimizer(&m, 1e-8).unwrap();
        assert!(rel(full_objective(&m, &best).unwrap(), tsq) < 1e-5);
    }
}

fn small_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn squared_norm_is_inner(x in small_vec(), a in prop::collection::vec(0.1f64..5.0, 3), seed in 0u64..1000) {
        let metrics = [
            Metric::Euclidean,
            Metric::scalar(a[0]).unwrap(),
            Metric::diagonal(a.clone()).unwrap(),
            full_metric(3, seed).0,
        ];
        for m in &metrics {
            let n = m.norm(&x, false).unwrap();
            let ip = m.inner(&x, &x).unwrap();
            prop_assert!((n * n - ip).abs() <= 1e-12 * ip.abs().max(1e-300));
            let dual = m.norm(&x, true).unwrap();
            let e = x.iter().map(|v| v * v).sum::<f64>();
            prop_assert!(n * dual >= e * (1.0 - 1e-12));
        }
    }

    #[test]
    fn identity_encodings_agree(x in small_vec(), y in small_vec()) {
        let ms = [
            Metric::Euclidean,
            Metric::scalar(1.0).unwrap(),
            Metric::diagonal(vec![1.0; 3]).unwrap(),
            Metric::full(Matrix::identity(3)).unwrap(),
        ];
        let base = ms[0].norm(&x, false).unwrap();
        let ip = ms[0].inner(&x, &y).unwrap();
        for m in &ms[1..] {
            prop_assert!((m.norm(&x, false).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
            prop_assert!((m.norm(&x, true).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
            prop_assert!((m.inner(&x, &y).unwrap() - ip).abs() <= 1e-12 * ip.abs().max(1.0));
        }
    }

    #[test]
    fn inner_is_symmetric_and_bilinear(x in small_vec(), y in small_vec(), z in small_vec(), c in -3.0f64..3.0, seed in 0u64..1000) {
        let (m, _) = full_metric(3, seed);
        let xy = m.inner(&x, &y).unwrap();
        prop_assert!((xy - m.inner(&y, &x).unwrap()).abs() <= 1e-10 * xy.abs().max(1.0));
        let xc: Vec<f64> = x.iter().zip(&z).map(|(a, b)| c * a + b).collect();
        let lhs = m.inner(&xc, &y).unwrap();
        let rhs = c * xy + m.inner(&z, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let m = Metric::diagonal(vec![1.0, 2.0]).unwrap();
    assert!(m.inner(&[1.0], &[1.0]).is_err());
    assert!(m.norm(&[1.0, 2.0, 3.0], false).is_err());
}

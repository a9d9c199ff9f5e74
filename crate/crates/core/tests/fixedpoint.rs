mod common;

use adafix::fixedpoint::{
    adagrad_diag_fp, adagrad_full_fp, adagrad_norm_fp, adagrad_norm_steps, convert_and_solve, ftrl_fp, km,
    projected_km, theorem_bound, BoundInputs, Solver, SolverConfig, StopReason, TheoremId,
};
use adafix::linalg::Matrix;
use adafix::metric::{Metric, SpdMatrix};
use adafix::operators::{cocoercivity_probe, scale_operator, LinearOperator, Operator};
use adafix::problems::synthetic::{a_nonexpansive, a_nonexpansive_diagonal, l_nonexpansive, random_averaged, random_positive_diagonal, random_spd};
use adafix::problems::toy::{toy_l, toy_metric, toy_operator};
use adafix::projections::Domain;
use adafix::regret::{RegretMinimizer, RmKind, Schedule};
use adafix::rng::SeededRng;
use common::*;
use proptest::prelude::*;

const HORIZONS: [usize; 4] = [10, 100, 1000, 10_000];

#[test]
fn km_is_ogd_on_weighted_payoffs() {
    let mut rng = SeededRng::new(1);
    for k in 0..10 {
        let xs = rng.uniform_vec(3, -1.0, 1.0);
        let f = l_nonexpansive(3, 1.0 + k as f64 * 0.1, &xs, &mut rng).unwrap();
        let x1 = rng.uniform_vec(3, -3.0, 3.0);
        let gamma = Schedule::custom(|t| 0.2 + 0.6 / (t as f64).sqrt());
        let cfg = SolverConfig::new(gamma, 300).with_iterates();
        let a = km(&f, &x1, &cfg).unwrap();
        let mut rm = RegretMinimizer::new(RmKind::Ogd { eta: 1.0 }, Domain::AllSpace(3), x1.clone()).unwrap();
        let b = convert_and_solve(&f, &mut rm, &cfg).unwrap();
        // Both may reach an exact fixed point, a step apart.
        if a.len() != b.len() {
            assert!(a.stop == StopReason::Converged || b.stop == StopReason::Converged);
        }
        for (x, y) in a.iterates.as_ref().unwrap().iter().zip(b.iterates.as_ref().unwrap()) {
            assert!(max_abs_diff(x, y) <= 1e-12 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())));
        }
    }
}

#[test]
fn minus_identity_examples() {
    let f = LinearOperator::new(Matrix::identity(2).scaled(-1.0)).unwrap();
    let tr = km(&f, &[2.0, 0.0], &SolverConfig::km(5)).unwrap();
    assert_eq!(tr.at(2).unwrap().l2, 0.0);
    assert_eq!(tr.stop, StopReason::Converged);
    let mut rm = RegretMinimizer::new(RmKind::Ogd { eta: 1.0 }, Domain::AllSpace(2), vec![1.0, 1.0]).unwrap();
    let tr = convert_and_solve(&f, &mut rm, &SolverConfig::km(5)).unwrap();
    assert_eq!(tr.final_iterate, vec![0.0, 0.0]);
}

#[test]
fn identity_does_not_move_any_solver() {
    let id = LinearOperator::new(Matrix::identity(2)).unwrap();
    let x1 = [0.3, -0.7];
    let solvers = [
        Solver::Km,
        Solver::Ftrl { eta: Schedule::Constant(0.5) },
        Solver::AdaGradNorm { eta: 1.0 },
        Solver::AdaGradDiagonal { eta: 1.0, epsilon: 1e-10 },
        Solver::AdaGradFull { eta: 1.0, epsilon: 1e-10 },
        Solver::RmspropNorm { eta: 1.0, beta: 0.999 },
        Solver::AdamNorm { eta: 1.0, alpha: 0.9, beta: 0.999 },
    ];
    for s in solvers {
        let tr = s.solve(&id, &x1, &SolverConfig::km(10)).unwrap();
        assert_eq!(tr.final_iterate, x1.to_vec(), "{}", s.name());
        assert_eq!(tr.final_l2(), 0.0);
    }
}

#[test]
fn toy_km_diverges_at_rate_of_eigenvalue() {
    let f = toy_operator(4.0, 0.5).unwrap();
    let tr = km(&f, &[1.0, 0.0], &SolverConfig::km(50)).unwrap();
    assert!(tr.at(50).unwrap().l2 > 10.0 * tr.at(1).unwrap().l2);
    // Oracle: KM map (I + M)/2 has eigenvalue (1 - α)/2 = -1.5 on e₁.
    let growth = tr.at(50).unwrap().l2 / tr.at(49).unwrap().l2;
    assert!((growth - 1.5).abs() < 1e-12);
    // At α = 3 the e₁ eigenvalue is -1 and the residual stays constant.
    let tr = km(&toy_operator(3.0, 0.5).unwrap(), &[1.0, 0.0], &SolverConfig::km(50)).unwrap();
    assert!((tr.final_l2() - tr.initial_l2()).abs() < 1e-12);
}

#[test]
fn km_residuals_are_nonincreasing_for_nonexpansive_maps() {
    let mut rng = SeededRng::new(2);
    for _ in 0..20 {
        let d = 2 + rng.below(5);
        let n = random_averaged(d, &mut rng);
        let f = LinearOperator::new(n).unwrap();
        let x1 = rng.uniform_vec(d, -5.0, 5.0);
        let tr = km(&f, &x1, &SolverConfig::km(200)).unwrap();
        let l2 = tr.l2_series();
        assert!(l2.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15));
    }
}

#[test]
fn trace_bookkeeping_invariants() {
    let mut rng = SeededRng::new(3);
    let f = l_nonexpansive(3, 2.0, &[0.0; 3], &mut rng).unwrap();
    let tr = adagrad_norm_fp(&f, &[1.0, 2.0, 3.0], 0.5, &SolverConfig::adaptive(500).with_x_star(vec![0.0; 3])).unwrap();
    let mut best = f64::INFINITY;
    for (i, r) in tr.records.iter().enumerate() {
        assert_eq!(r.t, i + 1);
        assert!(r.min_l2 <= best);
        best = best.min(r.l2);
        assert_eq!(r.min_l2, best);
        assert_eq!(tr.records[r.argmin - 1].l2, r.min_l2);
        assert_eq!(r.evaluations, r.t as u64);
    }
    let steps = adagrad_norm_steps(&tr, 0.5);
    assert!(steps.windows(2).all(|w| w[1] <= w[0]));
}

fn check(id: TheoremId, tr: &adafix::fixedpoint::IterationTrace, inputs: &BoundInputs) {
    for &t in &HORIZONS {
        if t > tr.len() {
            continue;
        }
        let rep = theorem_bound(id, tr, &BoundInputs { horizon: Some(t), ..inputs.clone() }).unwrap();
        assert!(rep.all_satisfied(), "{id} T={t}: {rep:?}");
        if let Some(h) = rep.hypothesis {
            assert!(h, "{id}: hypothesis failed");
        }
    }
}

#[test]
fn km_bound_on_random_nonexpansive_maps() {
    let mut rng = SeededRng::new(4);
    for _ in 0..5 {
        let xs = rng.uniform_vec(4, -1.0, 1.0);
        let f = l_nonexpansive(4, 1.0, &xs, &mut rng).unwrap();
        let x1 = rng.uniform_vec(4, -4.0, 4.0);
        for gamma in [Schedule::Constant(0.5), Schedule::Constant(0.2), Schedule::custom(|t| 0.5 / (t as f64).powf(0.25))] {
            let cfg = SolverConfig::new(gamma.clone(), 10_000).with_x_star(xs.clone());
            let tr = km(&f, &x1, &cfg).unwrap();
            check(TheoremId::Km, &tr, &BoundInputs { gamma: Some(gamma.clone()), ..Default::default() });
        }
        let tr = km(&f, &x1, &SolverConfig::km(10_000).with_x_star(xs.clone())).unwrap();
        check(TheoremId::KmIntro, &tr, &BoundInputs::default());
    }
}

#[test]
fn km_bound_worked_example() {
    let f = LinearOperator::new(Matrix::from_diag(&[0.5, 0.5])).unwrap();
    let tr = km(&f, &[1.0, 0.0], &SolverConfig::km(100).with_x_star(vec![0.0, 0.0])).unwrap();
    let rep = theorem_bound(TheoremId::Km, &tr, &BoundInputs { gamma: Some(Schedule::Constant(0.5)), ..Default::default() })
        .unwrap();
    assert!((rep.bound - 0.2).abs() < 1e-15);
}

/// Nonexpansive affine map around `x*` restricted to a box that contains `x*`.
fn box_instance(rng: &mut SeededRng, d: usize) -> (LinearOperator, Vec<f64>, Domain) {
    let xs = rng.uniform_vec(d, 0.2, 0.8);
    let b = random_averaged(d, rng);
    let f = LinearOperator::around(b.clone(), &xs).unwrap().with_domain(Domain::cube(d, 0.0, 1.0)).unwrap();
    // Oracle: solve (I - B) x = offset with nalgebra.
    let i_b = nalgebra::DMatrix::identity(d, d) - to_na(&b);
    let off = vec_na(f.offset().unwrap());
    if let Some(sol) = i_b.lu().solve(&off) {
        let fixed: Vec<f64> = sol.iter().copied().collect();
        let r = f.apply(&xs);
        assert!(max_abs_diff(&r, &xs) < 1e-12);
        if (to_na(&b) - nalgebra::DMatrix::identity(d, d)).determinant().abs() > 1e-6 {
            assert!(max_abs_diff(&fixed, &xs) < 1e-8);
        }
    }
    (f, xs, Domain::cube(d, 0.0, 1.0))
}

#[test]
fn projected_km_and_ftrl_bounds_on_boxes() {
    let mut rng = SeededRng::new(5);
    for _ in 0..5 {
        let (f, xs, domain) = box_instance(&mut rng, 3);
        let x1 = domain.center().iter().map(|v| v + 0.4).collect::<Vec<_>>();
        let gamma = Schedule::Constant(0.5);
        let tr = projected_km(&f, &x1, &SolverConfig::new(gamma.clone(), 10_000).with_x_star(xs.clone())).unwrap();
        check(TheoremId::ProjectedKm, &tr, &BoundInputs { gamma: Some(gamma), ..Default::default() });
        for eta in [Schedule::Constant(0.5), Schedule::InvSqrt(0.9)] {
            let tr = ftrl_fp(&f, &x1, eta.clone(), &SolverConfig::adaptive(10_000).with_x_star(xs.clone())).unwrap();
            assert!(tr.records.iter().all(|_| true));
            check(TheoremId::FtrlFp, &tr, &BoundInputs { eta_schedule: Some(eta), ..Default::default() });
        }
    }
}

#[test]
fn projected_km_without_fixed_point_sticks_to_the_boundary() {
    let f = adafix::operators::FnOperator::new(Domain::cube(2, 0.0, 1.0), "shift", |x, o| {
        o[0] = x[0] + 1.0;
        o[1] = x[1];
    });
    let tr = projected_km(&f, &[0.2, 0.5], &SolverConfig::km(20)).unwrap();
    assert_eq!(tr.final_iterate, vec![1.0, 0.5]);
    assert_eq!(tr.final_l2(), 1.0);
    let g = LinearOperator::new(Matrix::from_diag(&[0.3, 0.6])).unwrap();
    let x1 = [0.4, -2.0];
    let a = km(&g, &x1, &SolverConfig::km(50)).unwrap();
    let b = projected_km(&g, &x1, &SolverConfig::km(50)).unwrap();
    assert_eq!(a.l2_series(), b.l2_series());
}

#[test]
fn adagrad_norm_bounds_on_toy_and_l_nonexpansive_maps() {
    let toy = toy_operator(3.0, 0.5).unwrap();
    let cfg = SolverConfig::adaptive(10_000).with_x_star(vec![0.0, 0.0]);
    let tr = adagrad_norm_fp(&toy, &[1.0, 1.0], 1.0, &cfg).unwrap();
    check(TheoremId::AdaGradNormI, &tr, &BoundInputs { eta: Some(1.0), ..Default::default() });
    let lt = tr.last().local_lt.unwrap();
    assert!(lt <= toy_l(3.0) + 1e-9);
    check(TheoremId::AdaGradNormII, &tr, &BoundInputs { eta: Some(1.0), l: Some(toy_l(3.0)), ..Default::default() });

    let mut rng = SeededRng::new(6);
    for k in 0..10 {
        let l = 0.5 + k as f64;
        let xs = rng.uniform_vec(5, -1.0, 1.0);
        let f = l_nonexpansive(5, l, &xs, &mut rng).unwrap();
        let x1 = rng.uniform_vec(5, -3.0, 3.0);
        let eta = rng.uniform_in(0.1, 3.0);
        let tr = adagrad_norm_fp(&f, &x1, eta, &SolverConfig::adaptive(10_000).with_x_star(xs)).unwrap();
        assert!(tr.last().local_lt.unwrap() <= l + 1e-9);
        check(TheoremId::AdaGradNormI, &tr, &BoundInputs { eta: Some(eta), ..Default::default() });
        check(TheoremId::AdaGradNormI, &tr, &BoundInputs { eta: Some(eta), l: Some(l), ..Default::default() });
        check(TheoremId::AdaGradNormII, &tr, &BoundInputs { eta: Some(eta), l: Some(l), ..Default::default() });
    }
}

#[test]
fn adagrad_diagonal_bounds() {
    let (alpha, eps) = (3.0, 0.5);
    let a = toy_metric(alpha, eps).unwrap();
    let toy = toy_operator(alpha, eps).unwrap();
    let cfg = SolverConfig::adaptive(10_000).with_x_star(vec![0.0, 0.0]).with_metric(a.clone());
    let tr = adagrad_diag_fp(&toy, &[1.0, 1.0], 1.0, 1e-8, &cfg).unwrap();
    let inputs = BoundInputs { eta: Some(1.0), epsilon: Some(1e-8), metric: Some(a), ..Default::default() };
    check(TheoremId::AdaGradDiagonalI, &tr, &inputs);
    check(TheoremId::AdaGradDiagonalII, &tr, &inputs);

    let mut rng = SeededRng::new(7);
    for _ in 0..5 {
        let diag = random_positive_diagonal(4, 0.1, 10.0, &mut rng);
        let xs = rng.uniform_vec(4, -1.0, 1.0);
        let f = a_nonexpansive_diagonal(&diag, &xs, &mut rng).unwrap();
        let metric = Metric::diagonal(diag).unwrap();
        let cfg = SolverConfig::adaptive(10_000).with_x_star(xs).with_metric(metric.clone());
        let tr = adagrad_diag_fp(&f, &rng.uniform_vec(4, -2.0, 2.0), 0.7, 1e-6, &cfg).unwrap();
        let inputs = BoundInputs { eta: Some(0.7), epsilon: Some(1e-6), metric: Some(metric), ..Default::default() };
        check(TheoremId::AdaGradDiagonalI, &tr, &inputs);
        check(TheoremId::AdaGradDiagonalII, &tr, &inputs);
    }
}

#[test]
fn adagrad_full_bounds() {
    let mut rng = SeededRng::new(8);
    for d in [2usize, 5, 8] {
        let a = random_spd(d, 0.1, 10.0, &mut rng).unwrap();
        let xs = rng.uniform_vec(d, -1.0, 1.0);
        let f = a_nonexpansive(&a, &xs, &mut rng).unwrap();
        let metric = Metric::Full(a);
        let pairs: Vec<_> = (0..200).map(|_| (rng.uniform_vec(d, -3.0, 3.0), rng.uniform_vec(d, -3.0, 3.0))).collect();
        assert!(cocoercivity_probe(&f, &metric, &pairs).unwrap().clean());
        let cfg = SolverConfig::adaptive(10_000).with_x_star(xs).with_metric(metric.clone());
        let tr = adagrad_full_fp(&f, &rng.uniform_vec(d, -2.0, 2.0), 0.5, 1e-6, &cfg).unwrap();
        let inputs = BoundInputs { eta: Some(0.5), epsilon: Some(1e-6), metric: Some(metric), ..Default::default() };
        check(TheoremId::AdaGradFullI, &tr, &inputs);
        check(TheoremId::AdaGradFullII, &tr, &inputs);
    }
}

#[test]
fn adagrad_full_rejects_constrained_domains() {
    let f = LinearOperator::new(Matrix::identity(2).scaled(0.5)).unwrap().with_domain(Domain::cube(2, -1.0, 1.0)).unwrap();
    assert!(adagrad_full_fp(&f, &[0.5, 0.5], 0.5, 1e-6, &SolverConfig::adaptive(10)).is_err());
}

#[test]
fn wrong_l_is_caught() {
    let mut rng = SeededRng::new(9);
    let xs = vec![0.0; 3];
    let f = l_nonexpansive(3, 4.0, &xs, &mut rng).unwrap();
    let tr = adagrad_norm_fp(&f, &[3.0, -2.0, 1.0], 1.0, &SolverConfig::adaptive(1000).with_x_star(xs)).unwrap();
    for id in [TheoremId::AdaGradNormI, TheoremId::AdaGradNormII] {
        let wrong = BoundInputs { eta: Some(1.0), l: Some(0.4), horizon: Some(10), ..Default::default() };
        assert!(!theorem_bound(id, &tr, &wrong).unwrap().satisfied);
        let right = BoundInputs { l: Some(4.0), ..wrong };
        assert!(theorem_bound(id, &tr, &right).unwrap().satisfied);
    }
}

#[test]
fn bounds_need_inputs() {
    let f = LinearOperator::new(Matrix::identity(2).scaled(0.5)).unwrap();
    let tr = km(&f, &[1.0, 1.0], &SolverConfig::km(10)).unwrap();
    assert!(theorem_bound(TheoremId::KmIntro, &tr, &BoundInputs::default()).is_err());
    let tr = km(&f, &[1.0, 1.0], &SolverConfig::km(10).with_x_star(vec![0.0, 0.0])).unwrap();
    assert!(theorem_bound(TheoremId::Km, &tr, &BoundInputs::default()).is_err());
    assert!(theorem_bound(TheoremId::AdaGradDiagonalI, &tr, &BoundInputs { eta: Some(1.0), ..Default::default() }).is_err());
    let expand = LinearOperator::new(Matrix::identity(2).scaled(3.0)).unwrap();
    let tr = adagrad_norm_fp(&expand, &[1.0, 0.0], 1.0, &SolverConfig::adaptive(10).with_x_star(vec![0.0, 0.0])).unwrap();
    assert!(theorem_bound(TheoremId::AdaGradNormI, &tr, &BoundInputs { eta: Some(1.0), ..Default::default() }).is_err());
}

#[test]
fn scaled_toy_km_reaches_fixed_point_in_one_step() {
    let f = scale_operator(toy_operator(3.0, 0.5).unwrap(), toy_metric(3.0, 0.5).unwrap()).unwrap();
    let mut rng = SeededRng::new(10);
    for _ in 0..20 {
        let x1 = rng.uniform_vec(2, -10.0, 10.0);
        let tr = km(&f, &x1, &SolverConfig::km(5)).unwrap();
        assert!(tr.at(2).unwrap().l2 <= 1e-12);
    }
    let _ = SpdMatrix::new(Matrix::identity(2)).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adagrad_norm_bound_holds_for_random_instances(seed in 0u64..100_000, l in 0.3f64..6.0, eta in 0.05f64..4.0) {
        let mut rng = SeededRng::new(seed);
        let xs = rng.uniform_vec(3, -1.0, 1.0);
        let f = l_nonexpansive(3, l, &xs, &mut rng).unwrap();
        let tr = adagrad_norm_fp(&f, &rng.uniform_vec(3, -4.0, 4.0), eta, &SolverConfig::adaptive(500).with_x_star(xs)).unwrap();
        let rep = theorem_bound(TheoremId::AdaGradNormI, &tr, &BoundInputs { eta: Some(eta), ..Default::default() }).unwrap();
        prop_assert!(rep.satisfied, "{:?}", rep);
        prop_assert!(rep.lt_measured.unwrap() <= l + 1e-9);
    }

    #[test]
    fn km_bound_holds_for_random_weights(seed in 0u64..100_000, g in 0.05f64..0.95) {
        let mut rng = SeededRng::new(seed);
        let xs = rng.uniform_vec(3, -1.0, 1.0);
        let f = l_nonexpansive(3, 1.0, &xs, &mut rng).unwrap();
        let tr = km(&f, &rng.uniform_vec(3, -4.0, 4.0), &SolverConfig::new(Schedule::Constant(g), 300).with_x_star(xs)).unwrap();
        let rep = theorem_bound(TheoremId::Km, &tr, &BoundInputs { gamma: Some(Schedule::Constant(g)), ..Default::default() }).unwrap();
        prop_assert!(rep.satisfied, "{:?}", rep);
    }
}

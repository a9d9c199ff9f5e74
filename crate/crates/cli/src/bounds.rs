//! Monte-Carlo check of the fixed-point guarantees on seeded operators with known
//! constants.

use crate::error::{CliError, Result};
use crate::output::fmt_float;
use adafix::fixedpoint::{
    adagrad_diag_fp, adagrad_full_fp, adagrad_norm_fp, ftrl_fp, km, projected_km, theorem_bound, BoundInputs,
    IterationTrace, SolverConfig, TheoremId,
};
use adafix::metric::Metric;
use adafix::operators::LinearOperator;
use adafix::par::{self, Execution};
use adafix::problems::synthetic::{
    a_nonexpansive, a_nonexpansive_diagonal, l_nonexpansive, random_averaged, random_positive_diagonal, random_spd,
};
use adafix::problems::toy::{toy_l, toy_metric, toy_operator};
use adafix::projections::Domain;
use adafix::regret::Schedule;
use adafix::rng::SeededRng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteProblem {
    /// The two-dimensional toy operator with `α = 3`, `ε = 1/2`.
    Toy,
    /// `(I + Q)/2` with `Q` orthogonal, `d = 20`, fixed point 0.
    Averaged,
    /// L-nonexpansive affine maps with `L ∈ [0.5, 10]`, `d = 5`.
    LNonexpansive,
    /// A-nonexpansive maps for a random positive diagonal `A`, `d = 4`.
    Diagonal,
    /// A-nonexpansive maps for a random SPD `A`, `d = 8`.
    Full,
    /// Averaged affine maps restricted to the unit cube, `d = 3`.
    Box,
}

impl SuiteProblem {
    pub const ALL: [SuiteProblem; 6] = [
        SuiteProblem::Toy,
        SuiteProblem::Averaged,
        SuiteProblem::LNonexpansive,
        SuiteProblem::Diagonal,
        SuiteProblem::Full,
        SuiteProblem::Box,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteProblem::Toy => "toy",
            SuiteProblem::Averaged => "averaged",
            SuiteProblem::LNonexpansive => "l_nonexpansive",
            SuiteProblem::Diagonal => "diagonal",
            SuiteProblem::Full => "full",
            SuiteProblem::Box => "box",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seeds: Vec<u64>,
    pub iterations: usize,
    /// Every guarantee is evaluated at each of these horizons (those within the run).
    pub horizons: Vec<usize>,
    /// Multiplies the known `L` handed to the AdaGrad-Norm guarantees. `0.1` is the
    /// negative control.
    pub l_factor: f64,
    pub problems: Vec<SuiteProblem>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seeds: (0..10).collect(),
            iterations: 10_000,
            horizons: vec![10, 100, 1000, 10_000],
            l_factor: 1.0,
            problems: SuiteProblem::ALL.to_vec(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_factor.is_finite() && self.l_factor > 0.0) {
            return Err(CliError::Config(format!("l_factor must be positive, got {}", self.l_factor)));
        }
        if self.iterations == 0 || self.horizons.contains(&0) {
            return Err(CliError::Config("iterations and horizons must be positive".into()));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty() || self.problems.is_empty()
    }

    pub fn negative_control() -> Self {
        SuiteConfig { l_factor: 0.1, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub seed: u64,
    pub problem: &'static str,
    pub theorem: TheoremId,
    pub horizon: usize,
    pub bound: f64,
    pub empirical: f64,
    pub satisfied: bool,
    /// Star co-coercivity in `A` along the trace, when the guarantee needs it.
    pub hypothesis: Option<bool>,
    /// Side condition of the run: nonincreasing residuals for KM, `L_T ≤ L` when `L` is known.
    pub side_condition: Option<bool>,
}

impl SuiteRow {
    pub fn margin(&self) -> f64 {
        self.bound - self.empirical
    }

    pub fn violated(&self) -> bool {
        !self.satisfied || self.hypothesis == Some(false) || self.side_condition == Some(false)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    pub errors: Vec<String>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated()).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0 && self.errors.is_empty()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>4}  {:<14}  {:<20}  {:>6}  {:>12}  {:>12}  {:>12}  status",
            "seed", "problem", "theorem", "T", "bound", "empirical", "margin"
        );
        for r in &self.rows {
            let status = if r.violated() { "VIOLATED" } else { "ok" };
            let _ = writeln!(
                s,
                "{:>4}  {:<14}  {:<20}  {:>6}  {:>12.4e}  {:>12.4e}  {:>12.4e}  {status}",
                r.seed,
                r.problem,
                r.theorem.name(),
                r.horizon,
                r.bound,
                r.empirical,
                r.margin()
            );
        }
        for e in &self.errors {
            let _ = writeln!(s, "error: {e}");
        }
        let _ = writeln!(s, "{} checks, {} violated, {} errors", self.rows.len(), self.violations(), self.errors.len());
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record([
            "seed", "problem", "theorem", "horizon", "bound", "empirical", "margin", "satisfied", "hypothesis", "side_condition",
        ])
        .map_err(csv_err)?;
        let opt = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
        for r in &self.rows {
            w.write_record([
                r.seed.to_string(),
                r.problem.to_string(),
                r.theorem.name().to_string(),
                r.horizon.to_string(),
                fmt_float(r.bound),
                fmt_float(r.empirical),
                fmt_float(r.margin()),
                (!r.violated()).to_string(),
                opt(r.hypothesis),
                opt(r.side_condition),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

/// Nonincreasing up to rounding: relative slack 1e-12 plus an absolute floor of 1e-14
/// times the first value.
pub fn nonincreasing(xs: &[f64], scale: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-14 * scale)
}

struct Job<'a> {
    cfg: &'a SuiteConfig,
    seed: u64,
    problem: SuiteProblem,
    rows: Vec<SuiteRow>,
}

impl Job<'_> {
    fn check(&mut self, id: TheoremId, tr: &IterationTrace, inputs: &BoundInputs, side: Option<bool>) -> adafix::Result<()> {
        for &t in &self.cfg.horizons {
            if t > tr.len() {
                continue;
            }
            let rep = theorem_bound(id, tr, &BoundInputs { horizon: Some(t), ..inputs.clone() })?;
            let satisfied = rep.all_satisfied();
            self.rows.push(SuiteRow {
                seed: self.seed,
                problem: self.problem.name(),
                theorem: id,
                horizon: t,
                bound: rep.bound,
                empirical: rep.empirical,
                satisfied,
                hypothesis: rep.hypothesis,
                side_condition: side,
            });
        }
        Ok(())
    }

    /// AdaGrad-Norm (i) and (ii) with the known `L` scaled by the suite's factor.
    fn adagrad_norm(&mut self, tr: &IterationTrace, eta: f64, l: f64) -> adafix::Result<()> {
        let lt_ok = tr.last().local_lt.map(|lt| lt <= l + 1e-9);
        let inputs = BoundInputs { eta: Some(eta), l: Some(l * self.cfg.l_factor), ..Default::default() };
        self.check(TheoremId::AdaGradNormI, tr, &inputs, lt_ok)?;
        self.check(TheoremId::AdaGradNormII, tr, &inputs, lt_ok)
    }

    fn run(&mut self) -> adafix::Result<()> {
        let t_max = self.cfg.iterations;
        let mut rng = SeededRng::with_stream(self.seed, self.problem as u64 + 1);
        match self.problem {
            SuiteProblem::Toy => {
                let (alpha, eps) = (3.0, 0.5);
                let f = toy_operator(alpha, eps)?;
                let a = toy_metric(alpha, eps)?;
                let x1 = rng.uniform_vec(2, -3.0, 3.0);
                let cfg = SolverConfig::adaptive(t_max).with_x_star(vec![0.0; 2]);
                let tr = adagrad_norm_fp(&f, &x1, 1.0, &cfg)?;
                self.adagrad_norm(&tr, 1.0, toy_l(alpha))?;
                let tr = adagrad_diag_fp(&f, &x1, 1.0, 1e-8, &cfg.with_metric(a.clone()))?;
                let inputs = BoundInputs { eta: Some(1.0), epsilon: Some(1e-8), metric: Some(a), ..Default::default() };
                self.check(TheoremId::AdaGradDiagonalI, &tr, &inputs, None)?;
                self.check(TheoremId::AdaGradDiagonalII, &tr, &inputs, None)?;
            }
            SuiteProblem::Averaged => {
                let d = 20;
                let f = LinearOperator::new(random_averaged(d, &mut rng))?;
                let x1 = rng.uniform_vec(d, -1.0, 1.0);
                let tr = km(&f, &x1, &SolverConfig::km(t_max).with_x_star(vec![0.0; d]))?;
                let mono = nonincreasing(&tr.l2_series(), tr.initial_l2());
                self.check(TheoremId::KmIntro, &tr, &BoundInputs::default(), Some(mono))?;
                let inputs = BoundInputs { gamma: Some(Schedule::Constant(0.5)), ..Default::default() };
                self.check(TheoremId::Km, &tr, &inputs, Some(mono))?;
            }
            SuiteProblem::LNonexpansive => {
                let d = 5;
                let l = rng.uniform_in(0.5, 10.0);
                let xs = rng.uniform_vec(d, -1.0, 1.0);
                let f = l_nonexpansive(d, l, &xs, &mut rng)?;
                let x1 = rng.uniform_vec(d, -3.0, 3.0);
                let eta = rng.uniform_in(0.1, 3.0);
                let tr = adagrad_norm_fp(&f, &x1, eta, &SolverConfig::adaptive(t_max).with_x_star(xs))?;
                self.adagrad_norm(&tr, eta, l)?;
            }
            SuiteProblem::Diagonal => {
                let d = 4;
                let diag = random_positive_diagonal(d, 0.1, 10.0, &mut rng);
                let xs = rng.uniform_vec(d, -1.0, 1.0);
                let f = a_nonexpansive_diagonal(&diag, &xs, &mut rng)?;
                let metric = Metric::diagonal(diag)?;
                let x1 = rng.uniform_vec(d, -2.0, 2.0);
                let cfg = SolverConfig::adaptive(t_max).with_x_star(xs).with_metric(metric.clone());
                let tr = adagrad_diag_fp(&f, &x1, 0.7, 1e-6, &cfg)?;
                let inputs = BoundInputs { eta: Some(0.7), epsilon: Some(1e-6), metric: Some(metric), ..Default::default() };
                self.check(TheoremId::AdaGradDiagonalI, &tr, &inputs, None)?;
                self.check(TheoremId::AdaGradDiagonalII, &tr, &inputs, None)?;
            }
            SuiteProblem::Full => {
                let d = 8;
                let a = random_spd(d, 0.1, 10.0, &mut rng)?;
                let xs = rng.uniform_vec(d, -1.0, 1.0);
                let f = a_nonexpansive(&a, &xs, &mut rng)?;
                let metric = Metric::Full(a);
                let x1 = rng.uniform_vec(d, -2.0, 2.0);
                let cfg = SolverConfig::adaptive(t_max).with_x_star(xs).with_metric(metric.clone());
                let tr = adagrad_full_fp(&f, &x1, 0.5, 1e-6, &cfg)?;
                let inputs = BoundInputs { eta: Some(0.5), epsilon: Some(1e-6), metric: Some(metric), ..Default::default() };
                self.check(TheoremId::AdaGradFullI, &tr, &inputs, None)?;
                self.check(TheoremId::AdaGradFullII, &tr, &inputs, None)?;
            }
            SuiteProblem::Box => {
                let d = 3;
                let domain = Domain::cube(d, 0.0, 1.0);
                let xs = rng.uniform_vec(d, 0.2, 0.8);
                let f = LinearOperator::around(random_averaged(d, &mut rng), &xs)?.with_domain(domain)?;
                let x1 = rng.uniform_vec(d, 0.0, 1.0);
                let gamma = Schedule::Constant(0.5);
                let tr = projected_km(&f, &x1, &SolverConfig::new(gamma.clone(), t_max).with_x_star(xs.clone()))?;
                self.check(TheoremId::ProjectedKm, &tr, &BoundInputs { gamma: Some(gamma), ..Default::default() }, None)?;
                for eta in [Schedule::Constant(0.5), Schedule::InvSqrt(0.9)] {
                    let tr = ftrl_fp(&f, &x1, eta.clone(), &SolverConfig::adaptive(t_max).with_x_star(xs.clone()))?;
                    let inputs = BoundInputs { eta_schedule: Some(eta), ..Default::default() };
                    self.check(TheoremId::FtrlFp, &tr, &inputs, None)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs every (seed, problem) pair of the suite. Run errors are collected, not raised.
pub fn run_suite(cfg: &SuiteConfig, exec: Execution) -> SuiteReport {
    let jobs: Vec<(u64, SuiteProblem)> =
        cfg.seeds.iter().flat_map(|&s| cfg.problems.iter().map(move |&p| (s, p))).collect();
    let results = par::map(exec, &jobs, |&(seed, problem)| {
        let mut job = Job { cfg, seed, problem, rows: Vec::new() };
        match job.run() {
            Ok(()) => Ok(job.rows),
            Err(e) => Err(format!("seed {seed}, {}: {e}", problem.name())),
        }
    });
    let mut report = SuiteReport::default();
    for r in results {
        match r {
            Ok(rows) => report.rows.extend(rows),
            Err(e) => report.errors.push(e),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problems: Vec<SuiteProblem>, l_factor: f64) -> SuiteConfig {
        SuiteConfig { seeds: vec![0, 1], iterations: 200, horizons: vec![10, 100], l_factor, problems }
    }

    #[test]
    fn small_suite_passes() {
        let rep = run_suite(&small(SuiteProblem::ALL.to_vec(), 1.0), Execution::Sequential);
        assert!(rep.passed(), "{}", rep.table());
        assert!(rep.rows.len() >= 2 * 6 * 2);
    }

    #[test]
    fn negative_control_is_reported() {
        let rep = run_suite(&small(vec![SuiteProblem::LNonexpansive, SuiteProblem::Toy], 0.1), Execution::Sequential);
        assert!(rep.violations() > 0, "{}", rep.table());
    }

    #[test]
    fn modes_agree() {
        let cfg = small(vec![SuiteProblem::Averaged, SuiteProblem::Full], 1.0);
        assert_eq!(run_suite(&cfg, Execution::Sequential), run_suite(&cfg, Execution::Parallel));
    }

    #[test]
    fn empty_suite_is_trivially_passing() {
        let cfg = SuiteConfig { seeds: vec![], ..Default::default() };
        assert!(cfg.is_empty());
        let rep = run_suite(&cfg, Execution::Sequential);
        assert!(rep.passed() && rep.rows.is_empty());
    }
}

//! The conversion scheme: a regret minimizer fed with `u_t = γ_t (F(x_t) - x_t)`
//! becomes a fixed-point iteration. Named solvers, per-step residual tracking and
//! evaluation of the convergence guarantees against recorded traces.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dist_inf};
use crate::metric::Metric;
use crate::operators::{correlation_floor, lt_ratio, residual_with_image, Operator, LT_SKIP};
use crate::projections::project;
use crate::regret::{RegretMinimizer, RmKind, Schedule};

/// Extra per-iterate diagnostic (for example a duality gap).
pub type Observer = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Clone)]
pub struct SolverConfig {
    /// Payoff weights `γ_t`.
    pub gamma: Schedule,
    /// Iteration budget `T`.
    pub iterations: usize,
    /// Stop as soon as `‖F(x_t) - x_t‖₂ ≤ tol`.
    pub tol: f64,
    pub record_iterates: bool,
    pub x_star: Option<Vec<f64>>,
    /// Metric in which the dual residual norm `‖F(x) - x‖_{A⁻¹}` is recorded.
    pub metric: Option<Metric>,
    /// Abort once the residual exceeds this multiple of the initial residual.
    pub divergence_factor: f64,
    pub observer: Option<Observer>,
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("gamma", &self.gamma)
            .field("iterations", &self.iterations)
            .field("tol", &self.tol)
            .field("record_iterates", &self.record_iterates)
            .field("x_star", &self.x_star)
            .field("metric", &self.metric)
            .field("divergence_factor", &self.divergence_factor)
            .field("observer", &self.observer.is_some())
            .finish()
    }
}

impl SolverConfig {
    pub fn new(gamma: Schedule, iterations: usize) -> Self {
        SolverConfig {
            gamma,
            iterations,
            tol: 0.0,
            record_iterates: false,
            x_star: None,
            metric: None,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
            observer: None,
        }
    }

    /// `γ_t = 1/2`.
    pub fn km(iterations: usize) -> Self {
        Self::new(Schedule::Constant(0.5), iterations)
    }

    /// `γ_t = 1`, the payoffs of the adaptive solvers.
    pub fn adaptive(iterations: usize) -> Self {
        Self::new(Schedule::Constant(1.0), iterations)
    }

    pub fn with_gamma(mut self, gamma: Schedule) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_x_star(mut self, x_star: Vec<f64>) -> Self {
        self.x_star = Some(x_star);
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    pub fn with_observer(mut self, observer: Observer) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn with_divergence_factor(mut self, factor: f64) -> Self {
        self.divergence_factor = factor;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub l2: f64,
    pub l1: f64,
    pub metric_norm: Option<f64>,
    pub min_l2: f64,
    pub argmin: usize,
    pub dist_l2: Option<f64>,
    pub dist_inf: Option<f64>,
    /// `⟨F(x_t) - x_t, x* - x_t⟩`.
    pub correlation: Option<f64>,
    /// Rounding floor of `correlation`.
    pub correlation_floor: Option<f64>,
    /// Running local coefficient `L_t`.
    pub local_lt: Option<f64>,
    pub observed: Option<f64>,
    pub evaluations: u64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    Converged,
    Diverged,
    NonFinite,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Budget => "budget",
            StopReason::Converged => "converged",
            StopReason::Diverged => "diverged",
            StopReason::NonFinite => "non-finite",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub solver: String,
    pub records: Vec<StepRecord>,
    pub stop: StopReason,
    pub initial_point: Vec<f64>,
    pub final_iterate: Vec<f64>,
    pub best_point: Vec<f64>,
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("traces hold at least one record")
    }

    pub fn initial_l2(&self) -> f64 {
        self.records[0].l2
    }

    pub fn final_l2(&self) -> f64 {
        self.last().l2
    }

    pub fn min_l2(&self) -> f64 {
        self.last().min_l2
    }

    /// Record of iteration `t` (1-based).
    pub fn at(&self, t: usize) -> Option<&StepRecord> {
        t.checked_sub(1).and_then(|i| self.records.get(i))
    }

    pub fn diverged(&self) -> bool {
        matches!(self.stop, StopReason::Diverged | StopReason::NonFinite)
    }

    pub fn l2_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.l2).collect()
    }

    pub fn observed_series(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.observed).collect()
    }
}

struct Tracker<'a, O: ?Sized> {
    f: &'a O,
    cfg: &'a SolverConfig,
    start: Instant,
    records: Vec<StepRecord>,
    iterates: Option<Vec<Vec<f64>>>,
    best_point: Vec<f64>,
    best: f64,
    best_idx: usize,
    lt: f64,
}

enum Observation {
    Continue { fx: Vec<f64>, r: Vec<f64> },
    Stop(StopReason),
}

impl<'a, O: Operator + ?Sized> Tracker<'a, O> {
    fn new(f: &'a O, cfg: &'a SolverConfig, x1: &[f64]) -> Result<Self> {
        if cfg.iterations == 0 {
            return Err(Error::InvalidParameter("iteration budget must be positive".into()));
        }
        check_dim(f.dim(), x1.len())?;
        if let Some(xs) = &cfg.x_star {
            check_dim(f.dim(), xs.len())?;
        }
        Ok(Tracker {
            f,
            cfg,
            start: Instant::now(),
            records: Vec::with_capacity(cfg.iterations.min(1 << 20)),
            iterates: cfg.record_iterates.then(Vec::new),
            best_point: x1.to_vec(),
            best: f64::INFINITY,
            best_idx: 1,
            lt: 0.0,
        })
    }

    fn observe(&mut self, t: usize, x: &[f64]) -> Result<Observation> {
        if let Some(it) = self.iterates.as_mut() {
            it.push(x.to_vec());
        }
        let (fx, res) = match residual_with_image(self.f, x, self.cfg.metric.as_ref()) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => return Ok(Observation::Stop(StopReason::NonFinite)),
            Err(e) => return Err(e),
        };
        if res.l2 < self.best {
            self.best = res.l2;
            self.best_idx = t;
            self.best_point = x.to_vec();
        }
        let (dist_l2, dist_inf_, correlation, floor, local_lt) = match &self.cfg.x_star {
            Some(xs) => {
                let corr: f64 = res.vector.iter().zip(xs.iter().zip(x)).map(|(r, (s, xi))| r * (s - xi)).sum();
                self.lt = self.lt.max(lt_ratio(&res.vector, x, xs));
                let floor = correlation_floor(&res.vector, x, xs);
                (Some(dist2(x, xs)), Some(dist_inf(x, xs)), Some(corr), Some(floor), Some(self.lt))
            }
            None => (None, None, None, None, None),
        };
        let observed = self.cfg.observer.as_ref().map(|o| o(x));
        self.records.push(StepRecord {
            t,
            l2: res.l2,
            l1: res.l1,
            metric_norm: res.metric_norm,
            min_l2: self.best,
            argmin: self.best_idx,
            dist_l2,
            dist_inf: dist_inf_,
            correlation,
            correlation_floor: floor,
            local_lt,
            observed,
            evaluations: t as u64 * self.f.cost(),
            elapsed: self.start.elapsed().as_secs_f64(),
        });
        let initial = self.records[0].l2;
        if res.l2 <= self.cfg.tol {
            return Ok(Observation::Stop(StopReason::Converged));
        }
        if initial > 0.0 && res.l2 > self.cfg.divergence_factor * initial {
            return Ok(Observation::Stop(StopReason::Diverged));
        }
        if t >= self.cfg.iterations {
            return Ok(Observation::Stop(StopReason::Budget));
        }
        Ok(Observation::Continue { fx, r: res.vector })
    }

    fn finish(self, name: &str, x1: &[f64], last: Vec<f64>, stop: StopReason) -> IterationTrace {
        IterationTrace {
            solver: name.to_string(),
            records: self.records,
            stop,
            initial_point: x1.to_vec(),
            final_iterate: last,
            best_point: self.best_point,
            iterates: self.iterates,
        }
    }
}

/// Shared loop. `next(t, x_t, F(x_t), F(x_t) - x_t)` produces `x_{t+1}`.
fn drive<O, N>(f: &O, x1: &[f64], cfg: &SolverConfig, name: &str, mut next: N) -> Result<IterationTrace>
where
    O: Operator + ?Sized,
    N: FnMut(usize, &[f64], &[f64], &[f64]) -> Result<Vec<f64>>,
{
    let mut tracker = Tracker::new(f, cfg, x1)?;
    let mut x = x1.to_vec();
    let mut t = 1;
    loop {
        match tracker.observe(t, &x)? {
            Observation::Stop(reason) => return Ok(tracker.finish(name, x1, x, reason)),
            Observation::Continue { fx, r } => match next(t, &x, &fx, &r) {
                Ok(nx) => x = nx,
                Err(Error::NonFinite(_)) => return Ok(tracker.finish(name, x1, x, StopReason::NonFinite)),
                Err(e) => return Err(e),
            },
        }
        t += 1;
    }
}

/// Runs `rm` on the payoffs `u_t = γ_t (F(x_t) - x_t)`, starting from its current action.
pub fn convert_and_solve<O: Operator + ?Sized>(f: &O, rm: &mut RegretMinimizer, cfg: &SolverConfig) -> Result<IterationTrace> {
    check_dim(f.dim(), rm.domain().dim())?;
    let x1 = rm.action().to_vec();
    let name = rm.kind().name();
    drive(f, &x1, cfg, name, |t, _x, _fx, r| {
        let g = cfg.gamma.at(t);
        let u: Vec<f64> = r.iter().map(|v| g * v).collect();
        rm.step(&u)
    })
}

fn check_weight(g: f64) -> Result<()> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("KM weight must lie in (0, 1), got {g}")))
    }
}

/// Krasnoselskii-Mann: `x_{t+1} = γ_t F(x_t) + (1 - γ_t) x_t`. An iterate leaving the
/// domain is an error; use `projected_km` for non-self maps.
pub fn km<O: Operator + ?Sized>(f: &O, x1: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
    drive(f, x1, cfg, "km", |t, x, fx, _r| {
        let g = cfg.gamma.at(t);
        check_weight(g)?;
        Ok(fx.iter().zip(x).map(|(a, b)| g * a + (1.0 - g) * b).collect())
    })
}

/// `x_{t+1} = Π_X(γ_t F(x_t) + (1 - γ_t) x_t)`.
pub fn projected_km<O: Operator + ?Sized>(f: &O, x1: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
    drive(f, x1, cfg, "projected_km", |t, x, fx, _r| {
        let g = cfg.gamma.at(t);
        check_weight(g)?;
        let y: Vec<f64> = fx.iter().zip(x).map(|(a, b)| g * a + (1.0 - g) * b).collect();
        project(f.domain(), &Metric::Euclidean, &y)
    })
}

/// Plain iteration `x_{t+1} = F(x_t)`.
pub fn power_iteration<O: Operator + ?Sized>(f: &O, x1: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
    drive(f, x1, cfg, "power", |_t, _x, fx, _r| Ok(fx.to_vec()))
}

fn adaptive<O: Operator + ?Sized>(f: &O, kind: RmKind, x1: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
    let mut rm = RegretMinimizer::new(kind, f.domain().clone(), x1.to_vec())?;
    let cfg = SolverConfig { gamma: Schedule::Constant(1.0), ..cfg.clone() };
    convert_and_solve(f, &mut rm, &cfg)
}

/// Follow-the-Regularized-Leader: `x_{t+1} = Π_X(x_1 + η_{t+1} Σ_{s≤t} (F(x_s) - x_s))`.
pub fn ftrl_fp<O: Operator + ?Sized>(f: &O, x1: &[f64], eta: Schedule, cfg: &SolverConfig) -> Result<IterationTrace> {
    adaptive(f, RmKind::Ftrl { eta }, x1, cfg)
}

pub fn adagrad_norm_fp<O: Operator + ?Sized>(f: &O, x1: &[f64], eta: f64, cfg: &SolverConfig) -> Result<IterationTrace> {
    adaptive(f, RmKind::AdaGradNorm { eta }, x1, cfg)
}

pub fn adagrad_diag_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::AdaGradDiagonal { eta, epsilon }, x1, cfg)
}

pub fn adagrad_full_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::AdaGradFull { eta, epsilon }, x1, cfg)
}

pub fn rmsprop_norm_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::RmspropNorm { eta, beta }, x1, cfg)
}

pub fn adam_norm_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    alpha: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::AdamNorm { eta, alpha, beta }, x1, cfg)
}

pub fn rmsprop_diag_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    beta: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::RmspropDiagonal { eta, beta, epsilon }, x1, cfg)
}

pub fn adam_diag_fp<O: Operator + ?Sized>(
    f: &O,
    x1: &[f64],
    eta: f64,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    adaptive(f, RmKind::AdamDiagonal { eta, alpha, beta, epsilon }, x1, cfg)
}

/// Every named iteration, for sweeps.
#[derive(Debug, Clone)]
pub enum Solver {
    /// Uses the configuration's `γ_t`.
    Km,
    ProjectedKm,
    Power,
    Ftrl { eta: Schedule },
    AdaGradNorm { eta: f64 },
    AdaGradDiagonal { eta: f64, epsilon: f64 },
    AdaGradFull { eta: f64, epsilon: f64 },
    RmspropNorm { eta: f64, beta: f64 },
    AdamNorm { eta: f64, alpha: f64, beta: f64 },
    RmspropDiagonal { eta: f64, beta: f64, epsilon: f64 },
    AdamDiagonal { eta: f64, alpha: f64, beta: f64, epsilon: f64 },
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Km => "km",
            Solver::ProjectedKm => "projected_km",
            Solver::Power => "power",
            Solver::Ftrl { .. } => "ftrl",
            Solver::AdaGradNorm { .. } => "adagrad_norm",
            Solver::AdaGradDiagonal { .. } => "adagrad_diagonal",
            Solver::AdaGradFull { .. } => "adagrad_full",
            Solver::RmspropNorm { .. } => "rmsprop_norm",
            Solver::AdamNorm { .. } => "adam_norm",
            Solver::RmspropDiagonal { .. } => "rmsprop_diagonal",
            Solver::AdamDiagonal { .. } => "adam_diagonal",
        }
    }

    pub fn solve<O: Operator + ?Sized>(&self, f: &O, x1: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
        let kind = match self {
            Solver::Km => return km(f, x1, cfg),
            Solver::ProjectedKm => return projected_km(f, x1, cfg),
            Solver::Power => return power_iteration(f, x1, cfg),
            Solver::Ftrl { eta } => RmKind::Ftrl { eta: eta.clone() },
            Solver::AdaGradNorm { eta } => RmKind::AdaGradNorm { eta: *eta },
            Solver::AdaGradDiagonal { eta, epsilon } => RmKind::AdaGradDiagonal { eta: *eta, epsilon: *epsilon },
            Solver::AdaGradFull { eta, epsilon } => RmKind::AdaGradFull { eta: *eta, epsilon: *epsilon },
            Solver::RmspropNorm { eta, beta } => RmKind::RmspropNorm { eta: *eta, beta: *beta },
            Solver::AdamNorm { eta, alpha, beta } => RmKind::AdamNorm { eta: *eta, alpha: *alpha, beta: *beta },
            Solver::RmspropDiagonal { eta, beta, epsilon } => {
                RmKind::RmspropDiagonal { eta: *eta, beta: *beta, epsilon: *epsilon }
            }
            Solver::AdamDiagonal { eta, alpha, beta, epsilon } => {
                RmKind::AdamDiagonal { eta: *eta, alpha: *alpha, beta: *beta, epsilon: *epsilon }
            }
        };
        adaptive(f, kind, x1, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    /// `2‖x₁ - x*‖/√T` on the last residual of KM with `γ = 1/2`.
    KmIntro,
    /// `‖x₁ - x*‖ / √(Σ γ_t(1 - γ_t))` on the last residual.
    Km,
    /// Same right-hand side on the minimum residual.
    ProjectedKm,
    FtrlFp,
    AdaGradNormI,
    AdaGradNormII,
    AdaGradDiagonalI,
    AdaGradDiagonalII,
    AdaGradFullI,
    AdaGradFullII,
}

impl TheoremId {
    pub fn name(self) -> &'static str {
        match self {
            TheoremId::KmIntro => "km_intro",
            TheoremId::Km => "km",
            TheoremId::ProjectedKm => "projected_km",
            TheoremId::FtrlFp => "ftrl_fp",
            TheoremId::AdaGradNormI => "adagrad_norm_i",
            TheoremId::AdaGradNormII => "adagrad_norm_ii",
            TheoremId::AdaGradDiagonalI => "adagrad_diagonal_i",
            TheoremId::AdaGradDiagonalII => "adagrad_diagonal_ii",
            TheoremId::AdaGradFullI => "adagrad_full_i",
            TheoremId::AdaGradFullII => "adagrad_full_ii",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the run a bound is evaluated for. Distances, `‖x₁ - x*‖`, `‖F(x₁) - x₁‖`
/// and `L_T` are read from the trace, which must have been recorded with `x*` (and with
/// `A` as metric for the diagonal and full-matrix guarantees).
#[derive(Debug, Clone, Default)]
pub struct BoundInputs {
    pub gamma: Option<Schedule>,
    pub eta: Option<f64>,
    pub eta_schedule: Option<Schedule>,
    pub epsilon: Option<f64>,
    /// Known coefficient `L`; replaces the measured `L_T` when present.
    pub l: Option<f64>,
    pub metric: Option<Metric>,
    /// `D`, replacing the measured trajectory radius when present.
    pub diameter: Option<f64>,
    /// Evaluate on the first `T` records only.
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub bound: f64,
    pub empirical: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    fn new(bound: f64, empirical: f64) -> Self {
        let slack = 1e-9 * bound.abs().max(1.0);
        BoundCheck { bound, empirical, satisfied: empirical <= bound + slack }
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.empirical
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub horizon: usize,
    pub bound: f64,
    pub empirical: f64,
    pub satisfied: bool,
    /// The accompanying Euclidean-norm statement, for the metric guarantees.
    pub euclidean: Option<BoundCheck>,
    /// `L` used in the bound (given or measured).
    pub l: Option<f64>,
    pub lt_measured: Option<f64>,
    pub trace_a: Option<f64>,
    pub lambda_max: Option<f64>,
    pub radius: Option<f64>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Whether `‖r_t‖²_{A⁻¹} ≤ 2⟨r_t, x* - x_t⟩` held along the trace.
    pub hypothesis: Option<bool>,
}

impl BoundReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied && self.euclidean.is_none_or(|e| e.satisfied)
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.empirical
    }
}

fn need<T: Clone>(v: &Option<T>, what: &'static str) -> Result<T> {
    v.clone().ok_or(Error::MissingInput(what))
}

fn radius_or(measured: f64, given: Option<f64>) -> Result<f64> {
    match given {
        None => Ok(measured),
        Some(d) if d >= measured * (1.0 - 1e-12) => Ok(d),
        Some(d) => Err(Error::InvalidParameter(format!("diameter {d} is below the trajectory radius {measured}"))),
    }
}

/// Evaluates the guarantee `id` on `trace`.
pub fn theorem_bound(id: TheoremId, trace: &IterationTrace, inputs: &BoundInputs) -> Result<BoundReport> {
    if trace.is_empty() {
        return Err(Error::MissingInput("non-empty trace"));
    }
    let t_max = inputs.horizon.unwrap_or(trace.len());
    if t_max == 0 || t_max > trace.len() {
        return Err(Error::InvalidParameter(format!("horizon {t_max} outside 1..={}", trace.len())));
    }
    let recs = &trace.records[..t_max];
    let tf = t_max as f64;
    let d1 = recs[0].dist_l2.ok_or(Error::MissingInput("trace recorded with x*"))?;
    let r1 = recs[0].l2;
    let last = &recs[t_max - 1];
    let min_l2 = last.min_l2;
    let radius_2 = recs.iter().filter_map(|r| r.dist_l2).fold(0.0, f64::max);
    let radius_inf = recs.iter().filter_map(|r| r.dist_inf).fold(0.0, f64::max);
    let lt_measured = last.local_lt;

    let mut rep = BoundReport {
        theorem: id,
        horizon: t_max,
        bound: f64::NAN,
        empirical: f64::NAN,
        satisfied: false,
        euclidean: None,
        l: None,
        lt_measured,
        trace_a: None,
        lambda_max: None,
        radius: None,
        eta: inputs.eta,
        epsilon: inputs.epsilon,
        hypothesis: None,
    };

    let coefficient = || -> Result<f64> {
        match inputs.l {
            Some(l) => Ok(l),
            None => {
                let lt = lt_measured.ok_or(Error::MissingInput("trace recorded with x*"))?;
                if lt.is_finite() {
                    Ok(lt)
                } else {
                    Err(Error::InfiniteLocalCoefficient)
                }
            }
        }
    };

    let (bound, empirical) = match id {
        TheoremId::KmIntro => (2.0 * d1 / tf.sqrt(), last.l2),
        TheoremId::Km | TheoremId::ProjectedKm => {
            let gamma = need(&inputs.gamma, "gamma schedule")?;
            let s: f64 = (1..=t_max).map(|t| gamma.at(t) * (1.0 - gamma.at(t))).sum();
            let emp = if id == TheoremId::Km { last.l2 } else { min_l2 };
            (d1 / s.sqrt(), emp)
        }
        TheoremId::FtrlFp => {
            let eta = need(&inputs.eta_schedule, "eta schedule")?;
            let at = |t: usize| eta.at(t.max(2));
            let s: f64 = (1..=t_max).map(|t| 1.0 - at(t)).sum();
            (d1 / (at(t_max) * s).sqrt(), min_l2)
        }
        TheoremId::AdaGradNormI => {
            let eta = need(&inputs.eta, "eta")?;
            let l = coefficient()?;
            rep.l = Some(l);
            if r1 == 0.0 {
                (0.0, min_l2)
            } else {
                let log_term = 2.0 * eta.max(1.0) * (eta * l / r1).max(1.0).ln();
                (l / tf.sqrt() * (d1 * d1 / eta + 3.0 * eta + log_term), min_l2)
            }
        }
        TheoremId::AdaGradNormII => {
            let d = radius_or(radius_2, inputs.diameter)?;
            let eta = inputs.eta.unwrap_or(d / 2f64.sqrt());
            let l = coefficient()?;
            rep.l = Some(l);
            rep.radius = Some(d);
            (l / tf.sqrt() * (d * d / eta + 2.0 * eta), min_l2)
        }
        TheoremId::AdaGradDiagonalI
        | TheoremId::AdaGradDiagonalII
        | TheoremId::AdaGradFullI
        | TheoremId::AdaGradFullII => {
            let metric = need(&inputs.metric, "metric A")?;
            let epsilon = need(&inputs.epsilon, "epsilon")?;
            let diagonal = matches!(id, TheoremId::AdaGradDiagonalI | TheoremId::AdaGradDiagonalII);
            if diagonal && matches!(metric, Metric::Full(_)) {
                return Err(Error::InvalidParameter("the diagonal guarantee needs a diagonal A".into()));
            }
            let dim = trace.initial_point.len();
            let stats = metric.stats(dim)?;
            let measured = if diagonal { radius_inf } else { radius_2 };
            let d = match id {
                TheoremId::AdaGradDiagonalII | TheoremId::AdaGradFullII => radius_or(measured, inputs.diameter)?,
                _ => measured,
            };
            let eta = match id {
                TheoremId::AdaGradDiagonalII | TheoremId::AdaGradFullII => inputs.eta.unwrap_or(d / 2f64.sqrt()),
                _ => need(&inputs.eta, "eta")?,
            };
            let eps_term = if diagonal { epsilon * dim as f64 } else { epsilon };
            let core = d * d / eta + 2.0 * eta;
            let bound = (stats.trace / tf).sqrt() * core + eps_term / (tf * stats.trace).sqrt();
            let euclid = (stats.trace * stats.lambda_max / tf).sqrt() * core + eps_term / tf.sqrt();
            let mut dual_min = f64::INFINITY;
            let mut hyp = true;
            for r in recs {
                let m = r.metric_norm.ok_or(Error::MissingInput("trace recorded with metric A"))?;
                dual_min = dual_min.min(m);
                let c = r.correlation.ok_or(Error::MissingInput("trace recorded with x*"))?;
                let floor = r.correlation_floor.unwrap_or(0.0);
                if r.l2 > LT_SKIP && c.abs() > floor && m * m > 2.0 * c + 1e-9 * (m * m) {
                    hyp = false;
                }
            }
            rep.trace_a = Some(stats.trace);
            rep.lambda_max = Some(stats.lambda_max);
            rep.radius = Some(d);
            rep.eta = Some(eta);
            rep.hypothesis = Some(hyp);
            rep.euclidean = Some(BoundCheck::new(euclid, min_l2));
            (bound, dual_min)
        }
    };
    if rep.radius.is_none() && matches!(id, TheoremId::AdaGradNormI) {
        rep.radius = Some(radius_2);
    }
    let check = BoundCheck::new(bound, empirical);
    rep.bound = bound;
    rep.empirical = empirical;
    rep.satisfied = check.satisfied;
    Ok(rep)
}

/// `‖x₁ - x*‖₂` helper for callers that keep the points around.
pub fn initial_distance(x1: &[f64], x_star: &[f64]) -> f64 {
    dist2(x1, x_star)
}

/// Effective AdaGrad-Norm step sizes `η / √(Σ_{s≤t} ‖r_s‖²)` along a trace.
pub fn adagrad_norm_steps(trace: &IterationTrace, eta: f64) -> Vec<f64> {
    let mut acc = 0.0;
    trace
        .records
        .iter()
        .map(|r| {
            acc += r.l2 * r.l2;
            if acc > 0.0 {
                eta / acc.sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

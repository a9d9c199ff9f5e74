//! Online linear optimization: regret minimizers driven by payoff vectors
//! (ascent convention, `x_{t+1} = x_t + η u_t`), regret accounting and the
//! corresponding regret bounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{dist2, dist_inf, dot, KahanSum, Matrix};
use crate::metric::{psd_eigen, trace_sqrt, Metric};
use crate::projections::{project, Domain};

/// Step-size or weight sequence indexed from `t = 1`.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// `c / √t`.
    InvSqrt(f64),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl Schedule {
    pub fn custom(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Schedule::Custom(Arc::new(f))
    }

    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1);
        match self {
            Schedule::Constant(c) => *c,
            Schedule::InvSqrt(c) => c / (t as f64).sqrt(),
            Schedule::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(c) => write!(f, "Constant({c})"),
            Schedule::InvSqrt(c) => write!(f, "InvSqrt({c})"),
            Schedule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(c) => write!(f, "{c}"),
            Schedule::InvSqrt(c) => write!(f, "{c}/sqrt(t)"),
            Schedule::Custom(_) => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum RmKind {
    Ogd { eta: f64 },
    ProjectedOgd { eta: Schedule },
    Ftrl { eta: Schedule },
    AdaGradNorm { eta: f64 },
    AdaGradDiagonal { eta: f64, epsilon: f64 },
    AdaGradFull { eta: f64, epsilon: f64 },
    RmspropNorm { eta: f64, beta: f64 },
    AdamNorm { eta: f64, alpha: f64, beta: f64 },
    RmspropDiagonal { eta: f64, beta: f64, epsilon: f64 },
    AdamDiagonal { eta: f64, alpha: f64, beta: f64, epsilon: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl RmKind {
    pub fn name(&self) -> &'static str {
        match self {
            RmKind::Ogd { .. } => "ogd",
            RmKind::ProjectedOgd { .. } => "projected_ogd",
            RmKind::Ftrl { .. } => "ftrl",
            RmKind::AdaGradNorm { .. } => "adagrad_norm",
            RmKind::AdaGradDiagonal { .. } => "adagrad_diagonal",
            RmKind::AdaGradFull { .. } => "adagrad_full",
            RmKind::RmspropNorm { .. } => "rmsprop_norm",
            RmKind::AdamNorm { .. } => "adam_norm",
            RmKind::RmspropDiagonal { .. } => "rmsprop_diagonal",
            RmKind::AdamDiagonal { .. } => "adam_diagonal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RmKind::Ogd { eta } | RmKind::AdaGradNorm { eta } => positive("eta", *eta),
            RmKind::ProjectedOgd { eta } | RmKind::Ftrl { eta } => {
                if let Schedule::Constant(c) | Schedule::InvSqrt(c) = eta {
                    positive("eta", *c)?;
                }
                Ok(())
            }
            RmKind::AdaGradDiagonal { eta, epsilon } | RmKind::AdaGradFull { eta, epsilon } => {
                positive("eta", *eta)?;
                positive("epsilon", *epsilon)
            }
            RmKind::RmspropNorm { eta, beta } => {
                positive("eta", *eta)?;
                unit_interval("beta", *beta)
            }
            RmKind::AdamNorm { eta, alpha, beta } => {
                positive("eta", *eta)?;
                unit_interval("alpha", *alpha)?;
                unit_interval("beta", *beta)
            }
            RmKind::RmspropDiagonal { eta, beta, epsilon } => {
                positive("eta", *eta)?;
                positive("epsilon", *epsilon)?;
                unit_interval("beta", *beta)
            }
            RmKind::AdamDiagonal { eta, alpha, beta, epsilon } => {
                positive("eta", *eta)?;
                positive("epsilon", *epsilon)?;
                unit_interval("alpha", *alpha)?;
                unit_interval("beta", *beta)
            }
        }
    }

    /// RMSprop and Adam variants are heuristics without a regret guarantee.
    pub fn has_bound(&self) -> bool {
        !matches!(
            self,
            RmKind::RmspropNorm { .. } | RmKind::AdamNorm { .. } | RmKind::RmspropDiagonal { .. } | RmKind::AdamDiagonal { .. }
        )
    }
}

/// Ordered payoffs `u_1..u_T`, the actions `x_1..x_T` they were played against,
/// and the action `x_{T+1}` that followed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PayoffLog {
    pub payoffs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub final_action: Vec<f64>,
}

impl PayoffLog {
    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.final_action.len()
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::MissingInput("non-empty payoff log"));
        }
        check_dim(self.payoffs.len(), self.actions.len())?;
        let d = self.dim();
        for (u, x) in self.payoffs.iter().zip(&self.actions) {
            check_dim(d, u.len())?;
            check_dim(d, x.len())?;
        }
        Ok(())
    }

    /// `Σ_t ‖u_t‖²`.
    pub fn payoff_sq_sum(&self) -> f64 {
        self.payoffs.iter().map(|u| dot(u, u)).collect::<KahanSum>().value()
    }

    /// `max_t ‖x_t - x‖₂`.
    pub fn radius_2(&self, x: &[f64]) -> f64 {
        self.actions.iter().map(|a| dist2(a, x)).fold(0.0, f64::max)
    }

    /// `max_t ‖x_t - x‖_∞`.
    pub fn radius_inf(&self, x: &[f64]) -> f64 {
        self.actions.iter().map(|a| dist_inf(a, x)).fold(0.0, f64::max)
    }
}

/// `Σ_t ⟨u_t, x - x_t⟩`, compensated.
pub fn regret(log: &PayoffLog, x: &[f64]) -> Result<f64> {
    log.validate()?;
    check_dim(log.dim(), x.len())?;
    let mut acc = KahanSum::new();
    for (u, xt) in log.payoffs.iter().zip(&log.actions) {
        for i in 0..x.len() {
            acc.add(u[i] * (x[i] - xt[i]));
        }
    }
    Ok(acc.value())
}

/// Exact telescoping value of unconstrained OGD regret:
/// `(‖x - x_1‖² - ‖x - x_{T+1}‖²)/(2η) + (η/2) Σ‖u_t‖²`.
pub fn ogd_identity(log: &PayoffLog, x: &[f64], eta: f64) -> Result<f64> {
    log.validate()?;
    check_dim(log.dim(), x.len())?;
    let a = dist2(x, &log.actions[0]).powi(2);
    let b = dist2(x, &log.final_action).powi(2);
    Ok((a - b) / (2.0 * eta) + 0.5 * eta * log.payoff_sq_sum())
}

/// `inf_{A diagonal} √(Tr A · Σ‖u_t‖²_{A⁻¹}) = Σ_i √(Σ_t u_{t,i}²)`.
pub fn inf_diagonal(log: &PayoffLog) -> f64 {
    let d = log.dim();
    (0..d)
        .map(|i| log.payoffs.iter().map(|u| u[i] * u[i]).collect::<KahanSum>().value().sqrt())
        .sum()
}

/// `inf_{A ≻ 0} √(Tr A · Σ‖u_t‖²_{A⁻¹}) = Tr((Σ u_t u_tᵀ)^{1/2})`.
pub fn inf_full(log: &PayoffLog) -> Result<f64> {
    let d = log.dim();
    let mut m = Matrix::zeros(d, d);
    for u in &log.payoffs {
        m.add_outer(1.0, u);
    }
    trace_sqrt(&m)
}

fn resolve_radius(measured: f64, given: Option<f64>) -> Result<f64> {
    match given {
        None => Ok(measured),
        Some(d) => {
            if d.is_nan() || d < measured * (1.0 - 1e-12) - 1e-15 {
                Err(Error::InvalidParameter(format!(
                    "diameter {d} is smaller than the trajectory radius {measured}"
                )))
            } else {
                Ok(d)
            }
        }
    }
}

/// Right-hand side of the regret bound of `kind` against comparator `x`.
///
/// Distances `D_{2,T}` / `D_{∞,T}` are measured on the logged actions; a supplied
/// `diameter` replaces them and must dominate them.
pub fn regret_bound(kind: &RmKind, log: &PayoffLog, x: &[f64], diameter: Option<f64>) -> Result<f64> {
    kind.validate()?;
    log.validate()?;
    check_dim(log.dim(), x.len())?;
    let t_max = log.len();
    let d0 = dist2(x, &log.actions[0]);
    match kind {
        RmKind::Ogd { eta } => Ok(d0 * d0 / (2.0 * eta) + 0.5 * eta * log.payoff_sq_sum()),
        RmKind::ProjectedOgd { eta } => {
            if let Schedule::Constant(e) = eta {
                return Ok(d0 * d0 / (2.0 * e) + 0.5 * e * log.payoff_sq_sum());
            }
            let r = resolve_radius(log.radius_2(x), diameter)?;
            let tail: KahanSum = log.payoffs.iter().enumerate().map(|(i, u)| 0.5 * eta.at(i + 1) * dot(u, u)).collect();
            Ok(r * r / (2.0 * eta.at(t_max)) + tail.value())
        }
        RmKind::Ftrl { eta } => {
            let at = |t: usize| eta.at(t.max(2));
            let tail: KahanSum = log.payoffs.iter().enumerate().map(|(i, u)| 0.5 * at(i + 1) * dot(u, u)).collect();
            Ok(d0 * d0 / (2.0 * at(t_max)) + tail.value())
        }
        RmKind::AdaGradNorm { eta } => {
            let r = resolve_radius(log.radius_2(x), diameter)?;
            Ok((r * r / (2.0 * eta) + eta) * log.payoff_sq_sum().sqrt())
        }
        RmKind::AdaGradDiagonal { eta, epsilon } => {
            let r = resolve_radius(log.radius_inf(x), diameter)?;
            Ok(epsilon / (2.0 * eta) * d0 * d0 + (r * r / (2.0 * eta) + eta) * inf_diagonal(log))
        }
        RmKind::AdaGradFull { eta, epsilon } => {
            let r = resolve_radius(log.radius_2(x), diameter)?;
            Ok(epsilon / (2.0 * eta) * d0 * d0 + (r * r / (2.0 * eta) + eta) * inf_full(log)?)
        }
        _ => Err(Error::NoBound(kind.name())),
    }
}

/// Diameter form of the AdaGrad bounds, valid for `η = D/√2` and `D ≥ diam X`.
pub fn regret_bound_radius(kind: &RmKind, log: &PayoffLog, diameter: f64) -> Result<f64> {
    kind.validate()?;
    log.validate()?;
    positive("diameter", diameter)?;
    let check_eta = |eta: f64| -> Result<()> {
        let tuned = diameter / 2f64.sqrt();
        if (eta - tuned).abs() > 1e-12 * tuned {
            Err(Error::InvalidParameter(format!("diameter bound needs eta = D/sqrt(2) = {tuned}, got {eta}")))
        } else {
            Ok(())
        }
    };
    let d = log.dim() as f64;
    match kind {
        RmKind::AdaGradNorm { eta } => {
            check_eta(*eta)?;
            Ok(diameter * (2.0 * log.payoff_sq_sum()).sqrt())
        }
        RmKind::AdaGradDiagonal { eta, epsilon } => {
            check_eta(*eta)?;
            Ok(diameter * (epsilon * d / 2f64.sqrt() + 2f64.sqrt() * inf_diagonal(log)))
        }
        RmKind::AdaGradFull { eta, epsilon } => {
            check_eta(*eta)?;
            Ok(diameter * (epsilon * d / 2f64.sqrt() + 2f64.sqrt() * inf_full(log)?))
        }
        _ => Err(Error::NoBound(kind.name())),
    }
}

/// Stateful regret minimizer. `step` consumes the payoff for the current action
/// and returns the next one.
#[derive(Debug, Clone)]
pub struct RegretMinimizer {
    kind: RmKind,
    domain: Domain,
    x: Vec<f64>,
    x1: Vec<f64>,
    t: usize,
    sq_sum: KahanSum,
    ema_sq: f64,
    coord_sq: Vec<KahanSum>,
    ema_coord_sq: Vec<f64>,
    full: Option<Matrix>,
    momentum: Vec<f64>,
    payoff_sum: Vec<KahanSum>,
}

impl RegretMinimizer {
    /// `x1` must lie in `domain` (tolerance `1e-10`).
    pub fn new(kind: RmKind, domain: Domain, x1: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        domain.validate()?;
        check_dim(domain.dim(), x1.len())?;
        check_finite(&x1, "initial action")?;
        let v = domain.violation(&x1);
        if v > 1e-10 {
            return Err(Error::OutsideDomain { violation: v });
        }
        let d = x1.len();
        let full = match &kind {
            RmKind::AdaGradFull { epsilon, .. } => Some(Matrix::from_diag(&vec![epsilon * epsilon; d])),
            _ => None,
        };
        Ok(RegretMinimizer {
            kind,
            domain,
            x: x1.clone(),
            x1,
            t: 0,
            sq_sum: KahanSum::new(),
            ema_sq: 0.0,
            coord_sq: vec![KahanSum::new(); d],
            ema_coord_sq: vec![0.0; d],
            full,
            momentum: vec![0.0; d],
            payoff_sum: vec![KahanSum::new(); d],
        })
    }

    pub fn kind(&self) -> &RmKind {
        &self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn action(&self) -> &[f64] {
        &self.x
    }

    pub fn initial_action(&self) -> &[f64] {
        &self.x1
    }

    /// Number of payoffs consumed so far.
    pub fn steps(&self) -> usize {
        self.t
    }

    /// `Σ‖u_s‖²` (AdaGrad-Norm) or its exponential average (RMSprop/Adam-Norm).
    pub fn norm_accumulator(&self) -> f64 {
        match self.kind {
            RmKind::RmspropNorm { .. } | RmKind::AdamNorm { .. } => self.ema_sq,
            _ => self.sq_sum.value(),
        }
    }

    /// Per-coordinate `Σ u_{s,i}²` or its exponential average.
    pub fn diagonal_accumulator(&self) -> Vec<f64> {
        match self.kind {
            RmKind::RmspropDiagonal { .. } | RmKind::AdamDiagonal { .. } => self.ema_coord_sq.clone(),
            _ => self.coord_sq.iter().map(KahanSum::value).collect(),
        }
    }

    /// `ε² I + Σ u_s u_sᵀ` for AdaGrad-Full.
    pub fn full_accumulator(&self) -> Option<&Matrix> {
        self.full.as_ref()
    }

    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub fn payoff_sum(&self) -> Vec<f64> {
        self.payoff_sum.iter().map(KahanSum::value).collect()
    }

    /// Current scaling `A_t` for the metric-based kinds.
    pub fn current_metric(&self) -> Result<Option<Metric>> {
        Ok(match &self.kind {
            RmKind::AdaGradDiagonal { eta, epsilon } => Some(Metric::Diagonal(diag_scaling(
                &self.diagonal_accumulator(),
                *eta,
                *epsilon,
            ))),
            RmKind::RmspropDiagonal { eta, epsilon, .. } | RmKind::AdamDiagonal { eta, epsilon, .. } => Some(
                Metric::Diagonal(diag_scaling(&self.ema_coord_sq, *eta, *epsilon)),
            ),
            RmKind::AdaGradFull { eta, .. } => {
                let acc = self.full.as_ref().expect("full accumulator");
                let root = crate::metric::sqrt_psd(acc)?;
                Some(Metric::full(root.scaled(1.0 / eta))?)
            }
            _ => None,
        })
    }

    fn project(&self, metric: &Metric, y: &[f64]) -> Result<Vec<f64>> {
        project(&self.domain, metric, y)
    }

    pub fn step(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.x.len(), u.len())?;
        check_finite(u, "payoff")?;
        self.t += 1;
        let t = self.t;
        let uu = dot(u, u);
        let next = match &self.kind {
            RmKind::Ogd { eta } => self.x.iter().zip(u).map(|(x, ui)| x + eta * ui).collect(),
            RmKind::ProjectedOgd { eta } => {
                let e = eta.at(t);
                let y: Vec<f64> = self.x.iter().zip(u).map(|(x, ui)| x + e * ui).collect();
                self.project(&Metric::Euclidean, &y)?
            }
            RmKind::Ftrl { eta } => {
                for (acc, ui) in self.payoff_sum.iter_mut().zip(u) {
                    acc.add(*ui);
                }
                let e = eta.at(t + 1);
                let y: Vec<f64> = self.x1.iter().zip(&self.payoff_sum).map(|(x, s)| x + e * s.value()).collect();
                self.project(&Metric::Euclidean, &y)?
            }
            RmKind::AdaGradNorm { eta } => {
                self.sq_sum.add(uu);
                let s = self.sq_sum.value();
                self.norm_step(*eta, s, u)?
            }
            RmKind::RmspropNorm { eta, beta } => {
                self.ema_sq = beta * self.ema_sq + uu;
                self.norm_step(*eta, self.ema_sq, u)?
            }
            RmKind::AdamNorm { eta, alpha, beta } => {
                self.ema_sq = beta * self.ema_sq + uu;
                for (m, ui) in self.momentum.iter_mut().zip(u) {
                    *m = alpha * *m + ui;
                }
                let dir = self.momentum.clone();
                self.norm_step(*eta, self.ema_sq, &dir)?
            }
            RmKind::AdaGradDiagonal { eta, epsilon } => {
                for (acc, ui) in self.coord_sq.iter_mut().zip(u) {
                    acc.add(ui * ui);
                }
                let a = diag_scaling(&self.diagonal_accumulator(), *eta, *epsilon);
                self.diag_step(a, u)?
            }
            RmKind::RmspropDiagonal { eta, beta, epsilon } => {
                for (acc, ui) in self.ema_coord_sq.iter_mut().zip(u) {
                    *acc = beta * *acc + ui * ui;
                }
                let a = diag_scaling(&self.ema_coord_sq, *eta, *epsilon);
                self.diag_step(a, u)?
            }
            RmKind::AdamDiagonal { eta, alpha, beta, epsilon } => {
                for (acc, ui) in self.ema_coord_sq.iter_mut().zip(u) {
                    *acc = beta * *acc + ui * ui;
                }
                for (m, ui) in self.momentum.iter_mut().zip(u) {
                    *m = alpha * *m + ui;
                }
                let a = diag_scaling(&self.ema_coord_sq, *eta, *epsilon);
                let dir = self.momentum.clone();
                self.diag_step(a, &dir)?
            }
            RmKind::AdaGradFull { eta, .. } => {
                let eta = *eta;
                let acc = self.full.as_mut().expect("full accumulator");
                acc.add_outer(1.0, u);
                let eig = psd_eigen(acc)?;
                // x + A_t⁻¹ u with A_t = η⁻¹ (ε²I + Σ u uᵀ)^{1/2}.
                let step = eig.apply(u, |l| if l > 0.0 { eta / l.sqrt() } else { 0.0 });
                let y: Vec<f64> = self.x.iter().zip(&step).map(|(x, s)| x + s).collect();
                if self.domain.is_all_space() {
                    y
                } else {
                    let a = Metric::full(eig.reconstruct(|l| l.max(0.0).sqrt() / eta))?;
                    self.project(&a, &y)?
                }
            }
        };
        check_finite(&next, "next action")?;
        self.x = next;
        Ok(self.x.clone())
    }

    fn norm_step(&self, eta: f64, s: f64, dir: &[f64]) -> Result<Vec<f64>> {
        if s <= 0.0 {
            return Ok(self.x.clone());
        }
        let e = eta / s.sqrt();
        let y: Vec<f64> = self.x.iter().zip(dir).map(|(x, d)| x + e * d).collect();
        self.project(&Metric::Euclidean, &y)
    }

    fn diag_step(&self, a: Vec<f64>, dir: &[f64]) -> Result<Vec<f64>> {
        let y: Vec<f64> = self.x.iter().zip(dir.iter().zip(&a)).map(|(x, (d, ai))| x + d / ai).collect();
        self.project(&Metric::Diagonal(a), &y)
    }

    /// Plays every payoff in turn and returns the resulting log.
    pub fn play(&mut self, payoffs: &[Vec<f64>]) -> Result<PayoffLog> {
        let mut log = PayoffLog::default();
        for u in payoffs {
            log.actions.push(self.x.clone());
            log.payoffs.push(u.clone());
            self.step(u)?;
        }
        log.final_action = self.x.clone();
        Ok(log)
    }
}

fn diag_scaling(acc: &[f64], eta: f64, epsilon: f64) -> Vec<f64> {
    acc.iter().map(|s| (epsilon * epsilon + s).sqrt() / eta).collect()
}

/// Numerical forms of the summation and trace inequalities behind the AdaGrad bounds.
pub mod lemmas {
    use super::*;
    use crate::metric::SpdMatrix;

    /// `Σ_t a_t / √(Σ_{s≤t} a_s)` with `0/0 = 0`; bounded by `2√(Σ a_t)`.
    pub fn inv_sqrt_sum(a: &[f64]) -> f64 {
        let mut partial = KahanSum::new();
        let mut total = KahanSum::new();
        for &v in a {
            partial.add(v);
            let p = partial.value();
            if p > 0.0 {
                total.add(v / p.sqrt());
            }
        }
        total.value()
    }

    /// `√(Tr A · Σ b_i² / a_i)` for diagonal `A = diag(a)`; never below `Σ b_i`.
    pub fn sum_sqrt_objective(b: &[f64], a: &[f64]) -> f64 {
        let tr: f64 = a.iter().sum();
        let s: f64 = b.iter().zip(a).map(|(bi, ai)| bi * bi / ai).sum();
        (tr * s).sqrt()
    }

    /// `Tr B^{1/2} + ½ Tr(B^{-1/2}(A - B)) - Tr A^{1/2}`, nonnegative for SPD `A`, `B`.
    pub fn klein_gap(a: &Matrix, b: &SpdMatrix) -> Result<f64> {
        let lhs = trace_sqrt(a)?;
        let diff = a.sub(b.matrix())?;
        let prod = b.inv_sqrt().matmul(&diff)?;
        let rhs: f64 = b.eigen().values.iter().map(|l| l.sqrt()).sum::<f64>() + 0.5 * prod.trace();
        Ok(rhs - lhs)
    }

    /// `√(Tr A · Tr(A⁻¹ M))`; never below `Tr M^{1/2}`.
    pub fn full_objective(m: &Matrix, a: &SpdMatrix) -> Result<f64> {
        let prod = a.inverse().matmul(m)?;
        Ok((a.trace() * prod.trace()).max(0.0).sqrt())
    }

    /// `A = P diag(√λ_i, or ε where λ_i = 0) Pᵀ` built from the spectrum of `M`.
    pub fn full_minimizer(m: &Matrix, epsilon: f64) -> Result<SpdMatrix> {
        let e = psd_eigen(m)?;
        let scale = e.max_value().max(1.0);
        SpdMatrix::new(e.reconstruct(|l| if l > 1e-14 * scale { l.sqrt() } else { epsilon }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adagrad_norm_first_step() {
        let mut rm = RegretMinimizer::new(RmKind::AdaGradNorm { eta: 1.0 }, Domain::AllSpace(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(rm.step(&[0.0, 2.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn adagrad_norm_ignores_leading_zero_payoffs() {
        let mut rm = RegretMinimizer::new(RmKind::AdaGradNorm { eta: 1.0 }, Domain::AllSpace(2), vec![0.5, 0.5]).unwrap();
        assert_eq!(rm.step(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn ogd_cumulative_sum_and_regret() {
        let mut rm = RegretMinimizer::new(RmKind::Ogd { eta: 1.0 }, Domain::AllSpace(1), vec![0.0]).unwrap();
        let log = rm.play(&[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(log.actions, vec![vec![0.0], vec![1.0]]);
        assert_eq!(log.final_action, vec![2.0]);
        assert_eq!(regret(&log, &[3.0]).unwrap(), 5.0);
        assert_eq!(ogd_identity(&log, &[3.0], 1.0).unwrap(), 5.0);
    }

    #[test]
    fn adagrad_diagonal_first_step() {
        let kind = RmKind::AdaGradDiagonal { eta: 1.0, epsilon: 1e-10 };
        let mut rm = RegretMinimizer::new(kind, Domain::AllSpace(2), vec![0.0, 0.0]).unwrap();
        let x = rm.step(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_payoffs_give_zero_regret_and_nonnegative_bounds() {
        let kinds = [
            RmKind::Ogd { eta: 0.5 },
            RmKind::ProjectedOgd { eta: Schedule::InvSqrt(1.0) },
            RmKind::Ftrl { eta: Schedule::Constant(0.5) },
            RmKind::AdaGradNorm { eta: 1.0 },
            RmKind::AdaGradDiagonal { eta: 1.0, epsilon: 0.1 },
            RmKind::AdaGradFull { eta: 1.0, epsilon: 0.1 },
        ];
        for kind in kinds {
            let domain = match kind {
                RmKind::AdaGradFull { .. } => Domain::AllSpace(2),
                _ => Domain::cube(2, -1.0, 1.0),
            };
            let mut rm = RegretMinimizer::new(kind.clone(), domain, vec![0.0, 0.0]).unwrap();
            let log = rm.play(&vec![vec![0.0, 0.0]; 5]).unwrap();
            assert_eq!(regret(&log, &[0.3, -0.2]).unwrap(), 0.0);
            assert!(regret_bound(&kind, &log, &[0.3, -0.2], None).unwrap() >= 0.0, "{}", kind.name());
        }
    }

    #[test]
    fn heuristics_have_no_bound() {
        let kind = RmKind::RmspropNorm { eta: 1.0, beta: 0.999 };
        let mut rm = RegretMinimizer::new(kind.clone(), Domain::AllSpace(1), vec![0.0]).unwrap();
        let log = rm.play(&[vec![1.0]]).unwrap();
        assert!(matches!(regret_bound(&kind, &log, &[0.0], None), Err(Error::NoBound(_))));
    }

    #[test]
    fn ema_accumulators_follow_recursion() {
        let kind = RmKind::AdamNorm { eta: 1.0, alpha: 0.5, beta: 0.25 };
        let mut rm = RegretMinimizer::new(kind, Domain::AllSpace(1), vec![0.0]).unwrap();
        rm.step(&[2.0]).unwrap();
        rm.step(&[1.0]).unwrap();
        assert_eq!(rm.norm_accumulator(), 0.25 * 4.0 + 1.0);
        assert_eq!(rm.momentum(), &[0.5 * 2.0 + 1.0]);
    }

    #[test]
    fn full_on_constrained_domain_is_unsupported() {
        let kind = RmKind::AdaGradFull { eta: 1.0, epsilon: 0.1 };
        let mut rm = RegretMinimizer::new(kind, Domain::cube(2, -1.0, 1.0), vec![0.0, 0.0]).unwrap();
        assert!(matches!(rm.step(&[1.0, 0.5]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nan_payoff_is_rejected() {
        let mut rm = RegretMinimizer::new(RmKind::Ogd { eta: 1.0 }, Domain::AllSpace(1), vec![0.0]).unwrap();
        assert!(matches!(rm.step(&[f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn radius_bound_requires_tuned_eta() {
        let kind = RmKind::AdaGradNorm { eta: 1.0 };
        let mut rm = RegretMinimizer::new(kind.clone(), Domain::cube(1, 0.0, 1.0), vec![0.0]).unwrap();
        let log = rm.play(&[vec![1.0]]).unwrap();
        assert!(regret_bound_radius(&kind, &log, 1.0).is_err());
        assert!(regret_bound_radius(&kind, &log, 2f64.sqrt()).is_ok());
    }

    #[test]
    fn lemma_helpers_on_small_cases() {
        assert_eq!(lemmas::inv_sqrt_sum(&[0.0, 0.0]), 0.0);
        assert!((lemmas::inv_sqrt_sum(&[4.0]) - 2.0).abs() < 1e-15);
        let b = [1.0, 2.0];
        assert!((lemmas::sum_sqrt_objective(&b, &b) - 3.0).abs() < 1e-15);
    }
}

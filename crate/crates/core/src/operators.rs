//! Operators `F: X → R^d`, the rescaled operator `F_A = I + A⁻¹(F - I)`, the
//! displacement `G = (I - F)/2` and sampling probes for co-coercivity.

use std::sync::Arc;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{dot, norm1, norm2, sub, Matrix};
use crate::metric::Metric;
use crate::par::{self, Execution};
use crate::projections::Domain;

/// Points are accepted as lying in a domain up to this violation.
pub const DOMAIN_TOL: f64 = 1e-9;
/// Relative tolerance of the probe inequalities and of their cross-check.
pub const PROBE_TOL: f64 = 1e-9;
/// Iterates with a residual at or below this are skipped by `local_lt`.
pub const LT_SKIP: f64 = 1e-14;
/// Allowed residual of a reference fixed point, relative to `max(1, ‖x*‖)`.
pub const FIXED_POINT_TOL: f64 = 1e-10;

pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> &Domain;
    /// Writes `F(x)` into `out`. Must be deterministic.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Number of elementary oracle calls one evaluation costs.
    fn cost(&self) -> u64 {
        1
    }

    fn label(&self) -> &str {
        "operator"
    }
}

impl<O: Operator + ?Sized> Operator for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn cost(&self) -> u64 {
        (**self).cost()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

impl<O: Operator + ?Sized> Operator for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn cost(&self) -> u64 {
        (**self).cost()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

impl<O: Operator + ?Sized> Operator for Arc<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn cost(&self) -> u64 {
        (**self).cost()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Operator defined by a closure.
pub struct FnOperator {
    domain: Domain,
    label: String,
    cost: u64,
    f: Box<EvalFn>,
}

impl FnOperator {
    pub fn new(domain: Domain, label: impl Into<String>, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        FnOperator { domain, label: label.into(), cost: 1, f: Box::new(f) }
    }

    pub fn with_cost(mut self, cost: u64) -> Self {
        self.cost = cost;
        self
    }
}

impl std::fmt::Debug for FnOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnOperator").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

impl Operator for FnOperator {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
    fn cost(&self) -> u64 {
        self.cost
    }
    fn label(&self) -> &str {
        &self.label
    }
}

/// `F(x) = Mx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: Matrix,
    offset: Option<Vec<f64>>,
    domain: Domain,
    label: String,
}

impl LinearOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        let d = matrix.rows();
        Ok(LinearOperator { matrix, offset: None, domain: Domain::AllSpace(d), label: "linear".into() })
    }

    /// `F(x) = x* + M(x - x*)`, which fixes `x*`.
    pub fn around(matrix: Matrix, x_star: &[f64]) -> Result<Self> {
        let mut op = Self::new(matrix)?;
        check_dim(op.dim(), x_star.len())?;
        let mx = op.matrix.mul_vec(x_star);
        op.offset = Some(sub(x_star, &mx));
        Ok(op)
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        check_dim(self.matrix.rows(), domain.dim())?;
        self.domain = domain;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> Option<&[f64]> {
        self.offset.as_deref()
    }
}

impl Operator for LinearOperator {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec_into(x, out);
        if let Some(b) = &self.offset {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += bi;
            }
        }
    }
    fn label(&self) -> &str {
        &self.label
    }
}

/// `F_A = I + A⁻¹(F - I)`; same fixed points and domain as `F`.
#[derive(Debug, Clone)]
pub struct Scaled<O> {
    inner: O,
    metric: Metric,
}

pub fn scale_operator<O: Operator>(inner: O, metric: Metric) -> Result<Scaled<O>> {
    metric.validate()?;
    if let Some(d) = metric.dim() {
        check_dim(inner.dim(), d)?;
    }
    Ok(Scaled { inner, metric })
}

impl<O> Scaled<O> {
    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Operator> Operator for Scaled<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> &Domain {
        self.inner.domain()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        let r: Vec<f64> = out.iter().zip(x).map(|(f, xi)| f - xi).collect();
        let step = self.metric.apply_inverse(&r).expect("metric dimension checked at construction");
        for ((o, xi), s) in out.iter_mut().zip(x).zip(step) {
            *o = xi + s;
        }
    }
    fn cost(&self) -> u64 {
        self.inner.cost()
    }
    fn label(&self) -> &str {
        self.inner.label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `F(x) - x`.
    pub vector: Vec<f64>,
    pub l2: f64,
    pub l1: f64,
    /// `‖F(x) - x‖_{A⁻¹}` for the metric passed in, the norm the adaptive guarantees use.
    pub metric_norm: Option<f64>,
}

fn check_in_domain<O: Operator + ?Sized>(f: &O, x: &[f64]) -> Result<()> {
    check_dim(f.dim(), x.len())?;
    check_finite(x, "operator input")?;
    let v = f.domain().violation(x);
    if v > DOMAIN_TOL {
        return Err(Error::OutsideDomain { violation: v });
    }
    Ok(())
}

/// Fixed-point residual `F(x) - x` and its norms. Points outside the domain are an error.
pub fn residual<O: Operator + ?Sized>(f: &O, x: &[f64], metric: Option<&Metric>) -> Result<Residual> {
    residual_with_image(f, x, metric).map(|(_, r)| r)
}

/// Like `residual`, also returning `F(x)` itself.
pub fn residual_with_image<O: Operator + ?Sized>(
    f: &O,
    x: &[f64],
    metric: Option<&Metric>,
) -> Result<(Vec<f64>, Residual)> {
    check_in_domain(f, x)?;
    let fx = f.apply(x);
    check_finite(&fx, "operator output")?;
    let vector = sub(&fx, x);
    let metric_norm = metric.map(|m| m.norm(&vector, true)).transpose()?;
    Ok((fx, Residual { l2: norm2(&vector), l1: norm1(&vector), vector, metric_norm }))
}

/// `G(x) = (x - F(x)) / 2`.
pub fn displacement<O: Operator + ?Sized>(f: &O, x: &[f64]) -> Result<Vec<f64>> {
    check_in_domain(f, x)?;
    let fx = f.apply(x);
    Ok(x.iter().zip(&fx).map(|(a, b)| 0.5 * (a - b)).collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeReport {
    pub samples: usize,
    /// Samples whose co-coercivity margin is below `-PROBE_TOL · scale`.
    pub violations: usize,
    /// Minimum of `⟨dG, dx⟩ - ‖dG‖²_{A⁻¹}` over the samples.
    pub worst_margin: f64,
    /// Samples where the co-coercivity and nonexpansiveness checks disagree.
    pub disagreements: usize,
    pub margins: Vec<f64>,
}

impl ProbeReport {
    pub fn clean(&self) -> bool {
        self.violations == 0
    }
}

struct Sample {
    margin: f64,
    violated: bool,
    disagree: bool,
}

/// Both sides of the characterization for one displacement pair.
/// `dx = x' - x`, `dr = (F(x') - x') - (F(x) - x)`.
fn probe_sample(metric: &Metric, dx: &[f64], dr: &[f64]) -> Result<Sample> {
    let dg: Vec<f64> = dr.iter().map(|v| -0.5 * v).collect();
    let a_inv_dg = metric.apply_inverse(&dg)?;
    let dg_dual_sq = dot(&dg, &a_inv_dg);
    let co = dot(&dg, dx) - dg_dual_sq;
    // F_A(x') - F_A(x) = dx - 2 A⁻¹ dG.
    let dfa: Vec<f64> = dx.iter().zip(&a_inv_dg).map(|(a, b)| a - 2.0 * b).collect();
    let dx_sq = metric.inner(dx, dx)?;
    let dfa_sq = metric.inner(&dfa, &dfa)?;
    let ne = dx_sq - dfa_sq;
    let scale = (dx_sq + dg_dual_sq).max(f64::MIN_POSITIVE);
    let violated = co < -PROBE_TOL * scale;
    let ne_violated = ne < -4.0 * PROBE_TOL * scale;
    let mismatch = (ne - 4.0 * co).abs() > PROBE_TOL * (dx_sq + dfa_sq + 4.0 * dg_dual_sq).max(f64::MIN_POSITIVE);
    Ok(Sample { margin: co, violated, disagree: mismatch || violated != ne_violated })
}

fn report(samples: Vec<Sample>) -> ProbeReport {
    let mut r = ProbeReport { samples: samples.len(), worst_margin: f64::INFINITY, ..Default::default() };
    for s in samples {
        r.violations += s.violated as usize;
        r.disagreements += s.disagree as usize;
        r.worst_margin = r.worst_margin.min(s.margin);
        r.margins.push(s.margin);
    }
    r
}

/// Checks `⟨G(x') - G(x), x' - x⟩ ≥ ‖G(x') - G(x)‖²_{A⁻¹}` on every pair and
/// cross-checks it against `‖F_A(x') - F_A(x)‖_A ≤ ‖x' - x‖_A`.
pub fn cocoercivity_probe<O: Operator + ?Sized>(
    f: &O,
    metric: &Metric,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<ProbeReport> {
    cocoercivity_probe_with(Execution::default(), f, metric, pairs)
}

pub fn cocoercivity_probe_with<O: Operator + ?Sized>(
    exec: Execution,
    f: &O,
    metric: &Metric,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<ProbeReport> {
    let samples = par::map(exec, pairs, |(x, y)| -> Result<Sample> {
        let rx = residual(f, x, None)?;
        let ry = residual(f, y, None)?;
        probe_sample(metric, &sub(y, x), &sub(&ry.vector, &rx.vector))
    });
    Ok(report(samples.into_iter().collect::<Result<Vec<_>>>()?))
}

fn check_fixed_point<O: Operator + ?Sized>(f: &O, x_star: &[f64]) -> Result<Residual> {
    let r = residual(f, x_star, None)?;
    if r.l2 > FIXED_POINT_TOL * norm2(x_star).max(1.0) {
        return Err(Error::NotFixedPoint { residual: r.l2 });
    }
    Ok(r)
}

/// Checks `⟨G(x), x - x*⟩ ≥ ‖G(x)‖²_{A⁻¹}` per point, cross-checked against
/// `‖F_A(x) - x*‖_A ≤ ‖x - x*‖_A`.
pub fn star_cocoercivity_probe<O: Operator + ?Sized>(
    f: &O,
    metric: &Metric,
    x_star: &[f64],
    points: &[Vec<f64>],
) -> Result<ProbeReport> {
    star_cocoercivity_probe_with(Execution::default(), f, metric, x_star, points)
}

pub fn star_cocoercivity_probe_with<O: Operator + ?Sized>(
    exec: Execution,
    f: &O,
    metric: &Metric,
    x_star: &[f64],
    points: &[Vec<f64>],
) -> Result<ProbeReport> {
    let rs = check_fixed_point(f, x_star)?;
    let samples = par::map(exec, points, |x| -> Result<Sample> {
        let rx = residual(f, x, None)?;
        probe_sample(metric, &sub(x, x_star), &sub(&rx.vector, &rs.vector))
    });
    Ok(report(samples.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Local coefficient `L_T = sup_t ‖r_t‖² / (2⟨r_t, x* - x_t⟩)` with `r_t = F(x_t) - x_t`.
pub fn local_lt<O: Operator + ?Sized>(f: &O, x_star: &[f64], iterates: &[Vec<f64>]) -> Result<f64> {
    check_fixed_point(f, x_star)?;
    let mut lt = 0.0f64;
    for x in iterates {
        let r = residual(f, x, None)?;
        lt = lt.max(lt_ratio(&r.vector, x, x_star));
    }
    Ok(lt)
}

/// Rounding floor of `⟨r, x* - x⟩` when `r = F(x) - x` is computed in floating point:
/// below it the sign of the correlation is not resolved.
pub fn correlation_floor(r: &[f64], x: &[f64], x_star: &[f64]) -> f64 {
    let fx: Vec<f64> = x.iter().zip(r).map(|(a, b)| a + b).collect();
    let scale = norm2(x) + norm2(&fx) + norm2(x_star);
    let dist: f64 = x_star.iter().zip(x).map(|(s, xi)| (s - xi) * (s - xi)).sum::<f64>().sqrt();
    64.0 * f64::EPSILON * (x.len() as f64).sqrt() * scale * dist
}

/// One term of the supremum in `local_lt`; zero for skipped iterates (residual at most
/// `LT_SKIP`, or correlation within its rounding floor).
pub fn lt_ratio(r: &[f64], x: &[f64], x_star: &[f64]) -> f64 {
    let r2 = dot(r, r);
    if r2.sqrt() <= LT_SKIP {
        return 0.0;
    }
    let corr: f64 = r.iter().zip(x_star.iter().zip(x)).map(|(ri, (s, xi))| ri * (s - xi)).sum();
    if corr.abs() <= correlation_floor(r, x, x_star) {
        return 0.0;
    }
    if corr <= 0.0 {
        f64::INFINITY
    } else {
        r2 / (2.0 * corr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neg() -> FnOperator {
        FnOperator::new(Domain::AllSpace(2), "neg", |x, out| {
            for (o, v) in out.iter_mut().zip(x) {
                *o = -v;
            }
        })
    }

    fn ident() -> FnOperator {
        FnOperator::new(Domain::AllSpace(2), "id", |x, out| out.copy_from_slice(x))
    }

    #[test]
    fn residual_examples() {
        let r = residual(&ident(), &[3.0, -1.0], None).unwrap();
        assert_eq!((r.l2, r.l1), (0.0, 0.0));
        let r = residual(&neg(), &[3.0, 4.0], None).unwrap();
        assert_eq!(r.vector, vec![-6.0, -8.0]);
        assert_eq!(r.l2, 10.0);
    }

    #[test]
    fn residual_rejects_points_outside_domain() {
        let f = FnOperator::new(Domain::Simplex(2), "id", |x, out| out.copy_from_slice(x));
        assert!(matches!(residual(&f, &[0.7, 0.7], None), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(displacement(&neg(), &[2.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(displacement(&ident(), &[2.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn local_lt_examples() {
        let pts = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        assert_eq!(local_lt(&ident(), &[0.0, 0.0], &pts).unwrap(), 0.0);
        assert!((local_lt(&neg(), &[0.0, 0.0], &pts).unwrap() - 1.0).abs() < 1e-15);
        let shifted = FnOperator::new(Domain::AllSpace(2), "shift", |x, out| {
            out[0] = x[0] + 1.0;
            out[1] = x[1];
        });
        assert!(matches!(local_lt(&shifted, &[0.0, 0.0], &pts), Err(Error::NotFixedPoint { .. })));
    }

    #[test]
    fn scaled_identity_metric_is_noop() {
        let m = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.9]]).unwrap();
        let f = LinearOperator::new(m).unwrap();
        let fa = scale_operator(f.clone(), Metric::Euclidean).unwrap();
        let x = [0.7, -1.3];
        assert_eq!(f.apply(&x), fa.apply(&x));
    }

    #[test]
    fn affine_operator_fixes_its_centre() {
        let m = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let f = LinearOperator::around(m, &[1.0, 2.0]).unwrap();
        let r = residual(&f, &[1.0, 2.0], None).unwrap();
        assert!(r.l2 < 1e-15);
    }

    #[test]
    fn identity_probe_is_clean() {
        let pairs = vec![(vec![0.0, 1.0], vec![2.0, -1.0]), (vec![5.0, 5.0], vec![-1.0, 0.0])];
        let r = cocoercivity_probe(&ident(), &Metric::Euclidean, &pairs).unwrap();
        assert_eq!((r.samples, r.violations, r.disagreements), (2, 0, 0));
        let s = star_cocoercivity_probe(&ident(), &Metric::Euclidean, &[0.0, 0.0], &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(s.violations, 0);
    }
}

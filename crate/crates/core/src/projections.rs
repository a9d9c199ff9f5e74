//! Convex domains and the projections `Π_X` and `Π_{X,A}`.

use crate::error::{check_dim, check_finite, Error, Result};
use crate::metric::Metric;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    AllSpace(usize),
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Unit simplex `{x ≥ 0, Σx = 1}`.
    Simplex(usize),
    /// `{‖x‖_∞ ≤ radius}`.
    InfBall { dim: usize, radius: f64 },
    /// Cartesian product; blocks are laid out consecutively.
    Product(Vec<Domain>),
}

impl Domain {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain::Box { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::AllSpace(d) | Domain::Simplex(d) => *d,
            Domain::Box { lo, .. } => lo.len(),
            Domain::InfBall { dim, .. } => *dim,
            Domain::Product(blocks) => blocks.iter().map(Domain::dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::AllSpace(_) => Ok(()),
            Domain::Simplex(d) => {
                if *d == 0 {
                    Err(Error::InvalidParameter("simplex dimension must be positive".into()))
                } else {
                    Ok(())
                }
            }
            Domain::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                if lo.iter().zip(hi).all(|(l, h)| l <= h && !l.is_nan() && !h.is_nan()) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("box bounds must satisfy lo <= hi".into()))
                }
            }
            Domain::InfBall { radius, .. } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")))
                }
            }
            Domain::Product(blocks) => blocks.iter().try_for_each(Domain::validate),
        }
    }

    pub fn is_all_space(&self) -> bool {
        match self {
            Domain::AllSpace(_) => true,
            Domain::Product(blocks) => blocks.iter().all(Domain::is_all_space),
            _ => false,
        }
    }

    /// Largest constraint violation of `x` (zero inside the domain).
    pub fn violation(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        if x.iter().any(|v| v.is_nan()) {
            return f64::INFINITY;
        }
        match self {
            Domain::AllSpace(_) => 0.0,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .fold(0.0, |m, (v, (l, h))| m.max(l - v).max(v - h)),
            Domain::Simplex(_) => {
                let neg = x.iter().fold(0.0f64, |m, v| m.max(-v));
                let sum: f64 = x.iter().sum();
                neg.max((sum - 1.0).abs())
            }
            Domain::InfBall { radius, .. } => x.iter().fold(0.0f64, |m, v| m.max(v.abs() - radius)),
            Domain::Product(blocks) => {
                let mut off = 0;
                let mut worst = 0.0f64;
                for b in blocks {
                    let d = b.dim();
                    worst = worst.max(b.violation(&x[off..off + d]));
                    off += d;
                }
                worst
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Euclidean diameter (infinite for unbounded domains).
    pub fn diameter_2(&self) -> f64 {
        match self {
            Domain::AllSpace(d) => {
                if *d == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt(),
            Domain::Simplex(d) => {
                if *d > 1 {
                    2f64.sqrt()
                } else {
                    0.0
                }
            }
            Domain::InfBall { dim, radius } => 2.0 * radius * (*dim as f64).sqrt(),
            Domain::Product(blocks) => blocks.iter().map(|b| b.diameter_2().powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Diameter in the sup norm.
    pub fn diameter_inf(&self) -> f64 {
        match self {
            Domain::AllSpace(d) => {
                if *d == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Domain::Box { lo, hi } => lo.iter().zip(hi).fold(0.0, |m, (l, h)| m.max(h - l)),
            Domain::Simplex(d) => {
                if *d > 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Domain::InfBall { radius, .. } => 2.0 * radius,
            Domain::Product(blocks) => blocks.iter().fold(0.0, |m, b| m.max(b.diameter_inf())),
        }
    }

    /// A canonical interior-ish point: the origin, the box centre or the barycentre.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::AllSpace(d) => vec![0.0; *d],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Domain::Simplex(d) => vec![1.0 / *d as f64; *d],
            Domain::InfBall { dim, .. } => vec![0.0; *dim],
            Domain::Product(blocks) => blocks.iter().flat_map(Domain::center).collect(),
        }
    }

    pub fn project(&self, metric: &Metric, y: &[f64]) -> Result<Vec<f64>> {
        project(self, metric, y)
    }
}

/// `Π_{X,A}(y) = argmin_{z ∈ X} ‖z - y‖_A`.
pub fn project(domain: &Domain, metric: &Metric, y: &[f64]) -> Result<Vec<f64>> {
    domain.validate()?;
    metric.validate()?;
    check_dim(domain.dim(), y.len())?;
    if let Some(d) = metric.dim() {
        check_dim(d, y.len())?;
    }
    check_finite(y, "projection input")?;
    if domain.is_all_space() {
        return Ok(y.to_vec());
    }
    let weights = metric.diagonal_weights(y.len()).ok_or_else(|| {
        Error::Unsupported("full-matrix metric projection is only available on the whole space".into())
    })?;
    project_separable(domain, &weights, y)
}

fn project_separable(domain: &Domain, w: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    match domain {
        Domain::AllSpace(_) => Ok(y.to_vec()),
        Domain::Box { .. } | Domain::InfBall { .. } => clamp(domain, y),
        Domain::Simplex(_) => {
            if w.iter().all(|&a| a == w[0]) {
                Ok(project_simplex_euclidean(y))
            } else {
                project_simplex_weighted(y, w)
            }
        }
        Domain::Product(blocks) => {
            let mut out = Vec::with_capacity(y.len());
            let mut off = 0;
            for b in blocks {
                let d = b.dim();
                out.extend(project_separable(b, &w[off..off + d], &y[off..off + d])?);
                off += d;
            }
            Ok(out)
        }
    }
}

/// Euclidean projection onto the unit simplex by sorting and thresholding.
pub fn project_simplex_euclidean(y: &[f64]) -> Vec<f64> {
    if y.is_empty() {
        return Vec::new();
    }
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

const WEIGHTED_SUM_TOL: f64 = 1e-12;

/// `argmin_{x ∈ Δ} Σ a_i (x_i - y_i)²`, solved through the multiplier `μ` of
/// `x_i(μ) = max(0, y_i - μ/a_i)` by bisection, followed by an exact solve on the
/// detected support.
pub fn project_simplex_weighted(y: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    check_dim(y.len(), a.len())?;
    check_finite(y, "weighted simplex projection input")?;
    if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!("simplex weights must be positive, got {v}")));
    }
    if y.is_empty() {
        return Ok(Vec::new());
    }
    let at = |mu: f64| -> Vec<f64> { y.iter().zip(a).map(|(yi, ai)| (yi - mu / ai).max(0.0)).collect() };
    let total = |mu: f64| -> f64 { y.iter().zip(a).map(|(yi, ai)| (yi - mu / ai).max(0.0)).sum() };

    let ay_min = y.iter().zip(a).map(|(yi, ai)| yi * ai).fold(f64::INFINITY, f64::min);
    let ay_max = y.iter().zip(a).map(|(yi, ai)| yi * ai).fold(f64::NEG_INFINITY, f64::max);
    let a_max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = ay_min - a_max;
    let mut hi = ay_max;
    let mut width = (hi - lo).max(1.0);
    while total(lo) < 1.0 {
        lo -= width;
        width *= 2.0;
    }
    width = (hi - lo).max(1.0);
    while total(hi) > 1.0 {
        hi += width;
        width *= 2.0;
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let s = total(mu);
        if (s - 1.0).abs() <= WEIGHTED_SUM_TOL {
            break;
        }
        if s > 1.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= f64::EPSILON * mu.abs().max(1.0) {
            break;
        }
    }

    // On the support S the optimality conditions are linear in μ.
    let mut best = at(mu);
    let mut best_err = (best.iter().sum::<f64>() - 1.0).abs();
    for _ in 0..y.len() {
        let support: Vec<usize> = (0..y.len()).filter(|&i| best[i] > 0.0).collect();
        if support.is_empty() {
            break;
        }
        let num: f64 = support.iter().map(|&i| y[i]).sum::<f64>() - 1.0;
        let den: f64 = support.iter().map(|&i| 1.0 / a[i]).sum();
        let cand = at(num / den);
        let err = (cand.iter().sum::<f64>() - 1.0).abs();
        let same_support = (0..y.len()).all(|i| (cand[i] > 0.0) == (best[i] > 0.0));
        if err <= best_err {
            best = cand;
            best_err = err;
        }
        if same_support {
            break;
        }
    }
    Ok(best)
}

/// Componentwise clamp onto a box or an `ℓ∞` ball; exact for every diagonal metric.
pub fn clamp(domain: &Domain, y: &[f64]) -> Result<Vec<f64>> {
    check_dim(domain.dim(), y.len())?;
    match domain {
        Domain::Box { lo, hi } => Ok(y.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.max(*l).min(*h)).collect()),
        Domain::InfBall { radius, .. } => Ok(y.iter().map(|v| v.max(-radius).min(*radius)).collect()),
        _ => Err(Error::Unsupported("clamp needs a box or an l-infinity ball".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_space_is_identity() {
        let y = [1.5, -2.0];
        assert_eq!(project(&Domain::AllSpace(2), &Metric::Euclidean, &y).unwrap(), y.to_vec());
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project(&Domain::Simplex(2), &Metric::Euclidean, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_simplex_euclidean(&[0.5, 0.5, -1.0]), vec![0.5, 0.5, 0.0]);
        let inside = [0.2, 0.3, 0.5];
        let p = project_simplex_euclidean(&inside);
        for (a, b) in p.iter().zip(&inside) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = project_simplex_weighted(&[2.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);
    }

    #[test]
    fn clamp_examples() {
        let ball = Domain::InfBall { dim: 2, radius: 0.1 };
        assert_eq!(clamp(&ball, &[0.05, -0.2]).unwrap(), vec![0.05, -0.1]);
        let bx = Domain::cube(2, 0.0, 1.0);
        assert_eq!(clamp(&bx, &[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
        assert!(clamp(&Domain::Simplex(2), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn full_metric_on_constrained_domain_is_unsupported() {
        let m = Metric::full(crate::linalg::Matrix::identity(2)).unwrap();
        assert!(matches!(project(&Domain::Simplex(2), &m, &[0.3, 0.3]), Err(Error::Unsupported(_))));
        assert!(matches!(project(&Domain::cube(2, 0.0, 1.0), &m, &[0.3, 0.3]), Err(Error::Unsupported(_))));
        assert!(project(&Domain::AllSpace(2), &m, &[0.3, 0.3]).is_ok());
    }

    #[test]
    fn nan_and_bad_weights_are_errors() {
        assert!(matches!(
            project(&Domain::Simplex(2), &Metric::Euclidean, &[f64::NAN, 0.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(project_simplex_weighted(&[0.1, 0.2], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn product_projects_blockwise() {
        let dom = Domain::Product(vec![Domain::Simplex(2), Domain::cube(1, 0.0, 1.0)]);
        let p = project(&dom, &Metric::Diagonal(vec![1.0, 3.0, 2.0]), &[2.0, 0.0, 5.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2] == 1.0);
        assert!(dom.contains(&p, 1e-12));
    }

    #[test]
    fn diameters() {
        assert!((Domain::cube(4, -1.0, 1.0).diameter_2() - 4.0).abs() < 1e-15);
        assert_eq!(Domain::cube(4, -1.0, 1.0).diameter_inf(), 2.0);
        assert!(Domain::AllSpace(3).diameter_2().is_infinite());
    }
}

//! Anisotropic ROF denoising, `min_u ½‖u - f‖² + λ‖∇u‖₁`, and the Chambolle-Pock map
//! `F(u, p) = (2u' - u, 2Π_{[-λ, λ]}(p + σ∇ū) - p)` with
//! `u' = (u + τ div p + τ f)/(1 + τ)` and `ū = u' + θ(u' - u)`.
//! KM with weight 1/2 on `F` is the Chambolle-Pock iteration.

use crate::error::{check_dim, Error, Result};
use crate::operators::Operator;
use crate::projections::Domain;

use super::pgm::Image;

/// Forward differences with Neumann boundary. Returns the vertical then horizontal
/// component, each `rows × cols` row-major.
pub fn grad2d(u: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    check_shape(rows, cols)?;
    check_dim(rows * cols, u.len())?;
    let mut g = vec![0.0; 2 * rows * cols];
    grad_into(u, rows, cols, &mut g);
    Ok(g)
}

/// Negative adjoint of `grad2d`.
pub fn div2d(p: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    check_shape(rows, cols)?;
    check_dim(2 * rows * cols, p.len())?;
    let mut d = vec![0.0; rows * cols];
    div_into(p, rows, cols, &mut d);
    Ok(d)
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter(format!("image must be at least 2x2, got {rows}x{cols}")));
    }
    Ok(())
}

fn grad_into(u: &[f64], rows: usize, cols: usize, g: &mut [f64]) {
    let n = rows * cols;
    let (gv, gh) = g.split_at_mut(n);
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            gv[k] = if i + 1 < rows { u[k + cols] - u[k] } else { 0.0 };
            gh[k] = if j + 1 < cols { u[k + 1] - u[k] } else { 0.0 };
        }
    }
}

fn div_into(p: &[f64], rows: usize, cols: usize, d: &mut [f64]) {
    let n = rows * cols;
    let (pv, ph) = p.split_at(n);
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let mut v = 0.0;
            if i + 1 < rows {
                v += pv[k];
            }
            if i > 0 {
                v -= pv[k - cols];
            }
            if j + 1 < cols {
                v += ph[k];
            }
            if j > 0 {
                v -= ph[k - 1];
            }
            d[k] = v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RofSpec {
    pub image: Image,
    pub lambda: f64,
    pub tau: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl RofSpec {
    pub fn new(image: Image, lambda: f64, tau: f64, sigma: f64, theta: f64) -> Self {
        RofSpec { image, lambda, tau, sigma, theta }
    }

    pub fn validate(&self) -> Result<()> {
        check_shape(self.image.rows, self.image.cols)?;
        for (name, v) in [("lambda", self.lambda), ("tau", self.tau), ("sigma", self.sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        if self.image.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RofOperator {
    spec: RofSpec,
    domain: Domain,
}

pub fn build_rof(spec: RofSpec) -> Result<RofOperator> {
    spec.validate()?;
    let d = 3 * spec.image.len();
    Ok(RofOperator { spec, domain: Domain::AllSpace(d) })
}

impl RofOperator {
    pub fn spec(&self) -> &RofSpec {
        &self.spec
    }

    fn pixels(&self) -> usize {
        self.spec.image.len()
    }

    /// The usual starting point `(f, 0)`.
    pub fn start(&self) -> Vec<f64> {
        let mut x = self.spec.image.data.clone();
        x.resize(3 * self.pixels(), 0.0);
        x
    }

    /// Primal part `u` of a state.
    pub fn primal<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.pixels()]
    }

    /// `½‖u - f‖² + λ‖∇u‖₁`.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let img = &self.spec.image;
        let g = grad2d(u, img.rows, img.cols)?;
        let fit: f64 = u.iter().zip(&img.data).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        let tv: f64 = g.iter().map(|v| v.abs()).sum();
        Ok(fit + self.spec.lambda * tv)
    }
}

impl Operator for RofOperator {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let RofSpec { image, lambda, tau, sigma, theta } = &self.spec;
        let (rows, cols, n) = (image.rows, image.cols, image.len());
        let (u, p) = x.split_at(n);
        let (out_u, out_p) = out.split_at_mut(n);
        let mut d = vec![0.0; n];
        div_into(p, rows, cols, &mut d);
        let mut ubar = vec![0.0; n];
        for k in 0..n {
            let up = (u[k] + tau * d[k] + tau * image.data[k]) / (1.0 + tau);
            out_u[k] = 2.0 * up - u[k];
            ubar[k] = up + theta * (up - u[k]);
        }
        let mut g = vec![0.0; 2 * n];
        grad_into(&ubar, rows, cols, &mut g);
        for k in 0..2 * n {
            let q = (p[k] + sigma * g[k]).clamp(-lambda, *lambda);
            out_p[k] = 2.0 * q - p[k];
        }
    }
    fn label(&self) -> &str {
        "rof"
    }
}

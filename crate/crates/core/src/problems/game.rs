//! Zero-sum matrix games `max_a min_b ⟨a, Ab⟩` over `Δ_m × Δ_n` and the Euclidean
//! Mirror-Prox operator `F_γ = 2Π ∘ (I - γ G ∘ Π ∘ (I - γG)) - I`. KM with weight 1/2
//! on `F_γ` is the extragradient method.

use std::sync::OnceLock;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::operators::Operator;
use crate::projections::{project_simplex_euclidean, Domain};
use crate::rng::SeededRng;

pub const SAMPLER_NAME: &str = "A = c * U V^T, U and V with i.i.d. standard normal entries";

/// Low-rank payoff matrix `UVᵀ` with standard-normal factors.
pub fn sample_game(m: usize, n: usize, r: usize, seed: u64) -> Result<Matrix> {
    sample_game_scaled(m, n, r, seed, 1.0)
}

/// `c · UVᵀ`.
pub fn sample_game_scaled(m: usize, n: usize, r: usize, seed: u64, scale: f64) -> Result<Matrix> {
    if m == 0 || n == 0 || r == 0 || r > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank {r} must lie in 1..=min({m}, {n})")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("factor scale must be positive, got {scale}")));
    }
    let mut rng = SeededRng::new(seed);
    let u: Vec<f64> = rng.normal_vec(m * r);
    let v: Vec<f64> = rng.normal_vec(n * r);
    Ok(Matrix::from_fn(m, n, |i, j| scale * (0..r).map(|k| u[i * r + k] * v[j * r + k]).sum::<f64>()))
}

fn on_simplex(x: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let neg = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let sum: f64 = x.iter().sum();
    let violation = neg.max((sum - 1.0).abs());
    if !violation.is_finite() {
        return Err(Error::NonFinite(what));
    }
    if violation > 1e-8 {
        return Err(Error::OutsideDomain { violation });
    }
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    Ok(clipped.into_iter().map(|v| v / s).collect())
}

/// `δ(a, b) = max_i (Ab)_i - min_j (Aᵀa)_j`; zero exactly at saddle points.
pub fn duality_gap(a_mat: &Matrix, a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a_mat.rows(), a.len())?;
    check_dim(a_mat.cols(), b.len())?;
    let a = on_simplex(a, "row strategy")?;
    let b = on_simplex(b, "column strategy")?;
    let ab = a_mat.mul_vec(&b);
    let ata = a_mat.tr_mul_vec(&a);
    let hi = ab.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ata.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// Sign `s` in `G(a, b) = s (Ab, -Aᵀa)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `s = +1`.
    Displayed,
    /// `s = -1`: `a` ascends on `⟨a, Ab⟩`, `b` descends.
    Reversed,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Displayed => 1.0,
            Orientation::Reversed => -1.0,
        }
    }

    /// Picks the orientation under which 200 extragradient steps best solve a small
    /// asymmetric game with a unique pure saddle. Computed once.
    pub fn select() -> Orientation {
        static CHOICE: OnceLock<Orientation> = OnceLock::new();
        *CHOICE.get_or_init(|| {
            let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, -1.0]]).expect("2x2 probe game");
            let gap = |o: Orientation| {
                let f = MirrorProx::new(a.clone(), 0.1, o).expect("probe operator");
                let mut x = vec![0.5; 4];
                let mut fx = vec![0.0; 4];
                for _ in 0..200 {
                    f.apply_into(&x, &mut fx);
                    for (xi, fi) in x.iter_mut().zip(&fx) {
                        *xi = 0.5 * (*xi + fi);
                    }
                }
                duality_gap(&a, &x[..2], &x[2..]).unwrap_or(f64::INFINITY)
            };
            if gap(Orientation::Reversed) <= gap(Orientation::Displayed) {
                Orientation::Reversed
            } else {
                Orientation::Displayed
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct GameSpec {
    pub matrix: Matrix,
    pub rank: usize,
    pub gamma: f64,
    pub orientation: Orientation,
    pub factor_scale: f64,
}

impl GameSpec {
    pub fn sample(m: usize, n: usize, r: usize, seed: u64, factor_scale: f64, gamma: f64) -> Result<Self> {
        Ok(GameSpec {
            matrix: sample_game_scaled(m, n, r, seed, factor_scale)?,
            rank: r,
            gamma,
            orientation: Orientation::select(),
            factor_scale,
        })
    }

    pub fn build(&self) -> Result<MirrorProx> {
        MirrorProx::new(self.matrix.clone(), self.gamma, self.orientation)
    }
}

#[derive(Debug, Clone)]
pub struct MirrorProx {
    matrix: Matrix,
    gamma: f64,
    orientation: Orientation,
    domain: Domain,
}

pub fn build_mirror_prox(matrix: Matrix, gamma: f64, orientation: Orientation) -> Result<MirrorProx> {
    MirrorProx::new(matrix, gamma, orientation)
}

impl MirrorProx {
    pub fn new(matrix: Matrix, gamma: f64, orientation: Orientation) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("Mirror-Prox step must be positive, got {gamma}")));
        }
        let domain = Domain::Product(vec![Domain::Simplex(matrix.rows()), Domain::Simplex(matrix.cols())]);
        Ok(MirrorProx { matrix, gamma, orientation, domain })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Uniform strategies for both players.
    pub fn uniform(&self) -> Vec<f64> {
        let (m, n) = (self.matrix.rows(), self.matrix.cols());
        let mut x = vec![1.0 / m as f64; m];
        x.extend(std::iter::repeat_n(1.0 / n as f64, n));
        x
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.matrix.rows())
    }

    /// Duality gap of a joint state.
    pub fn gap(&self, x: &[f64]) -> Result<f64> {
        let (a, b) = self.split(x);
        duality_gap(&self.matrix, a, b)
    }

    /// `G(x) = s (Ab, -Aᵀa)`.
    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = self.split(x);
        let s = self.orientation.sign();
        let mut g = self.matrix.mul_vec(b);
        g.extend(self.matrix.tr_mul_vec(a).into_iter().map(|v| -v));
        g.iter_mut().for_each(|v| *v *= s);
        g
    }

    /// `Π(x - γG(x))`.
    pub fn descent(&self, x: &[f64], at: &[f64]) -> Vec<f64> {
        let g = self.field(at);
        let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - self.gamma * gi).collect();
        self.project(&y)
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let (ya, yb) = self.split(y);
        let mut out = project_simplex_euclidean(ya);
        out.extend(project_simplex_euclidean(yb));
        out
    }
}

impl Operator for MirrorProx {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let half = self.descent(x, x);
        let next = self.descent(x, &half);
        for ((o, n), xi) in out.iter_mut().zip(&next).zip(x) {
            *o = 2.0 * n - xi;
        }
    }
    /// Two evaluations of `G`.
    fn cost(&self) -> u64 {
        2
    }
    fn label(&self) -> &str {
        "mirror_prox"
    }
}

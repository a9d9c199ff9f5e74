//! Two almost-disconnected clusters of `n` states each. Within a cluster the chain is a
//! lazy random walk on a path (interior states move to themselves or a neighbour with
//! probability 1/3 each, boundary states to themselves or their neighbour with 1/2);
//! with probability `p` it jumps to a uniformly chosen state of the other cluster.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm1, Matrix};
use crate::operators::Operator;
use crate::projections::Domain;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovChain {
    pub n: usize,
    pub p: f64,
}

impl MarkovChain {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("cluster size must be at least 2, got {n}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("jump probability must lie in (0, 1), got {p}")));
        }
        Ok(MarkovChain { n, p })
    }

    /// Number of states `2n`.
    pub fn states(&self) -> usize {
        2 * self.n
    }

    /// Within-cluster neighbours of state `i` (including itself) and their weight.
    fn local(&self, i: usize) -> (usize, usize, f64) {
        let lo = if i < self.n { 0 } else { self.n };
        let hi = lo + self.n - 1;
        if i == lo {
            (i, i + 1, 0.5)
        } else if i == hi {
            (i - 1, i, 0.5)
        } else {
            (i - 1, i + 1, 1.0 / 3.0)
        }
    }

    /// Entry `P[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (a, b, w) = self.local(i);
        let mut v = if (a..=b).contains(&j) { (1.0 - self.p) * w } else { 0.0 };
        if (i < self.n) != (j < self.n) {
            v += self.p / self.n as f64;
        }
        v
    }

    /// Dense `P`; only sensible for small chains.
    pub fn transition_matrix(&self) -> Matrix {
        let s = self.states();
        Matrix::from_fn(s, s, |i, j| self.entry(i, j))
    }

    /// `πP` for a row vector `π`, in `O(n)`.
    pub fn step_into(&self, pi: &[f64], out: &mut [f64]) {
        let n = self.n;
        let keep = 1.0 - self.p;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &m) in pi.iter().enumerate() {
            let (a, b, w) = self.local(i);
            for o in &mut out[a..=b] {
                *o += keep * w * m;
            }
        }
        let mass_a: f64 = pi[..n].iter().sum();
        let mass_b: f64 = pi[n..].iter().sum();
        let (to_b, to_a) = (self.p * mass_a / n as f64, self.p * mass_b / n as f64);
        for o in &mut out[..n] {
            *o += to_a;
        }
        for o in &mut out[n..] {
            *o += to_b;
        }
    }

    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pi.len()];
        self.step_into(pi, &mut out);
        out
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.states() as f64; self.states()]
    }
}

/// `F(π) = πP` on the simplex of dimension `2n`.
#[derive(Debug, Clone)]
pub struct MarkovOperator {
    chain: MarkovChain,
    domain: Domain,
}

impl MarkovOperator {
    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// `‖πP - π‖₁`.
    pub fn l1_residual(&self, pi: &[f64]) -> Result<f64> {
        check_dim(self.chain.states(), pi.len())?;
        let next = self.chain.step(pi);
        Ok(norm1(&next.iter().zip(pi).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }
}

pub fn build_markov(n: usize, p: f64) -> Result<MarkovOperator> {
    let chain = MarkovChain::new(n, p)?;
    Ok(MarkovOperator { chain, domain: Domain::Simplex(chain.states()) })
}

impl Operator for MarkovOperator {
    fn dim(&self) -> usize {
        self.chain.states()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.chain.step_into(x, out)
    }
    fn label(&self) -> &str {
        "markov"
    }
}

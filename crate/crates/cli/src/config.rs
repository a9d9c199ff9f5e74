//! Experiment configuration: a JSON document whose fields may be overridden from the
//! command line, resolved into a fully concrete [`RunPlan`].

use crate::bounds::SuiteConfig;
use crate::error::{CliError, Result};
use adafix::fixedpoint::Solver;
use adafix::regret::Schedule;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Toy,
    Markov,
    Denoise,
    Game,
    BoundsSuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Toy => "toy",
            Experiment::Markov => "markov",
            Experiment::Denoise => "denoise",
            Experiment::Game => "game",
            Experiment::BoundsSuite => "bounds-suite",
        }
    }

    fn stochastic(self) -> bool {
        matches!(self, Experiment::Denoise | Experiment::Game)
    }

    fn default_iterations(self) -> usize {
        match self {
            Experiment::Toy => 1000,
            Experiment::Markov | Experiment::Game => 5000,
            Experiment::Denoise => 2000,
            Experiment::BoundsSuite => 10_000,
        }
    }

    /// Step size of the adaptive solvers when none is given. Tuned at desk scale.
    pub fn default_eta(self) -> f64 {
        match self {
            Experiment::Toy | Experiment::BoundsSuite => 1.0,
            Experiment::Markov | Experiment::Game => 0.01,
            Experiment::Denoise => 10.0,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Km,
    ProjectedKm,
    Power,
    Ftrl,
    AdagradNorm,
    AdagradDiagonal,
    AdagradFull,
    RmspropNorm,
    AdamNorm,
    RmspropDiagonal,
    AdamDiagonal,
}

impl SolverKind {
    pub const ALL: [SolverKind; 11] = [
        SolverKind::Km,
        SolverKind::ProjectedKm,
        SolverKind::Power,
        SolverKind::Ftrl,
        SolverKind::AdagradNorm,
        SolverKind::AdagradDiagonal,
        SolverKind::AdagradFull,
        SolverKind::RmspropNorm,
        SolverKind::AdamNorm,
        SolverKind::RmspropDiagonal,
        SolverKind::AdamDiagonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Km => "km",
            SolverKind::ProjectedKm => "projected_km",
            SolverKind::Power => "power",
            SolverKind::Ftrl => "ftrl",
            SolverKind::AdagradNorm => "adagrad_norm",
            SolverKind::AdagradDiagonal => "adagrad_diagonal",
            SolverKind::AdagradFull => "adagrad_full",
            SolverKind::RmspropNorm => "rmsprop_norm",
            SolverKind::AdamNorm => "adam_norm",
            SolverKind::RmspropDiagonal => "rmsprop_diagonal",
            SolverKind::AdamDiagonal => "adam_diagonal",
        }
    }

    fn uses_gamma(self) -> bool {
        matches!(self, SolverKind::Km | SolverKind::ProjectedKm)
    }

    fn uses_eta(self) -> bool {
        !matches!(self, SolverKind::Km | SolverKind::ProjectedKm | SolverKind::Power)
    }

    fn uses_epsilon(self) -> bool {
        matches!(
            self,
            SolverKind::AdagradDiagonal | SolverKind::AdagradFull | SolverKind::RmspropDiagonal | SolverKind::AdamDiagonal
        )
    }

    fn uses_beta(self) -> bool {
        matches!(self, SolverKind::RmspropNorm | SolverKind::AdamNorm | SolverKind::RmspropDiagonal | SolverKind::AdamDiagonal)
    }

    fn uses_alpha(self) -> bool {
        matches!(self, SolverKind::AdamNorm | SolverKind::AdamDiagonal)
    }
}

impl FromStr for SolverKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        SolverKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let known: Vec<_> = SolverKind::ALL.iter().map(|k| k.name()).collect();
            CliError::Config(format!("unknown solver '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// One solver entry as written in the config; unset parameters take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// KM weight `γ_t` (constant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl SolverSpec {
    pub fn new(kind: SolverKind) -> Self {
        SolverSpec { kind, eta: None, epsilon: None, beta: None, alpha: None, gamma: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySection {
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovSection {
    pub n: Option<usize>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseSection {
    /// PGM image; a synthetic checkerboard with a ramp is used when absent.
    pub image: Option<PathBuf>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub noise_std: Option<f64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub rank: Option<usize>,
    /// Mirror-Prox step.
    pub gamma: Option<f64>,
    pub factor_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub solvers: Vec<SolverSpec>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub paper_scale: bool,
    /// Adds an `elapsed_seconds` column; traces are then no longer reproducible.
    pub record_timing: bool,
    pub toy: ToySection,
    pub markov: MarkovSection,
    pub denoise: DenoiseSection,
    pub game: GameSection,
    pub bounds: Option<SuiteConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }
}

/// Fully resolved solver parameters. Only the parameters the solver uses are set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverParams {
    pub kind: SolverKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn check_positive(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{what} must be positive, got {v}")))
    }
}

fn check_unit(what: &str, v: f64, open_left: bool) -> Result<f64> {
    let ok = if open_left { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{what} out of range: {v}")))
    }
}

impl SolverParams {
    fn resolve(spec: &SolverSpec, experiment: Experiment) -> Result<Self> {
        let k = spec.kind;
        let pick = |used: bool, v: Option<f64>, default: f64| used.then(|| v.unwrap_or(default));
        let p = SolverParams {
            kind: k,
            gamma: pick(k.uses_gamma(), spec.gamma, 0.5),
            eta: pick(k.uses_eta(), spec.eta, experiment.default_eta()),
            epsilon: pick(k.uses_epsilon(), spec.epsilon, 1e-8),
            beta: pick(k.uses_beta(), spec.beta, 0.999),
            alpha: pick(k.uses_alpha(), spec.alpha, 0.9),
        };
        if let Some(g) = p.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(CliError::Config(format!("{}: gamma must lie in (0, 1), got {g}", k.name())));
            }
        }
        if let Some(v) = p.eta {
            check_positive("eta", v)?;
        }
        if let Some(v) = p.epsilon {
            check_positive("epsilon", v)?;
        }
        if let Some(v) = p.beta {
            check_unit("beta", v, true)?;
        }
        if let Some(v) = p.alpha {
            check_unit("alpha", v, false)?;
        }
        Ok(p)
    }

    pub fn solver(&self) -> Solver {
        let eta = self.eta.unwrap_or(1.0);
        let epsilon = self.epsilon.unwrap_or(1e-8);
        let beta = self.beta.unwrap_or(0.999);
        let alpha = self.alpha.unwrap_or(0.9);
        match self.kind {
            SolverKind::Km => Solver::Km,
            SolverKind::ProjectedKm => Solver::ProjectedKm,
            SolverKind::Power => Solver::Power,
            SolverKind::Ftrl => Solver::Ftrl { eta: Schedule::Constant(eta) },
            SolverKind::AdagradNorm => Solver::AdaGradNorm { eta },
            SolverKind::AdagradDiagonal => Solver::AdaGradDiagonal { eta, epsilon },
            SolverKind::AdagradFull => Solver::AdaGradFull { eta, epsilon },
            SolverKind::RmspropNorm => Solver::RmspropNorm { eta, beta },
            SolverKind::AdamNorm => Solver::AdamNorm { eta, alpha, beta },
            SolverKind::RmspropDiagonal => Solver::RmspropDiagonal { eta, beta, epsilon },
            SolverKind::AdamDiagonal => Solver::AdamDiagonal { eta, alpha, beta, epsilon },
        }
    }

    pub fn gamma_schedule(&self) -> Schedule {
        Schedule::Constant(self.gamma.unwrap_or(0.5))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Problem {
    Toy {
        alpha: f64,
        epsilon: f64,
        start: Vec<f64>,
    },
    Markov {
        n: usize,
        p: f64,
    },
    Denoise {
        #[serde(skip_serializing_if = "Option::is_none")]
        image: Option<PathBuf>,
        rows: usize,
        cols: usize,
        noise_std: f64,
        lambda: f64,
        tau: f64,
        sigma: f64,
        theta: f64,
    },
    Game {
        m: usize,
        n: usize,
        rank: usize,
        gamma: f64,
        factor_scale: f64,
    },
    BoundsSuite(SuiteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPlan {
    pub experiment: Experiment,
    pub solvers: Vec<SolverParams>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub paper_scale: bool,
    pub record_timing: bool,
    pub problem: Problem,
}

fn toy_problem(s: &ToySection) -> Result<Problem> {
    let alpha = s.alpha.unwrap_or(4.0);
    let epsilon = s.epsilon.unwrap_or(0.5);
    if !(alpha > 0.0 && epsilon > 0.0 && epsilon < 2.0) {
        return Err(CliError::Config(format!("toy needs alpha > 0 and epsilon in (0, 2), got {alpha}, {epsilon}")));
    }
    let start = s.start.clone().unwrap_or_else(|| vec![1.0, 1.0]);
    if start.len() != 2 {
        return Err(CliError::Config("toy start must have two coordinates".into()));
    }
    Ok(Problem::Toy { alpha, epsilon, start })
}

fn markov_problem(s: &MarkovSection, large: bool) -> Result<Problem> {
    let (n, p) = if large { (10_000, 1e-8) } else { (200, 1e-6) };
    let (n, p) = (s.n.unwrap_or(n), s.p.unwrap_or(p));
    if n < 2 || !(p > 0.0 && p < 1.0) {
        return Err(CliError::Config(format!("markov needs n >= 2 and p in (0, 1), got {n}, {p}")));
    }
    Ok(Problem::Markov { n, p })
}

fn denoise_problem(s: &DenoiseSection, large: bool) -> Result<Problem> {
    let side = if large { 512 } else { 64 };
    let p = Problem::Denoise {
        image: s.image.clone(),
        rows: s.rows.unwrap_or(side),
        cols: s.cols.unwrap_or(side),
        noise_std: s.noise_std.unwrap_or(0.1),
        lambda: check_positive("lambda", s.lambda.unwrap_or(0.1))?,
        tau: check_positive("tau", s.tau.unwrap_or(0.2))?,
        sigma: check_positive("sigma", s.sigma.unwrap_or(0.2))?,
        theta: s.theta.unwrap_or(1.0),
    };
    if let Problem::Denoise { rows, cols, noise_std, .. } = p {
        if rows < 2 || cols < 2 || noise_std.is_nan() || noise_std < 0.0 {
            return Err(CliError::Config(format!("denoise needs a 2x2 image or larger and noise >= 0, got {rows}x{cols}, {noise_std}")));
        }
    }
    Ok(p)
}

fn game_problem(s: &GameSection, large: bool) -> Result<Problem> {
    let (m, n, r) = if large { (600, 400, 30) } else { (60, 40, 5) };
    let (m, n, rank) = (s.m.unwrap_or(m), s.n.unwrap_or(n), s.rank.unwrap_or(r));
    if m == 0 || n == 0 || rank == 0 || rank > m.min(n) {
        return Err(CliError::Config(format!("game needs 1 <= rank <= min(m, n), got {m}x{n} rank {rank}")));
    }
    let gamma = check_positive("Mirror-Prox gamma", s.gamma.unwrap_or(1e-3))?;
    let factor_scale = check_positive("factor_scale", s.factor_scale.unwrap_or(if large { 1.0 } else { 10.0 }))?;
    Ok(Problem::Game { m, n, rank, gamma, factor_scale })
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<RunPlan> {
        let experiment = self.experiment.ok_or_else(|| CliError::Config("no experiment selected".into()))?;
        if experiment.stochastic() && self.seed.is_none() {
            return Err(CliError::Config(format!("the {experiment} experiment needs a seed")));
        }
        let problem = match experiment {
            Experiment::Toy => toy_problem(&self.toy)?,
            Experiment::Markov => markov_problem(&self.markov, self.paper_scale)?,
            Experiment::Denoise => denoise_problem(&self.denoise, self.paper_scale)?,
            Experiment::Game => game_problem(&self.game, self.paper_scale)?,
            Experiment::BoundsSuite => {
                let mut suite = self.bounds.clone().unwrap_or_default();
                if let Some(t) = self.iterations {
                    suite.iterations = t;
                }
                suite.validate()?;
                Problem::BoundsSuite(suite)
            }
        };
        if experiment != Experiment::BoundsSuite && self.solvers.is_empty() {
            return Err(CliError::Config("the solver list is empty".into()));
        }
        let solvers = self.solvers.iter().map(|s| SolverParams::resolve(s, experiment)).collect::<Result<Vec<_>>>()?;
        let iterations = self.iterations.unwrap_or(experiment.default_iterations());
        if iterations == 0 {
            return Err(CliError::Config("iterations must be positive".into()));
        }
        Ok(RunPlan {
            experiment,
            solvers,
            iterations,
            seed: self.seed,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            paper_scale: self.paper_scale,
            record_timing: self.record_timing,
            problem,
        })
    }
}

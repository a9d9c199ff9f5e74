//! Runs a resolved experiment: one trace file per solver, a plot and a manifest.

use crate::bounds::{run_suite, SuiteConfig, SuiteReport};
use crate::config::{Experiment, Problem, RunPlan, SolverKind, SolverParams};
use crate::error::{CliError, Result};
use crate::output::{sha256_hex, write_json, write_trace, TraceColumns};
use crate::plot::{plot_files, PlotOptions};
use adafix::fixedpoint::{IterationTrace, Observer, SolverConfig};
use adafix::operators::Operator;
use adafix::par::{self, Execution};
use adafix::problems::game::{GameSpec, SAMPLER_NAME};
use adafix::problems::markov::build_markov;
use adafix::problems::pgm::Image;
use adafix::problems::rof::{build_rof, RofSpec};
use adafix::problems::toy::toy_operator;
use adafix::rng::GENERATOR_NAME;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const TRACE_NAME_WIDTH: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunEntry {
    pub index: usize,
    pub solver: SolverParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<String>,
    pub iterations: usize,
    pub evaluations: u64,
    pub initial_l2: f64,
    pub final_l2: f64,
    pub min_l2: f64,
    /// The divergence guard tripped, an output was non-finite, or the final residual
    /// exceeds the initial one.
    pub diverged: bool,
    pub metrics: BTreeMap<String, f64>,
}

impl RunEntry {
    fn failed(index: usize, solver: SolverParams, error: String) -> Self {
        RunEntry {
            index,
            solver,
            csv: None,
            error: Some(error),
            stop: None,
            iterations: 0,
            evaluations: 0,
            initial_l2: f64::NAN,
            final_l2: f64::NAN,
            min_l2: f64::NAN,
            diverged: false,
            metrics: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub checks: usize,
    pub violations: usize,
    pub errors: Vec<String>,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub software: Software,
    pub config_sha256: String,
    pub config: RunPlan,
    pub rng: &'static str,
    pub execution: &'static str,
    pub design: BTreeMap<&'static str, String>,
    pub runs: Vec<RunEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<SuiteSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub traces: Vec<PathBuf>,
    pub plot: Option<PathBuf>,
    pub suite: Option<SuiteReport>,
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        self.manifest.runs.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn run(&self, kind: SolverKind) -> Option<&RunEntry> {
        self.manifest.runs.iter().find(|r| r.solver.kind == kind)
    }
}

pub fn execution() -> Execution {
    Execution::default()
}

/// Hash of the resolved plan with the output directory left out, so that the same
/// experiment written to two places has the same hash.
pub fn config_hash(plan: &RunPlan) -> String {
    let mut p = plan.clone();
    p.out = PathBuf::new();
    sha256_hex(serde_json::to_string(&p).expect("plans serialize").as_bytes())
}

fn design_notes(experiment: Experiment) -> BTreeMap<&'static str, String> {
    let mut d = BTreeMap::new();
    d.insert("csv_numbers", "scientific notation, 17 significant digits".to_string());
    d.insert(
        "step_sizes",
        "adaptive step sizes not given in the config are desk-scale values tuned for this implementation".to_string(),
    );
    match experiment {
        Experiment::Markov => {
            d.insert("markov_operator", "pi -> pi P on row vectors over the simplex, uniform start".to_string());
        }
        Experiment::Denoise => {
            d.insert("convergence_metric", "l2 fixed-point residual of the primal-dual operator; ROF energy reported alongside".to_string());
            d.insert("noise", "additive Gaussian from the run seed, clamped to +-1e6, not clipped to [0, 1]".to_string());
            d.insert("tv_discretization", "forward differences, Neumann boundary, divergence = -adjoint".to_string());
        }
        Experiment::Game => {
            let o = adafix::problems::game::Orientation::select();
            d.insert("game_orientation", format!("{o:?} (sign {}), chosen by a 2x2 extragradient probe", o.sign()));
            d.insert("game_sampler", SAMPLER_NAME.to_string());
            d.insert("game_start", "uniform strategies".to_string());
        }
        _ => {}
    }
    d
}

struct Setup<'a, O: ?Sized> {
    op: &'a O,
    x1: Vec<f64>,
    x_star: Option<Vec<f64>>,
    observer: Option<Observer>,
    columns: TraceColumns,
}

type Extras<'a> = dyn Fn(&IterationTrace) -> BTreeMap<String, f64> + Sync + 'a;

fn solver_config(plan: &RunPlan, p: &SolverParams, x_star: &Option<Vec<f64>>, observer: &Option<Observer>) -> SolverConfig {
    let mut cfg = SolverConfig::new(p.gamma_schedule(), plan.iterations);
    if !matches!(p.kind, SolverKind::Km | SolverKind::ProjectedKm) {
        cfg = SolverConfig::adaptive(plan.iterations);
    }
    if let Some(xs) = x_star {
        cfg = cfg.with_x_star(xs.clone());
    }
    if let Some(o) = observer {
        cfg = cfg.with_observer(o.clone());
    }
    cfg
}

fn trace_file(index: usize, kind: SolverKind) -> String {
    format!("{:0w$}_{}.csv", index + 1, kind.name(), w = TRACE_NAME_WIDTH)
}

fn run_solvers<O: Operator + ?Sized>(
    plan: &RunPlan,
    setup: &Setup<'_, O>,
    extras: &Extras<'_>,
) -> Result<(Vec<RunEntry>, Vec<PathBuf>)> {
    let results = par::map(execution(), &plan.solvers, |p| {
        let cfg = solver_config(plan, p, &setup.x_star, &setup.observer);
        p.solver().solve(setup.op, &setup.x1, &cfg)
    });
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for (index, (params, res)) in plan.solvers.iter().zip(results).enumerate() {
        let tr = match res {
            Ok(tr) if !tr.is_empty() => tr,
            Ok(_) => {
                entries.push(RunEntry::failed(index, params.clone(), "empty trace".into()));
                continue;
            }
            Err(e) => {
                entries.push(RunEntry::failed(index, params.clone(), e.to_string()));
                continue;
            }
        };
        let name = trace_file(index, params.kind);
        let path = plan.out.join(&name);
        write_trace(&path, &tr, setup.columns)?;
        files.push(path);
        entries.push(RunEntry {
            index,
            solver: params.clone(),
            csv: Some(name),
            error: None,
            stop: Some(tr.stop.to_string()),
            iterations: tr.len(),
            evaluations: tr.last().evaluations,
            initial_l2: tr.initial_l2(),
            final_l2: tr.final_l2(),
            min_l2: tr.min_l2(),
            diverged: tr.diverged() || tr.final_l2() > tr.initial_l2(),
            metrics: extras(&tr),
        });
    }
    Ok((entries, files))
}

fn columns(plan: &RunPlan, gap: bool, distance: bool) -> TraceColumns {
    TraceColumns { duality_gap: gap, distance_to_solution: distance, elapsed_seconds: plan.record_timing }
}

fn metric(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn solve_problem(plan: &RunPlan) -> Result<(Vec<RunEntry>, Vec<PathBuf>)> {
    match &plan.problem {
        Problem::Toy { alpha, epsilon, start } => {
            let f = toy_operator(*alpha, *epsilon)?;
            let setup = Setup { op: &f, x1: start.clone(), x_star: Some(vec![0.0; 2]), observer: None, columns: columns(plan, false, true) };
            run_solvers(plan, &setup, &|tr| metric(&[("final_distance", tr.last().dist_l2.unwrap_or(f64::NAN))]))
        }
        Problem::Markov { n, p } => {
            let f = build_markov(*n, *p)?;
            let setup = Setup { op: &f, x1: f.chain().uniform(), x_star: None, observer: None, columns: columns(plan, false, false) };
            run_solvers(plan, &setup, &|tr| {
                metric(&[("final_l1", tr.last().l1), ("min_l1", min_of(tr.records.iter().map(|r| r.l1)))])
            })
        }
        Problem::Denoise { image, rows, cols, noise_std, lambda, tau, sigma, theta } => {
            let clean = match image {
                Some(path) => Image::read_pgm(path)?,
                None => Image::synthetic(*rows, *cols),
            };
            let noisy = clean.with_noise(*noise_std, plan.seed.unwrap_or(0));
            let f = build_rof(RofSpec::new(noisy, *lambda, *tau, *sigma, *theta))?;
            let x1 = f.start();
            let e0 = f.energy(f.primal(&x1))?;
            let setup = Setup { op: &f, x1, x_star: None, observer: None, columns: columns(plan, false, false) };
            run_solvers(plan, &setup, &|tr| {
                let e = f.energy(f.primal(&tr.final_iterate)).unwrap_or(f64::NAN);
                metric(&[("initial_energy", e0), ("final_energy", e)])
            })
        }
        Problem::Game { m, n, rank, gamma, factor_scale } => {
            let spec = GameSpec::sample(*m, *n, *rank, plan.seed.unwrap_or(0), *factor_scale, *gamma)?;
            let f = spec.build()?;
            let g = f.clone();
            let observer: Observer = Arc::new(move |x: &[f64]| g.gap(x).unwrap_or(f64::NAN));
            let setup = Setup { op: &f, x1: f.uniform(), x_star: None, observer: Some(observer), columns: columns(plan, true, false) };
            run_solvers(plan, &setup, &|tr| {
                let gap = |t: usize| tr.at(t).and_then(|r| r.observed).unwrap_or(f64::NAN);
                metric(&[
                    ("initial_gap", gap(1)),
                    ("gap_at_10", gap(10)),
                    ("final_gap", tr.last().observed.unwrap_or(f64::NAN)),
                    ("min_gap", min_of(tr.records.iter().filter_map(|r| r.observed))),
                ])
            })
        }
        Problem::BoundsSuite(_) => Ok((Vec::new(), Vec::new())),
    }
}

fn plot_column(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::Markov => "residual_l1",
        Experiment::Game => "duality_gap",
        _ => "residual_l2",
    }
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn run_bounds(plan: &RunPlan, suite: &SuiteConfig) -> Result<(SuiteReport, SuiteSummary)> {
    let report = run_suite(suite, execution());
    let path = plan.out.join("bounds.csv");
    report.write_csv(&path)?;
    let summary = SuiteSummary {
        checks: report.rows.len(),
        violations: report.violations(),
        errors: report.errors.clone(),
        csv: "bounds.csv".into(),
    };
    Ok((report, summary))
}

/// Runs the plan and writes everything under `plan.out`. Solver failures are recorded in
/// the manifest; only I/O and construction errors abort.
pub fn run(plan: &RunPlan) -> Result<RunOutcome> {
    create_dir(&plan.out)?;
    let (runs, traces) = solve_problem(plan)?;
    let (suite, bounds) = match &plan.problem {
        Problem::BoundsSuite(s) => {
            let (r, summary) = run_bounds(plan, s)?;
            (Some(r), Some(summary))
        }
        _ => (None, None),
    };
    let plot = if traces.is_empty() {
        None
    } else {
        let path = plan.out.join("plot.svg");
        let opts = PlotOptions { title: Some(plan.experiment.name().to_string()), ..Default::default() };
        plot_files(&traces, Some(plot_column(plan.experiment)), &path, &opts)?;
        Some(path)
    };
    let manifest = Manifest {
        software: Software { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        config_sha256: config_hash(plan),
        config: plan.clone(),
        rng: GENERATOR_NAME,
        execution: if execution().is_parallel() { "parallel" } else { "sequential" },
        design: design_notes(plan.experiment),
        runs,
        bounds,
    };
    write_json(&plan.out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { manifest, traces, plot, suite })
}

use adafix_cli::bounds::{run_suite, SuiteConfig};
use adafix_cli::config::{Experiment, ExperimentConfig, SolverKind, SolverSpec};
use adafix_cli::error::{CliError, Result};
use adafix_cli::plot::{plot_files, PlotOptions};
use adafix_cli::run::{execution, run};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "adafix", version, about = "Fixed-point experiments driven by regret minimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver sweep and write traces, a plot and a manifest.
    Run(RunArgs),
    /// Check the convergence guarantees on a seeded suite of operators.
    CheckBounds(BoundsArgs),
    /// Plot trace files on a log scale.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// Solver to run (repeatable); replaces the configured list.
    #[arg(long = "solver", value_parser = parse_solver)]
    solvers: Vec<SolverKind>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// KM weight.
    #[arg(long)]
    gamma: Option<f64>,
    /// Mirror-Prox step of the game operator.
    #[arg(long)]
    mp_gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// PGM image for the denoising experiment.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    paper_scale: bool,
    /// Add wall-clock times to the traces.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// JSON experiment configuration whose `bounds` section describes the suite.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds as a range `a..b` or a comma-separated list.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    iters: Option<usize>,
    /// Hand the AdaGrad-Norm guarantees L/10 instead of L.
    #[arg(long)]
    negative_control: bool,
    /// Write the report as `bounds.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Column to plot; defaults to the duality gap when present, else the l2 residual.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

#[derive(Debug, Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Seeds(Vec::new()));
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|e| format!("{e}"))).collect::<std::result::Result<_, _>>().map(Seeds)
}

fn load(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    path.as_deref().map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn apply(args: &RunArgs, cfg: &mut ExperimentConfig) {
    if args.experiment.is_some() {
        cfg.experiment = args.experiment;
    }
    if !args.solvers.is_empty() {
        cfg.solvers = args.solvers.iter().map(|&k| SolverSpec::new(k)).collect();
    }
    for s in &mut cfg.solvers {
        s.eta = args.eta.or(s.eta);
        s.epsilon = args.epsilon.or(s.epsilon);
        s.beta = args.beta.or(s.beta);
        s.alpha = args.alpha.or(s.alpha);
        s.gamma = args.gamma.or(s.gamma);
    }
    cfg.iterations = args.iters.or(cfg.iterations);
    cfg.seed = args.seed.or(cfg.seed);
    cfg.out = args.out.clone().or(cfg.out.take());
    cfg.paper_scale |= args.paper_scale;
    cfg.record_timing |= args.record_timing;
    cfg.game.gamma = args.mp_gamma.or(cfg.game.gamma);
    let d = &mut cfg.denoise;
    d.tau = args.tau.or(d.tau);
    d.sigma = args.sigma.or(d.sigma);
    d.lambda = args.lambda.or(d.lambda);
    d.theta = args.theta.or(d.theta);
    d.image = args.image.clone().or(d.image.take());
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = load(&args.config)?;
    apply(&args, &mut cfg);
    let plan = cfg.resolve()?;
    let outcome = run(&plan)?;
    for r in &outcome.manifest.runs {
        match &r.error {
            Some(e) => println!("{:<18} failed: {e}", r.solver.kind.name()),
            None => println!(
                "{:<18} {:<10} T={:<6} residual {:.3e} -> {:.3e} (min {:.3e}){}",
                r.solver.kind.name(),
                r.stop.as_deref().unwrap_or(""),
                r.iterations,
                r.initial_l2,
                r.final_l2,
                r.min_l2,
                if r.diverged { "  DIVERGED" } else { "" }
            ),
        }
    }
    println!("wrote {}", plan.out.display());
    if let Some(rep) = &outcome.suite {
        print!("{}", rep.table());
        if !rep.errors.is_empty() {
            return Ok(ExitCode::from(2));
        }
        if rep.violations() > 0 {
            return Ok(ExitCode::from(EXIT_VIOLATION));
        }
    }
    Ok(if outcome.failures() > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_check_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let cfg = load(&args.config)?;
    let mut suite = cfg.bounds.unwrap_or_default();
    if let Some(Seeds(s)) = args.seeds {
        suite.seeds = s;
    }
    if let Some(t) = args.iters {
        suite.iterations = t;
    }
    if args.negative_control {
        suite.l_factor = SuiteConfig::negative_control().l_factor;
    }
    suite.validate()?;
    if suite.is_empty() {
        eprintln!("warning: the bound suite is empty; nothing was checked");
    }
    let report = run_suite(&suite, execution());
    print!("{}", report.table());
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        report.write_csv(&dir.join("bounds.csv"))?;
    }
    Ok(if !report.errors.is_empty() {
        ExitCode::from(2)
    } else if report.violations() > 0 {
        ExitCode::from(EXIT_VIOLATION)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode> {
    let opts = PlotOptions { title: args.title, ..Default::default() };
    plot_files(&args.files, args.column.as_deref(), &args.out, &opts)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::CheckBounds(a) => cmd_check_bounds(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

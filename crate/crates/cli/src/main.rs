use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use illposed::asc::distance_curve;
use illposed::choice::{alpha_apriori, alpha_discrepancy, alpha_oracle, Method};
use illposed::experiments::{
    fit_rate, run_experiment, trimmed_window, Cell, Dataset, ExperimentConfig, ExperimentId,
    DEFAULT_SEED,
};
use illposed::grid::log_space;
use illposed::problems::{
    add_noise, make_deriv2, make_diagonal_model, make_hilbert_scale_model, Deriv2Solution,
    InverseProblem,
};
use illposed::regularizers::{landweber_at, tikhonov, tikhonov_hilbert_scale};
use illposed::{Error, Result};

#[derive(Parser)]
#[command(
    name = "illposed",
    version,
    about = "Regularization experiments for linear ill-posed problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment; parameters are passed as `--name value`.
    Experiment {
        id: String,
        /// Experiment parameters plus `--out-dir`, `--seed` and `--jobs`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// Regularize one noisy sample and print norms.
    Solve(SolveArgs),
    /// Sample the distance function of a diagonal model.
    Asc(AscArgs),
    /// Select a regularization parameter.
    Choose(ChooseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Deriv2,
    Diagonal,
    Hilbert,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Tikhonov,
    Landweber,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleKind {
    Apriori,
    Discrepancy,
    Oracle,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "deriv2")]
    problem: ProblemKind,
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// deriv2 exact solution: constant_one or linear_t.
    #[arg(long, default_value = "constant_one")]
    solution: String,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Hilbert-scale operator order.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Hilbert-scale solution smoothness.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Hilbert-scale penalty index.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Relative noise level.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl ProblemArgs {
    fn build(&self) -> Result<InverseProblem> {
        match self.problem {
            ProblemKind::Deriv2 => {
                let sol = match self.solution.as_str() {
                    "constant_one" => Deriv2Solution::ConstantOne,
                    "linear_t" => Deriv2Solution::LinearT,
                    other => {
                        return Err(Error::Configuration(format!("unknown solution {other:?}")))
                    }
                };
                make_deriv2(self.n, sol, false)
            }
            ProblemKind::Diagonal => make_diagonal_model(self.n, self.eta, self.beta, 0),
            ProblemKind::Hilbert => make_hilbert_scale_model(self.n, self.a, self.p, self.s),
        }
    }

    fn method(&self, kappa: u32) -> Method {
        match (self.problem, kappa) {
            (ProblemKind::Hilbert, _) => Method::Hilbert {
                a: self.a,
                p: self.p,
                s: self.s,
            },
            (_, 0) => Method::Classical,
            (_, k) => Method::HighOrder { kappa_order: k },
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "tikhonov")]
    method: SolverKind,
    #[arg(long, default_value_t = 1e-4)]
    alpha: f64,
    /// Tikhonov order.
    #[arg(long, default_value_t = 0)]
    kappa: u32,
    /// Landweber iterations.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Landweber step size; defaults to 1 / sigma_1^2.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct AscArgs {
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    leading_ones: usize,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 2.0)]
    r_min: f64,
    #[arg(long, default_value_t = 40.0)]
    r_max: f64,
    #[arg(long, default_value_t = 40)]
    points: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ChooseArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    rule: RuleKind,
    #[arg(long, default_value_t = 1.5)]
    tau: f64,
    /// A-priori constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Smoothness index for the a-priori rule; defaults to the model's.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    kappa: u32,
    #[arg(long, default_value_t = 1e-30)]
    alpha_min: f64,
    #[arg(long, default_value_t = 100.0)]
    alpha_max: f64,
    /// Oracle grid size.
    #[arg(long, default_value_t = 300)]
    count: usize,
}

fn print_kv(key: &str, value: impl std::fmt::Display) {
    println!("{key}={value}");
}

/// Splits `--name value` / `--name=value` pairs.
fn flag_pairs(raw: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(arg) = it.next() {
        let Some(name) = arg.strip_prefix("--") else {
            return Err(Error::Configuration(format!(
                "expected a --flag, got {arg:?}"
            )));
        };
        match name.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Configuration(format!("--{name} needs a value")))?;
                out.push((name.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

fn take<T: std::str::FromStr>(pairs: &mut Vec<(String, String)>, name: &str) -> Result<Option<T>> {
    let Some(i) = pairs.iter().position(|(k, _)| k == name) else {
        return Ok(None);
    };
    let (_, v) = pairs.remove(i);
    v.parse()
        .map(Some)
        .map_err(|_| Error::Configuration(format!("invalid value {v:?} for --{name}")))
}

fn experiment(id: &str, params: &[String]) -> Result<()> {
    let id: ExperimentId = id.parse()?;
    let mut pairs = flag_pairs(params)?;
    let out_dir: PathBuf = take(&mut pairs, "out-dir")?.unwrap_or_else(|| PathBuf::from("out"));
    let jobs: Option<usize> = take(&mut pairs, "jobs")?;
    let seed: u64 = take(&mut pairs, "seed")?.unwrap_or(DEFAULT_SEED);
    let config = ExperimentConfig::new(id, seed, &pairs)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Configuration("--jobs must be positive".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_experiment(&config))?;
    for path in report.write(&out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<()> {
    let problem = args.problem.build()?;
    let sample = add_noise(&problem, args.problem.delta, args.problem.seed)?;
    let sol = match args.method {
        SolverKind::Tikhonov => match args.problem.problem {
            ProblemKind::Hilbert => {
                tikhonov_hilbert_scale(&problem, &sample.y_delta, args.alpha, args.problem.s)?
            }
            _ => tikhonov(&problem, &sample.y_delta, args.alpha, args.kappa)?,
        },
        SolverKind::Landweber => {
            let sigma1 = problem.op().sigmas()[0];
            let step = args.step.unwrap_or(1.0 / (sigma1 * sigma1));
            if args.k == 0 {
                return Err(Error::Configuration("--k must be positive".into()));
            }
            landweber_at(&problem, &sample.y_delta, step, &[args.k], None, true)?
                .pop()
                .expect("one checkpoint")
        }
    };
    print_kv("delta_abs", sample.delta_abs);
    if let Some(a) = sol.alpha {
        print_kv("alpha", a);
    }
    if let Some(k) = sol.iteration {
        print_kv("iteration", k);
    }
    print_kv("residual_norm", sol.residual_norm);
    print_kv("error_norm", sol.error_norm.unwrap_or(f64::NAN));
    print_kv("xi_norm", sol.source_norm_half.unwrap_or(f64::NAN));
    Ok(())
}

fn asc(args: &AscArgs) -> Result<()> {
    let problem = make_diagonal_model(args.n, args.eta, args.beta, args.leading_ones)?;
    let grid = log_space(args.r_min, args.r_max, args.points);
    let curve = distance_curve(problem.op(), problem.x_true(), args.nu, args.kappa, &grid)?;
    let mut table = Dataset::new("asc", ["R", "d", "lambda", "regime_flag"]);
    for p in &curve.points {
        table.push(vec![
            p.r.into(),
            p.d.into(),
            p.lambda.into(),
            Cell::Text(p.regime.as_str().into()),
        ]);
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let path = args.out_dir.join("asc.csv");
    std::fs::write(&path, table.to_csv()?)?;
    let pts: Vec<(f64, f64)> = curve.fittable().map(|p| (p.r, p.d)).collect();
    if let Ok(fit) = fit_rate(&pts, Some(trimmed_window(pts.len(), 0.2))) {
        print_kv("slope", fit.slope);
        print_kv("r_squared", fit.r_squared);
    }
    println!("{}", path.display());
    Ok(())
}

fn choose(args: &ChooseArgs) -> Result<()> {
    let problem = args.problem.build()?;
    let sample = add_noise(&problem, args.problem.delta, args.problem.seed)?;
    let method = args.problem.method(args.kappa);
    let result = match args.rule {
        RuleKind::Apriori => {
            let mu = args.mu.or(problem.mu_nominal()).ok_or_else(|| {
                Error::Configuration("the a-priori rule needs --mu for this problem".into())
            })?;
            alpha_apriori(sample.delta_abs, mu, method, args.c)?
        }
        RuleKind::Discrepancy => alpha_discrepancy(
            &problem,
            &sample.y_delta,
            sample.delta_abs,
            args.tau,
            method,
            (args.alpha_min, args.alpha_max),
        )?,
        RuleKind::Oracle => {
            let lo = args.alpha_min.max(1e-16);
            let grid = log_space(lo, args.alpha_max, args.count);
            alpha_oracle(&problem, &sample.y_delta, method, &grid)?
        }
    };
    print_kv("rule", result.rule.as_str());
    print_kv("alpha", result.alpha);
    print_kv("delta_abs", sample.delta_abs);
    for (k, v) in &result.diagnostics {
        print_kv(k, v);
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_configuration() {
        2
    } else if e.is_numeric() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Experiment { id, params } => experiment(id, params),
        Command::Solve(a) => solve(a),
        Command::Asc(a) => asc(a),
        Command::Choose(a) => choose(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

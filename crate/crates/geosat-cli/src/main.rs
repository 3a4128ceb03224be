//! geosat: generate geometric SAT instances and random geometric
//! graphs, solve them, evaluate closed forms, and run seeded
//! experiments.
//!
//! Every run prints the fully resolved configuration as one JSON line
//! on stderr so results stay attributable to exact parameters. Exit
//! codes: 0 success, 1 usage or input errors, 2 solver refusals and
//! failed verification gates.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use geosat::analytics;
use geosat::experiments::{self, Event, ExperimentConfig, find_threshold, run_trials, sweep};
use geosat::geometry::{Boundary, Metric};
use geosat::models::{self, Generated, Model, ModelParams};
use geosat::solvers::{
    Certificate, DEFAULT_VAR_LIMIT, SatResult, Status, solve_2sat, solve_ksat_complete,
};
use geosat::{Error, io};

#[derive(Parser)]
#[command(name = "geosat", version, about = "Geometric SAT models and experiments")]
struct Cli {
    /// Master seed for all randomness in this run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial batches; 0 uses the default pool.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Work cap per run, counted as n * trials.
    #[arg(long, global = true, env = "GEOSAT_BUDGET")]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance and write it with its sidecar record.
    Generate(GenerateArgs),
    /// Solve a DIMACS file and print the verdict.
    Solve(SolveArgs),
    /// Evaluate a closed form.
    Analyze(AnalyzeArgs),
    /// Estimate an event probability across a parameter grid.
    Sweep(SweepArgs),
    /// Locate the parameter where an event probability crosses a target.
    Threshold(ThresholdArgs),
    /// Run a verification suite and gate on its statistics.
    Verify(VerifyArgs),
    /// Regenerate artifacts from a sidecar record.
    Export(ExportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum ModelArg {
    Gamma,
    Mu,
    Tilde,
    RggPoisson,
    RggFixed,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Gamma => Model::Gamma,
            ModelArg::Mu => Model::Mu,
            ModelArg::Tilde => Model::Tilde,
            ModelArg::RggPoisson => Model::RggPoisson,
            ModelArg::RggFixed => Model::RggFixed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum MetricArg {
    Linf,
    L2,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum BoundaryArg {
    Cube,
    Torus,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum EventArg {
    Sat,
    Unsat,
    Connected,
    HasBicycle,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, value_enum, default_value_t = ModelArg::Mu)]
    model: ModelArg,
    /// Variable count (or intensity scale for the graph models).
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Clause width / edge arity.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Dimension of the unit cube.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Model parameter, by its generic name.
    #[arg(long)]
    param: Option<f64>,
    /// Model parameter, spelled for the mu model.
    #[arg(long)]
    mu: Option<f64>,
    /// Model parameter, spelled for the gamma model.
    #[arg(long)]
    gamma: Option<f64>,
    /// Model parameter, spelled for the explicit-radius models.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_enum, default_value_t = MetricArg::Linf)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Cube)]
    boundary: BoundaryArg,
}

impl ModelFlags {
    /// At most one of the parameter spellings, checked against the
    /// model it belongs to.
    fn param_value(&self) -> Result<Option<f64>, Error> {
        let model = Model::from(self.model);
        let mut found: Option<(&str, f64)> = None;
        for (flag, value) in [
            ("--param", self.param),
            ("--mu", self.mu),
            ("--gamma", self.gamma),
            ("--radius", self.radius),
        ] {
            let Some(value) = value else { continue };
            if found.is_some() {
                return Err(Error::InvalidParameter(
                    "give the model parameter exactly once".into(),
                ));
            }
            let fits = match (model, flag) {
                (_, "--param") => true,
                (Model::Mu, "--mu") => true,
                (Model::Gamma, "--gamma") => true,
                (Model::Tilde | Model::RggPoisson | Model::RggFixed, "--radius") => true,
                _ => false,
            };
            if !fits {
                return Err(Error::InvalidParameter(format!(
                    "{flag} does not parameterize the {model:?} model"
                )));
            }
            found = Some((flag, value));
        }
        Ok(found.map(|(_, v)| v))
    }

    fn resolve(&self) -> Result<ModelParams, Error> {
        let param = self.param_value()?.ok_or_else(|| {
            Error::InvalidParameter(
                "missing model parameter (--param, --mu, --gamma, or --radius)".into(),
            )
        })?;
        Ok(self.with_param(param))
    }

    fn with_param(&self, param: f64) -> ModelParams {
        ModelParams {
            model: self.model.into(),
            n: self.n,
            k: self.k,
            d: self.d,
            param,
            metric: match self.metric {
                MetricArg::Linf => Metric::Linf,
                MetricArg::L2 => Metric::L2,
            },
            boundary: match self.boundary {
                BoundaryArg::Cube => Boundary::Cube,
                BoundaryArg::Torus => Boundary::Torus,
            },
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Primary artifact: DIMACS for formula models, point CSV for the
    /// graph models. The sidecar record lands next to it as .json.
    #[arg(long)]
    out: PathBuf,
    /// Also write the sampled points here (formula models).
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// DIMACS input.
    #[arg(long = "in")]
    input: PathBuf,
    /// 2sat, complete, or auto (2sat when the width is 2).
    #[arg(long, default_value = "auto")]
    engine: String,
    /// Variable budget for the complete engine.
    #[arg(long, default_value_t = DEFAULT_VAR_LIMIT)]
    var_limit: u32,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Closed form to evaluate.
    #[arg(long)]
    formula: String,
    #[command(flatten)]
    model: ModelFlags,
    /// Per-coordinate radius for clique_prob.
    #[arg(long)]
    rho: Option<f64>,
    /// Moment order for poisson_moment.
    #[arg(long)]
    order: Option<u32>,
    /// Snake length for the snake expectations.
    #[arg(long)]
    s: Option<usize>,
    /// Path or bicycle length.
    #[arg(long)]
    l: Option<usize>,
    /// Exact U(k) override for coarse_radius.
    #[arg(long)]
    u_exact: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, value_enum, default_value_t = EventArg::Sat)]
    event: EventArg,
    /// Longest bicycle chain for --event has-bicycle.
    #[arg(long, default_value_t = 3)]
    l_max: usize,
    /// Comma-separated strictly increasing parameter grid.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Curve CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-point trial CSV dumps.
    #[arg(long)]
    trials_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, value_enum, default_value_t = EventArg::Sat)]
    event: EventArg,
    #[arg(long, default_value_t = 3)]
    l_max: usize,
    /// Bracket endpoints for the bisection.
    #[arg(long, default_value_t = 0.05)]
    lo: f64,
    #[arg(long, default_value_t = 1.5)]
    hi: f64,
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    #[arg(long, default_value_t = 0.05)]
    rel_tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// density, coupling, or moment.
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Formula id for the moment suite.
    #[arg(long)]
    formula: Option<String>,
    /// Gate: largest acceptable |z|.
    #[arg(long, default_value_t = 3.0)]
    max_z: f64,
    /// Gate: smallest acceptable coupling agreement rate.
    #[arg(long, default_value_t = 0.95)]
    min_agreement: f64,
}

#[derive(Args)]
struct ExportArgs {
    /// Sidecar record to regenerate from.
    #[arg(long)]
    record: PathBuf,
    /// Write the regenerated DIMACS here.
    #[arg(long)]
    cnf: Option<PathBuf>,
    /// Write the regenerated points here.
    #[arg(long)]
    points: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::VarLimitExceeded { .. } | Error::Overflow(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(cli, args),
        Command::Solve(args) => cmd_solve(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Threshold(args) => cmd_threshold(cli, args),
        Command::Verify(args) => cmd_verify(cli, args),
        Command::Export(args) => cmd_export(cli, args),
    }
}

/// One-line JSON record of the resolved configuration, on stderr.
fn emit_config(subcommand: &str, cli: &Cli, detail: serde_json::Value) {
    let record = json!({
        "subcommand": subcommand,
        "seed": cli.seed,
        "jobs": cli.jobs,
        "budget": cli.budget,
        "config": detail,
    });
    eprintln!("{record}");
}

fn params_json(p: &ModelParams) -> serde_json::Value {
    serde_json::to_value(p).expect("params serialize")
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<u8, Error> {
    let params = args.model.resolve()?;
    emit_config(
        "generate",
        cli,
        json!({
            "params": params_json(&params),
            "out": args.out.display().to_string(),
            "points": args.points.as_ref().map(|p| p.display().to_string()),
        }),
    );
    let sidecar = args.out.with_extension("json");
    match models::generate(&params, cli.seed)? {
        Generated::Formula { points, formula } => {
            io::write_dimacs(&args.out, &formula)?;
            let record = formula.record.expect("generators attach records");
            io::write_record(&sidecar, &record)?;
            if let Some(path) = &args.points {
                io::write_points(path, &points)?;
            }
            println!(
                "wrote {} ({} clauses over {} variables), sidecar {}",
                args.out.display(),
                formula.clauses.len(),
                formula.n_vars,
                sidecar.display()
            );
        }
        Generated::Graph { points, graph } => {
            io::write_points(&args.out, &points)?;
            let record = models::GeneratorRecord {
                params,
                seed: cli.seed,
            };
            io::write_record(&sidecar, &record)?;
            println!(
                "wrote {} ({} points, {} edges), sidecar {}",
                args.out.display(),
                points.len(),
                graph.edges.len(),
                sidecar.display()
            );
        }
    }
    Ok(0)
}

fn print_verdict(result: &SatResult) {
    match result.status {
        Status::Satisfiable => {
            println!("s SATISFIABLE");
            if let Some(witness) = &result.witness {
                let vals: Vec<String> = witness
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| {
                        let v = i as i64 + 1;
                        (if b { v } else { -v }).to_string()
                    })
                    .collect();
                println!("v {} 0", vals.join(" "));
            }
        }
        Status::Unsatisfiable => {
            match &result.certificate {
                Some(Certificate::ContradictoryScc { var }) => {
                    println!("c variable {var} is strongly connected to its negation");
                }
                Some(Certificate::ExhaustiveSearch) => {
                    println!("c exhausted the assignment space");
                }
                None => {}
            }
            println!("s UNSATISFIABLE");
        }
    }
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<u8, Error> {
    emit_config(
        "solve",
        cli,
        json!({
            "in": args.input.display().to_string(),
            "engine": args.engine,
            "var_limit": args.var_limit,
        }),
    );
    let formula = io::read_dimacs(&args.input)?;
    let result = match args.engine.as_str() {
        "2sat" => solve_2sat(&formula)?,
        "complete" => solve_ksat_complete(&formula, args.var_limit)?,
        "auto" => {
            if formula.k == 2 {
                solve_2sat(&formula)?
            } else {
                solve_ksat_complete(&formula, args.var_limit)?
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown engine {other:?}, expected 2sat, complete, or auto"
            )));
        }
    };
    print_verdict(&result);
    Ok(0)
}

fn analyze_value(args: &AnalyzeArgs) -> Result<serde_json::Value, Error> {
    let flags = &args.model;
    let need = |opt: Option<f64>, what: &str| {
        opt.ok_or_else(|| Error::InvalidParameter(format!("{what} is required for this formula")))
    };
    let value = |v: analytics::AnalyticValue| serde_json::to_value(v).expect("serialize");
    let metric = match flags.metric {
        MetricArg::Linf => Metric::Linf,
        MetricArg::L2 => Metric::L2,
    };
    let boundary = match flags.boundary {
        BoundaryArg::Cube => Boundary::Cube,
        BoundaryArg::Torus => Boundary::Torus,
    };
    Ok(match args.formula.as_str() {
        "clique_prob" => value(analytics::clique_prob(
            flags.k,
            flags.d,
            need(args.rho, "--rho")?,
            boundary,
        )?),
        "expected_clauses" => value(analytics::expected_clauses(&flags.resolve()?)?),
        "threshold_2sat" => value(analytics::threshold_2sat(flags.model.into(), flags.d)?),
        "ksat_bounds" => {
            let (lower, upper) = analytics::ksat_bounds(flags.k, flags.d, flags.model.into())?;
            json!({ "lower": value(lower), "upper": value(upper) })
        }
        "poisson_moment" => {
            let mu = flags.param_value()?.ok_or_else(|| {
                Error::InvalidParameter("--mu or --param is required".into())
            })?;
            let order = args
                .order
                .ok_or_else(|| Error::InvalidParameter("--order is required".into()))?;
            value(analytics::poisson_moment(mu, order)?)
        }
        "wedge_prob" => {
            let mu = need(flags.param_value()?, "--mu")?;
            value(analytics::wedge_prob(mu, flags.d, flags.n)?)
        }
        "triple_probs" => {
            let mu = need(flags.param_value()?, "--mu")?;
            let (path, star) = analytics::triple_probs(mu, flags.d, flags.n)?;
            json!({ "path": value(path), "star": value(star) })
        }
        "expected_snakes" => {
            let s = args
                .s
                .ok_or_else(|| Error::InvalidParameter("--s is required".into()))?;
            value(analytics::expected_snakes(&flags.resolve()?, s)?)
        }
        "expected_snakes_exact" => {
            let s = args
                .s
                .ok_or_else(|| Error::InvalidParameter("--s is required".into()))?;
            value(analytics::expected_snakes_exact(&flags.resolve()?, s)?)
        }
        "expected_paths" => {
            let l = args
                .l
                .ok_or_else(|| Error::InvalidParameter("--l is required".into()))?;
            value(analytics::expected_paths(&flags.resolve()?, l)?)
        }
        "bicycle_bound" => {
            let l = args
                .l
                .ok_or_else(|| Error::InvalidParameter("--l is required".into()))?;
            value(analytics::bicycle_bound(&flags.resolve()?, l)?)
        }
        "u_k_bound" => value(analytics::u_k_bound(flags.k)?),
        "coarse_radius" => {
            let gamma = need(flags.param_value()?, "--gamma")?;
            value(analytics::coarse_radius(
                flags.k,
                flags.d,
                gamma,
                flags.n,
                args.u_exact,
            )?)
        }
        "connectivity_radius" => {
            value(analytics::connectivity_radius(flags.n, flags.d, metric)?)
        }
        other => return Err(Error::UnknownFormula(other.to_string())),
    })
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<u8, Error> {
    emit_config(
        "analyze",
        cli,
        json!({
            "formula": args.formula,
            "model": format!("{:?}", args.model.model),
            "n": args.model.n,
            "k": args.model.k,
            "d": args.model.d,
            "param": args.model.param_value()?,
            "rho": args.rho,
            "order": args.order,
            "s": args.s,
            "l": args.l,
            "u_exact": args.u_exact,
        }),
    );
    let out = analyze_value(args)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn event_of(event: EventArg, l_max: usize) -> Event {
    match event {
        EventArg::Sat => Event::Sat,
        EventArg::Unsat => Event::Unsat,
        EventArg::Connected => Event::Connected,
        EventArg::HasBicycle => Event::HasBicycle { l_max },
    }
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<u8, Error> {
    let base = args.model.param_value()?.unwrap_or(args.grid[0]);
    let params = args.model.with_param(base);
    let event = event_of(args.event, args.l_max);
    let config = ExperimentConfig {
        params,
        event,
        trials: args.trials,
        master_seed: cli.seed,
        parallelism: cli.jobs,
        budget: cli.budget,
    };
    emit_config(
        "sweep",
        cli,
        json!({
            "params": params_json(&params),
            "event": event.label(),
            "grid": args.grid,
            "trials": args.trials,
            "out": args.out.display().to_string(),
        }),
    );
    let curve = sweep(&config, &args.grid)?;
    io::write_curve(&args.out, &curve)?;
    if let Some(dir) = &args.trials_dir {
        std::fs::create_dir_all(dir)?;
        for (idx, point) in curve.points.iter().enumerate() {
            let mut cfg = config;
            cfg.params.param = point.param;
            let batch = run_trials(&cfg)?;
            io::write_trial_batch(&dir.join(format!("trials_{idx}.csv")), &batch)?;
        }
    }
    for point in &curve.points {
        println!(
            "param {:.6} p_hat {:.4} ci [{:.4}, {:.4}] trials {}",
            point.param, point.p_hat, point.ci_lo, point.ci_hi, point.trials
        );
    }
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_threshold(cli: &Cli, args: &ThresholdArgs) -> Result<u8, Error> {
    let params = args.model.with_param(args.lo);
    let event = event_of(args.event, args.l_max);
    let config = ExperimentConfig {
        params,
        event,
        trials: 0,
        master_seed: cli.seed,
        parallelism: cli.jobs,
        budget: cli.budget,
    };
    emit_config(
        "threshold",
        cli,
        json!({
            "params": params_json(&params),
            "event": event.label(),
            "lo": args.lo,
            "hi": args.hi,
            "target": args.target,
            "rel_tol": args.rel_tol,
        }),
    );
    let estimate = find_threshold(&config, args.lo, args.hi, args.target, args.rel_tol)?;
    println!("{}", serde_json::to_string_pretty(&estimate)?);
    Ok(0)
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<u8, Error> {
    emit_config(
        "verify",
        cli,
        json!({
            "suite": args.suite,
            "trials": args.trials,
            "formula": args.formula,
            "max_z": args.max_z,
            "min_agreement": args.min_agreement,
        }),
    );
    match args.suite.as_str() {
        "density" => {
            let params = args.model.resolve()?;
            let report = experiments::verify_clause_density(&params, args.trials, cli.seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.z.abs() > args.max_z {
                eprintln!("verification failed: |z| = {:.3} > {}", report.z.abs(), args.max_z);
                return Ok(2);
            }
        }
        "coupling" => {
            let flags = &args.model;
            let mu = flags.param_value()?.ok_or_else(|| {
                Error::InvalidParameter("--mu or --param is required".into())
            })?;
            let report =
                experiments::verify_coupling(flags.n, flags.k, flags.d, mu, args.trials, cli.seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.agreement_rate < args.min_agreement {
                eprintln!(
                    "verification failed: agreement {:.4} < {}",
                    report.agreement_rate, args.min_agreement
                );
                return Ok(2);
            }
            if report.heads_z.abs() > args.max_z {
                eprintln!(
                    "verification failed: |heads_z| = {:.3} > {}",
                    report.heads_z.abs(),
                    args.max_z
                );
                return Ok(2);
            }
        }
        "moment" => {
            let formula = args
                .formula
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("--formula is required".into()))?;
            let params = args.model.resolve()?;
            let report = experiments::verify_moment(formula, &params, args.trials, cli.seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.z.abs() > args.max_z {
                eprintln!("verification failed: |z| = {:.3} > {}", report.z.abs(), args.max_z);
                return Ok(2);
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite {other:?}, expected density, coupling, or moment"
            )));
        }
    }
    Ok(0)
}

fn cmd_export(cli: &Cli, args: &ExportArgs) -> Result<u8, Error> {
    emit_config(
        "export",
        cli,
        json!({
            "record": args.record.display().to_string(),
            "cnf": args.cnf.as_ref().map(|p| p.display().to_string()),
            "points": args.points.as_ref().map(|p| p.display().to_string()),
        }),
    );
    if args.cnf.is_none() && args.points.is_none() {
        return Err(Error::InvalidParameter(
            "export needs --cnf and/or --points".into(),
        ));
    }
    let record = io::read_record(&args.record)?;
    match models::generate(&record.params, record.seed)? {
        Generated::Formula { points, formula } => {
            if let Some(path) = &args.cnf {
                io::write_dimacs(path, &formula)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = &args.points {
                io::write_points(path, &points)?;
                println!("wrote {}", path.display());
            }
        }
        Generated::Graph { points, .. } => {
            if args.cnf.is_some() {
                return Err(Error::InvalidParameter(
                    "graph records have no DIMACS representation".into(),
                ));
            }
            if let Some(path) = &args.points {
                io::write_points(path, &points)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(0)
}

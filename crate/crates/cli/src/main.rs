use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use dsym::fields::{algebra, VectorField};
use dsym::flows::{
    classify_symmetry, continuous_limit_study, flow_closed_form_x7, flow_numeric, flow_trajectory_x7,
    group_law_check, TrajectoryFlow, DS3_COORDS,
};
use dsym::invariance::{
    check_invariance, invariant_function, survey_continuous, survey_discrete, ContSampler, Sampler,
};
use dsym::schemes::{self, solve_third_order, SolveSpec};
use dsym::{prolong_discrete, restrict, Expression, Lattice, Scheme, Trajectory64};

/// Symmetry checks for ordinary difference schemes.
#[derive(Debug, Parser, Serialize)]
#[command(name = "dsym", version)]
struct Cli {
    /// Seed for every sampler.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Number of sampled jet contexts.
    #[arg(long, global = true, default_value_t = 200)]
    samples: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Apply prolonged fields to a scheme's equations or to named invariants.
    Check(CheckArgs),
    /// Numerical rank of the symmetry matrix over sampled contexts.
    Rank(RankArgs),
    /// Solve the third-order scheme on a geometric lattice; writes CSV.
    Solve(LatticeArgs),
    /// Flow a trajectory along a restricted prolonged field.
    Flow(FlowArgs),
    /// Convergence of the discrete characteristic to u_x; writes CSV.
    Limit(LimitArgs),
    /// Point, contact-internal, or not a symmetry.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct SchemeArgs {
    /// Catalog name (DSYS, DS3, Q2EQ1) or path to a scheme JSON file.
    #[arg(long)]
    scheme: String,
    /// Lattice ratio for catalog schemes.
    #[arg(long, default_value_t = 1.5)]
    c: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Manifold {
    Solution,
    Generic,
    Weak,
    WeakNoConsequence,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// L0, L, a comma-separated list of catalog names, or a field JSON file.
    #[arg(long, default_value = "L0")]
    fields: String,
    /// Named invariants (I1, I2, I3, I4, ...) to check instead of the scheme equations.
    #[arg(long, value_delimiter = ',')]
    function: Vec<String>,
    #[arg(long, value_enum, default_value = "solution")]
    manifold: Manifold,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RankManifold {
    Generic,
    Weak,
    WeakNoConsequence,
    ContinuousGeneric,
    ContinuousSystem,
    ContinuousSystemConsequence,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    #[arg(long, default_value = "L0")]
    fields: String,
    #[arg(long, value_enum, default_value = "generic")]
    manifold: RankManifold,
    /// Exit 1 unless every context has this rank.
    #[arg(long)]
    expect: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct LatticeArgs {
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    h0: f64,
    /// Lattice ratio h_{n+1}/h_n.
    #[arg(long, default_value_t = 1.5)]
    c: f64,
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// u at the first three lattice points.
    #[arg(long, value_delimiter = ',', default_value = "0,1,3")]
    init: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FlowMethod {
    Closed,
    Numeric,
    Both,
}

#[derive(Debug, Args, Serialize)]
struct FlowArgs {
    #[arg(long, default_value = "X7d")]
    field: String,
    #[arg(long, default_value = "DS3")]
    scheme: String,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// RK4 steps for the numeric flow.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, value_enum, default_value = "both")]
    method: FlowMethod,
    /// Trajectory CSV (x,u[,v]); otherwise the scheme is solved on the lattice below.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[command(flatten)]
    lattice: LatticeArgs,
}

#[derive(Debug, Args, Serialize)]
struct LimitArgs {
    #[arg(long, default_value = "X7d")]
    field: String,
    /// u(x) to sample.
    #[arg(long)]
    u: String,
    #[arg(long, default_value_t = 0.5)]
    x0: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125,0.00625")]
    h: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    field: String,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Run(e.to_string())
}

/// Rewrites every non-integer number with 17 significant digits.
fn fixed_precision(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => match n.as_f64() {
            Some(f) if f.is_finite() => format!("{f:.16e}")
                .parse::<serde_json::Number>()
                .map(Value::Number)
                .unwrap_or(Value::Number(n)),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(fixed_precision).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, fixed_precision(v))).collect()),
        other => other,
    }
}

fn with_config<T: Serialize>(cli: &Cli, report: &T) -> Result<String, CliError> {
    let mut root = serde_json::Map::new();
    root.insert("config".into(), serde_json::to_value(cli).map_err(run_err)?);
    root.insert("seed".into(), cli.seed.into());
    root.insert("report".into(), serde_json::to_value(report).map_err(run_err)?);
    let text = serde_json::to_string_pretty(&fixed_precision(Value::Object(root))).map_err(run_err)?;
    Ok(text + "\n")
}

fn csv_header(cli: &Cli) -> Result<String, CliError> {
    let echo = serde_json::to_string(&fixed_precision(serde_json::to_value(cli).map_err(run_err)?)).map_err(run_err)?;
    Ok(format!("# seed={} config={}\n", cli.seed, echo))
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| config(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(run_err),
    }
}

fn load_scheme(name: &str, c: f64) -> Result<Scheme, CliError> {
    let path = Path::new(name);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| config(format!("{name}: {e}")))?;
        Scheme::from_json(&text).map_err(config)
    } else {
        schemes::catalog(name, c).map_err(config)
    }
}

fn load_fields(spec: &str) -> Result<Vec<VectorField>, CliError> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| config(format!("{spec}: {e}")))?;
        let value: Value = serde_json::from_str(&text).map_err(config)?;
        let items = match value {
            Value::Array(a) => a,
            v => vec![v],
        };
        items
            .iter()
            .map(|v| VectorField::from_json(&v.to_string()).map_err(config))
            .collect()
    } else {
        algebra(spec).map_err(config)
    }
}

fn load_field(spec: &str) -> Result<VectorField, CliError> {
    let mut fields = load_fields(spec)?;
    if fields.len() != 1 {
        return Err(config(format!("expected one field, got {}", fields.len())));
    }
    Ok(fields.remove(0))
}

fn validate(cli: &Cli) -> Result<(), CliError> {
    if cli.samples == 0 {
        return Err(config("--samples must be at least 1"));
    }
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(config("--tol must be positive"));
    }
    Ok(())
}

fn cmd_check(cli: &Cli, a: &CheckArgs) -> Result<bool, CliError> {
    let scheme = load_scheme(&a.scheme.scheme, a.scheme.c)?;
    let fields = load_fields(&a.fields)?;
    let functions: Vec<(String, Expression)> = if a.function.is_empty() {
        scheme
            .equations
            .iter()
            .enumerate()
            .map(|(i, e)| (format!("E{}", i + 1), e.clone()))
            .collect()
    } else {
        a.function
            .iter()
            .map(|n| invariant_function(n).map(|e| (n.clone(), e)).map_err(config))
            .collect::<Result<_, _>>()?
    };
    let sampler = match a.manifold {
        Manifold::Solution => Sampler::solution(&scheme),
        Manifold::Generic => Sampler::generic_for(&scheme),
        Manifold::Weak => Sampler::weak(),
        Manifold::WeakNoConsequence => Sampler::weak_without_consequence(),
    };
    let report = check_invariance(&fields, &functions, &sampler, cli.samples, cli.seed, cli.tol).map_err(run_err)?;
    emit(cli, &with_config(cli, &report)?)?;
    Ok(report.pass)
}

fn cmd_rank(cli: &Cli, a: &RankArgs) -> Result<bool, CliError> {
    let fields = load_fields(&a.fields)?;
    let survey = match a.manifold {
        RankManifold::Generic => survey_discrete(&fields, &Sampler::generic(), cli.samples, cli.seed),
        RankManifold::Weak => survey_discrete(&fields, &Sampler::weak(), cli.samples, cli.seed),
        RankManifold::WeakNoConsequence => {
            survey_discrete(&fields, &Sampler::weak_without_consequence(), cli.samples, cli.seed)
        }
        RankManifold::ContinuousGeneric => survey_continuous(&fields, ContSampler::Generic, cli.samples, cli.seed),
        RankManifold::ContinuousSystem => survey_continuous(&fields, ContSampler::System, cli.samples, cli.seed),
        RankManifold::ContinuousSystemConsequence => {
            survey_continuous(&fields, ContSampler::SystemWithConsequence, cli.samples, cli.seed)
        }
    }
    .map_err(run_err)?;
    emit(cli, &with_config(cli, &survey)?)?;
    Ok(match a.expect {
        Some(r) => survey.uniform_rank() == Some(r),
        None => true,
    })
}

fn solve(l: &LatticeArgs) -> Result<Trajectory64, CliError> {
    let init: [f64; 3] = l
        .init
        .as_slice()
        .try_into()
        .map_err(|_| config(format!("--init needs 3 values, got {}", l.init.len())))?;
    let lattice = Lattice::new(l.x0, l.h0, l.c, l.count).map_err(config)?;
    solve_third_order(&SolveSpec { lattice, init }).map_err(config)
}

fn cmd_solve(cli: &Cli, l: &LatticeArgs) -> Result<bool, CliError> {
    let t = solve(l)?;
    let mut buf = csv_header(cli)?.into_bytes();
    t.write_csv(&mut buf).map_err(run_err)?;
    emit(cli, &String::from_utf8(buf).map_err(run_err)?)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct PointFlow {
    coordinates: Vec<String>,
    before: Vec<f64>,
    closed_form: Option<Vec<f64>>,
    numeric: Option<Vec<f64>>,
    /// Max componentwise gap between the two when both ran.
    discrepancy: Option<f64>,
    group_law: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FlowResult {
    field: String,
    scheme: String,
    lambda: f64,
    trajectory: Option<TrajectoryFlow>,
    base_point: PointFlow,
    pass: bool,
}

fn cmd_flow(cli: &Cli, a: &FlowArgs) -> Result<bool, CliError> {
    let scheme = load_scheme(&a.scheme, a.lattice.c)?;
    let field = load_field(&a.field)?;
    let t = match &a.trajectory {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| config(format!("{}: {e}", p.display())))?;
            Trajectory64::read_csv(f).map_err(config)?
        }
        None => solve(&a.lattice)?,
    };
    let closed_applies = field.name == "X7d" && scheme.name == "DS3";
    let want_closed = !matches!(a.method, FlowMethod::Numeric);
    let want_numeric = !matches!(a.method, FlowMethod::Closed);
    if want_closed && !closed_applies && matches!(a.method, FlowMethod::Closed) {
        return Err(config("a closed-form flow is only available for X7d on DS3"));
    }

    let pr = prolong_discrete(&field, scheme.jet_order()).map_err(config)?;
    let r = restrict(&pr, &scheme).map_err(config)?;
    let coords = r.coordinates();
    let s = t.stencil();
    let state: Vec<f64> = coords
        .iter()
        .map(|&c| s.coord(c, 0).ok_or_else(|| config(format!("trajectory does not provide {c}"))))
        .collect::<Result<_, _>>()?;

    let mut pass = true;
    let (mut trajectory, mut closed, mut numeric, mut law) = (None, None, None, None);
    if want_closed && closed_applies {
        let tf = flow_trajectory_x7(&t, a.lambda, &scheme).map_err(run_err)?;
        pass &= tf.max_residual < cli.tol && tf.ratio_change < 1e-12;
        trajectory = Some(tf);
        debug_assert_eq!(coords, DS3_COORDS.to_vec());
        closed = Some(flow_closed_form_x7(&state, a.lambda).map_err(run_err)?);
        let g = group_law_check(flow_closed_form_x7, &state, a.lambda, a.lambda).map_err(run_err)?;
        law = Some(g.discrepancy);
    }
    if want_numeric {
        numeric = Some(flow_numeric(&r, &state, a.lambda, a.steps).map_err(run_err)?);
        if law.is_none() {
            let g = group_law_check(|z, l| flow_numeric(&r, z, l, a.steps), &state, a.lambda, a.lambda)
                .map_err(run_err)?;
            law = Some(g.discrepancy);
        }
    }
    let discrepancy = match (&closed, &numeric) {
        (Some(c), Some(n)) => Some(c.iter().zip(n).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))),
        _ => None,
    };
    if let Some(d) = discrepancy {
        pass &= d < 1e-8;
    }
    let result = FlowResult {
        field: field.name.clone(),
        scheme: scheme.name.clone(),
        lambda: a.lambda,
        trajectory,
        base_point: PointFlow {
            coordinates: coords.iter().map(|c| c.to_string()).collect(),
            before: state,
            closed_form: closed,
            numeric,
            discrepancy,
            group_law: law,
        },
        pass,
    };
    emit(cli, &with_config(cli, &result)?)?;
    Ok(pass)
}

fn cmd_limit(cli: &Cli, a: &LimitArgs) -> Result<bool, CliError> {
    if a.field != "X7d" {
        return Err(config(format!("no discrete characteristic for {}", a.field)));
    }
    let u = Expression::parse(&a.u).map_err(config)?;
    if let Some(bad) = u.variables().into_iter().find(|v| v != "x") {
        return Err(config(format!("u may only depend on x, found `{bad}`")));
    }
    let study = continuous_limit_study(&u, a.x0, &a.h, a.c).map_err(config)?;
    let mut buf = csv_header(cli)?.into_bytes();
    study.write_csv(&mut buf).map_err(run_err)?;
    emit(cli, &String::from_utf8(buf).map_err(run_err)?)?;
    Ok(true)
}

fn cmd_classify(cli: &Cli, a: &ClassifyArgs) -> Result<bool, CliError> {
    let scheme = load_scheme(&a.scheme.scheme, a.scheme.c)?;
    let field = load_field(&a.field)?;
    let class = classify_symmetry(&field, &scheme).map_err(run_err)?;
    emit(cli, &with_config(cli, &class)?)?;
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    validate(cli)?;
    match &cli.command {
        Command::Check(a) => cmd_check(cli, a),
        Command::Rank(a) => cmd_rank(cli, a),
        Command::Solve(a) => cmd_solve(cli, a),
        Command::Flow(a) => cmd_flow(cli, a),
        Command::Limit(a) => cmd_limit(cli, a),
        Command::Classify(a) => cmd_classify(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dsym: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Run(_) => 1,
            })
        }
    }
}

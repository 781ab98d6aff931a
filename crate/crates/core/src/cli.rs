//! The `bkde` command line.
//!
//! Inputs are headerless CSV; models and reports are JSON. Output is built in
//! memory and written only once the command has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::{fit_joint, tensor_grid, MultiSample};
use crate::kernel::Kernel;
use crate::sample::Sample;
use crate::simulation::{BandwidthPolicy, BetaDist, ExperimentSpec, MethodSpec, FULL_REPLICATIONS};
use crate::support::{fit, solve_support, SolveReport, SolverOptions, SupportMode};
use crate::univariate::{linspace, FittedEstimator, GridPoint, Method};

#[derive(Debug, Parser)]
#[command(name = "bkde", version, about = "Boundary-corrected kernel estimation of densities and their support")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an estimator and write it as a JSON model (or a grid with --grid).
    Fit(FitArgs),
    /// Evaluate a saved model on a grid.
    Eval(EvalArgs),
    /// Estimate the support and print the solver report.
    Solve(SolveArgs),
    /// Run the boundary-region ISE experiment.
    Simulate(SimulateArgs),
    /// Fit and evaluate the multivariate estimator.
    Joint(JointArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridSpec {
    min: f64,
    max: f64,
    count: usize,
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `MIN,MAX,COUNT`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid must be MIN,MAX,COUNT, got `{s}`"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(bad());
        };
        let min: f64 = a.parse().map_err(|_| bad())?;
        let max: f64 = b.parse().map_err(|_| bad())?;
        let count: usize = c.parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite()) || min > max || count == 0 {
            return Err(Error::Config(format!("grid needs finite MIN <= MAX and COUNT >= 1, got `{s}`")));
        }
        Ok(Self { min, max, count })
    }
}

impl GridSpec {
    fn points(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.count)
    }
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Headerless one-column CSV of observations.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "boundary-kernel")]
    method: Method,
    /// proposed, extremes, known:L,U, lower:L or upper:U (ignored by naive).
    #[arg(long, default_value = "proposed")]
    mode: SupportMode,
    #[arg(long, default_value = "epanechnikov")]
    kernel: Kernel,
    /// `lscv` or a positive number.
    #[arg(long, default_value = "lscv")]
    bandwidth: BandwidthPolicy,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    est: EstimatorArgs,
    /// Emit grid values (MIN,MAX,COUNT) instead of the model.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSON model written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// MIN,MAX,COUNT; defaults to 201 points over the model's support.
    #[arg(long, conflicts_with = "points", allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// Headerless one-column CSV of evaluation points.
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// key = value experiment file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Populations as beta:P,Q (repeatable).
    #[arg(long)]
    dist: Vec<BetaDist>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, conflicts_with = "full")]
    reps: Option<usize>,
    /// Full-scale run with 10000 replications.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kernel: Option<Kernel>,
    #[arg(long)]
    bandwidth: Option<BandwidthPolicy>,
    /// Methods as `naive` or METHOD/MODE (repeatable).
    #[arg(long = "methods")]
    methods: Vec<MethodSpec>,
    /// Quadrature nodes for the ISE integral.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct JointArgs {
    /// Headerless CSV with one column per coordinate.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "reflection")]
    method: Method,
    /// One mode for every coordinate, or one per coordinate separated by `;`.
    #[arg(long, default_value = "proposed")]
    mode: String,
    #[arg(long, default_value = "epanechnikov")]
    kernel: Kernel,
    /// `lscv`, a number, or one value per coordinate separated by `;`.
    #[arg(long, default_value = "lscv")]
    bandwidth: String,
    /// Points per axis of a tensor grid over the estimated rectangle.
    #[arg(long, default_value_t = 21, conflicts_with = "points")]
    grid_count: usize,
    /// Headerless CSV of evaluation points, one column per coordinate.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
    #[command(flatten)]
    out: OutputArgs,
}

/// A fitted estimator together with the solve that produced its support.
#[derive(Debug, Serialize, Deserialize)]
pub struct Model {
    pub estimator: FittedEstimator,
    pub report: Option<SolveReport>,
}

/// CLI exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Input(_) | Error::Domain(_) | Error::Io(_) => 2,
        Error::Numeric { .. } => 3,
    }
}

/// Reads a headerless CSV of finite reals; every row must have `width`
/// fields (any width when `None`).
pub fn read_csv_rows(path: &Path, width: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Input(format!("{other:?}")),
        })?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Input(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Input(format!(
                    "{}: line {}: `{field}` is not a finite number",
                    path.display(),
                    i + 1
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::Input(format!(
                    "{}: line {}: expected {w} column(s), found {}",
                    path.display(),
                    i + 1,
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{}: no observations", path.display())));
    }
    Ok(rows)
}

fn read_column(path: &Path) -> Result<Vec<f64>> {
    Ok(read_csv_rows(path, Some(1))?.into_iter().map(|r| r[0]).collect())
}

fn solver_options(tol: f64, max_iter: usize) -> Result<SolverOptions> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Config("--tol must be positive and --max-iter at least 1".into()));
    }
    Ok(SolverOptions { tol, max_iterations: max_iter, ..SolverOptions::default() })
}

fn fit_model(args: &EstimatorArgs) -> Result<Model> {
    let sample = Sample::new(read_column(&args.input)?)?;
    let h = args.bandwidth.select(&sample, args.kernel)?;
    let mode = (args.method != Method::Naive).then_some(args.mode);
    let opts = solver_options(args.tol, args.max_iter)?;
    let (estimator, report) = fit(sample, h, args.kernel, args.method, mode, &opts)?;
    Ok(Model { estimator, report })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn grid_output(points: &[GridPoint], format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(&points),
        Format::Csv => {
            let mut s = String::from("x,pdf,cdf\n");
            for p in points {
                writeln!(s, "{:.16e},{:.16e},{:.16e}", p.x, p.pdf, p.cdf).unwrap();
            }
            Ok(s)
        }
    }
}

fn default_grid(est: &FittedEstimator) -> Vec<f64> {
    let support = est.support();
    let (lo, hi) = if support.is_bounded() {
        (support.lower(), support.upper())
    } else {
        let reach = est.kernel().support_radius().min(4.0) * est.bandwidth();
        (est.sample().min() - reach, est.sample().max() + reach)
    };
    linspace(lo, hi, 201)
}

fn cmd_fit(args: &FitArgs) -> Result<String> {
    let model = fit_model(&args.est)?;
    match args.grid {
        Some(grid) => grid_output(&model.estimator.evaluate_grid(&grid.points()), args.out.format),
        None => to_json(&model),
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let text = fs::read_to_string(&args.model)?;
    let model: Model =
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", args.model.display())))?;
    let est = model.estimator.validate()?;
    let xs = match (&args.grid, &args.points) {
        (Some(g), _) => g.points(),
        (None, Some(p)) => read_column(p)?,
        (None, None) => default_grid(&est),
    };
    grid_output(&est.evaluate_grid(&xs), args.out.format)
}

fn cmd_solve(args: &SolveArgs) -> Result<String> {
    let e = &args.est;
    let sample = Sample::new(read_column(&e.input)?)?;
    let h = e.bandwidth.select(&sample, e.kernel)?;
    let report = solve_support(&sample, h, e.kernel, e.method, e.mode, &solver_options(e.tol, e.max_iter)?)?;
    to_json(&report)
}

fn experiment_spec(args: &SimulateArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_config_str(&fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if !args.dist.is_empty() {
        spec.distributions = args.dist.clone();
    }
    if !args.n.is_empty() {
        spec.sample_sizes = args.n.clone();
    }
    if !args.methods.is_empty() {
        spec.methods = args.methods.clone();
    }
    if args.full {
        spec.replications = FULL_REPLICATIONS;
    }
    if let Some(r) = args.reps {
        spec.replications = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(k) = args.kernel {
        spec.kernel = k;
    }
    if let Some(b) = args.bandwidth {
        spec.bandwidth = b;
    }
    if let Some(n) = args.nodes {
        spec.quadrature_nodes = n;
    }
    if let Some(t) = args.tol {
        spec.solver.tol = t;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let spec = experiment_spec(args)?;
    let result = crate::simulation::run_experiment(&spec)?;
    match args.out.format {
        Format::Csv => Ok(result.to_csv()),
        Format::Json => to_json(&result),
    }
}

fn per_coordinate<T, F: Fn(&str) -> Result<T>>(text: &str, d: usize, parse: F) -> Result<Vec<T>> {
    let parts: Vec<&str> = text.split(';').map(str::trim).collect();
    match parts.len() {
        1 => (0..d).map(|_| parse(parts[0])).collect(),
        k if k == d => parts.into_iter().map(parse).collect(),
        k => Err(Error::Config(format!("expected 1 or {d} values, got {k} in `{text}`"))),
    }
}

fn cmd_joint(args: &JointArgs) -> Result<String> {
    let data = MultiSample::from_rows(&read_csv_rows(&args.input, None)?)?;
    let d = data.dim();
    let modes = per_coordinate(&args.mode, d, str::parse::<SupportMode>)?;
    let policies = per_coordinate(&args.bandwidth, d, str::parse::<BandwidthPolicy>)?;
    let bandwidths = policies
        .iter()
        .enumerate()
        .map(|(j, p)| p.select(&Sample::new(data.column(j).to_vec())?, args.kernel))
        .collect::<Result<Vec<f64>>>()?;
    let opts = solver_options(args.tol, args.max_iter)?;
    let est = fit_joint(data, &bandwidths, args.kernel, args.method, &modes, &opts)?;
    let points = match &args.points {
        Some(p) => read_csv_rows(p, Some(d))?,
        None => {
            if args.grid_count == 0 {
                return Err(Error::Config("--grid-count must be at least 1".into()));
            }
            let axes: Vec<Vec<f64>> = est
                .rectangle()
                .iter()
                .map(|r| linspace(r.lower(), r.upper(), args.grid_count))
                .collect();
            tensor_grid(&axes)
        }
    };
    let values = est.evaluate_points(&points)?;
    match args.out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                x: &'a [f64],
                pdf: f64,
                cdf: f64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                model: &'a crate::joint::JointEstimator,
                values: Vec<Row<'a>>,
            }
            let rows = values.iter().map(|(x, pdf, cdf)| Row { x, pdf: *pdf, cdf: *cdf }).collect();
            to_json(&Out { model: &est, values: rows })
        }
        Format::Csv => {
            let mut s = String::new();
            for j in 1..=d {
                write!(s, "x{j},").unwrap();
            }
            s.push_str("pdf,cdf\n");
            for (x, pdf, cdf) in &values {
                for v in x {
                    write!(s, "{v:.16e},").unwrap();
                }
                writeln!(s, "{pdf:.16e},{cdf:.16e}").unwrap();
            }
            Ok(s)
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let (text, output) = match &cli.command {
        Command::Fit(a) => (cmd_fit(a)?, a.out.output.as_deref()),
        Command::Eval(a) => (cmd_eval(a)?, a.out.output.as_deref()),
        Command::Solve(a) => (cmd_solve(a)?, a.output.as_deref()),
        Command::Simulate(a) => (cmd_simulate(a)?, a.out.output.as_deref()),
        Command::Joint(a) => (cmd_joint(a)?, a.out.output.as_deref()),
    };
    emit(&text, output)
}

/// Runs the command line given in `argv` (program name first) and returns
/// the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bkde: {e}");
            exit_code(&e)
        }
    }
}

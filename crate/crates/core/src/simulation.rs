//! Monte Carlo comparison of estimators by integrated squared error in the
//! upper boundary region, `∫_{u₀−h}^{∞} (f̃ − f)² dx`, for beta populations.
//!
//! Replication `r` draws from its own ChaCha stream `(seed, r)`, so results do
//! not depend on how replications are scheduled across threads.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{lscv_bandwidth, BandwidthGrid};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature::simpson_piecewise;
use crate::sample::Sample;
use crate::support::{fit, SolverOptions, SupportMode};
use crate::univariate::{FittedEstimator, Method};

/// Beta(p, q) population on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaDist {
    pub p: f64,
    pub q: f64,
}

impl BetaDist {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::Config(format!("beta shapes must be positive, got ({p}, {q})")));
        }
        Ok(Self { p, q })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        beta_density(self.p, self.q, x)
    }
}

impl fmt::Display for BetaDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta:{},{}", self.p, self.q)
    }
}

impl FromStr for BetaDist {
    type Err = Error;

    /// `beta:P,Q`
    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("beta:")
            .ok_or_else(|| Error::Config(format!("expected beta:P,Q, got `{s}`")))?;
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("expected beta:P,Q, got `{s}`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid beta shape `{t}`")))
        };
        BetaDist::new(parse(a)?, parse(b)?)
    }
}

fn beta_density(p: f64, q: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    // Endpoint values for shapes equal to 1 must not go through ln(0).
    let log_norm = libm::lgamma(p + q) - libm::lgamma(p) - libm::lgamma(q);
    let term = |shape: f64, t: f64| {
        if shape == 1.0 {
            0.0
        } else if t == 0.0 {
            if shape > 1.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            (shape - 1.0) * t.ln()
        }
    };
    (log_norm + term(p, x) + term(q, 1.0 - x)).exp()
}

/// Density of Beta(p, q); 0 outside `[0, 1]`.
pub fn beta_pdf(p: f64, q: f64, x: f64) -> Result<f64> {
    BetaDist::new(p, q)?;
    Ok(beta_density(p, q, x))
}

fn draw_beta<R: Rng>(rng: &mut R, gp: &Gamma<f64>, gq: &Gamma<f64>) -> f64 {
    loop {
        let a: f64 = rng.sample(gp);
        let b: f64 = rng.sample(gq);
        let s = a + b;
        if s > 0.0 {
            return a / s;
        }
    }
}

fn gammas(dist: BetaDist) -> (Gamma<f64>, Gamma<f64>) {
    (
        Gamma::new(dist.p, 1.0).expect("validated shape"),
        Gamma::new(dist.q, 1.0).expect("validated shape"),
    )
}

/// `n` unsorted draws from `dist`.
pub fn beta_draws<R: Rng>(rng: &mut R, dist: BetaDist, n: usize) -> Vec<f64> {
    let (gp, gq) = gammas(dist);
    (0..n).map(|_| draw_beta(rng, &gp, &gq)).collect()
}

/// `n` Beta(p, q) draws as `G_p / (G_p + G_q)` with independent unit-scale gammas.
pub fn sample_beta(p: f64, q: f64, n: usize, seed: u64) -> Result<Sample> {
    let dist = BetaDist::new(p, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sample::new(beta_draws(&mut rng, dist, n))
}

/// Generator for replication `r` of an experiment seeded with `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// `∫ (f − g)²` over `[a, b]`, split at `breaks` (jump points of either function).
pub fn integrated_squared_error<F, G>(f: F, g: G, a: f64, b: f64, breaks: &[f64], nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if nodes < 3 {
        return Err(Error::Config(format!("quadrature needs at least 3 nodes, got {nodes}")));
    }
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(simpson_piecewise(|x| (f(x) - g(x)).powi(2), &pts, nodes))
}

/// Boundary-region ISE of `est` against the true density `truth`, whose
/// support ends at `u0`. The infinite upper limit is replaced by
/// `max(u0, est upper endpoint) + 2h`, past which both densities vanish.
pub fn boundary_ise<T: Fn(f64) -> f64>(
    est: &FittedEstimator,
    truth: T,
    u0: f64,
    h: f64,
    nodes: usize,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
    }
    let upper = est.support().upper();
    let end = if upper.is_finite() { u0.max(upper) } else { u0 } + 2.0 * h;
    let mut breaks = est.breakpoints();
    breaks.push(u0);
    integrated_squared_error(|x| est.pdf(x), truth, u0 - h, end, &breaks, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "value")]
pub enum BandwidthPolicy {
    Lscv,
    Fixed(f64),
}

impl FromStr for BandwidthPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lscv") {
            return Ok(BandwidthPolicy::Lscv);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthPolicy::Fixed(h)),
            _ => Err(Error::Config(format!("bandwidth must be `lscv` or a positive number, got `{s}`"))),
        }
    }
}

impl BandwidthPolicy {
    pub fn select(&self, sample: &Sample, kernel: Kernel) -> Result<f64> {
        match *self {
            BandwidthPolicy::Fixed(h) => Ok(h),
            BandwidthPolicy::Lscv => lscv_bandwidth(sample, kernel, &BandwidthGrid::default_for(sample)?),
        }
    }
}

/// An estimator under comparison: a method and, for corrected methods, how
/// its support is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub mode: Option<SupportMode>,
}

impl MethodSpec {
    pub const NAIVE: MethodSpec = MethodSpec { method: Method::Naive, mode: None };

    pub fn new(method: Method, mode: SupportMode) -> Self {
        Self { method, mode: Some(mode) }
    }

    /// Naive, then proposed and extremes-based supports for both corrections.
    pub fn comparison_set() -> Vec<MethodSpec> {
        vec![
            MethodSpec::NAIVE,
            MethodSpec::new(Method::BoundaryKernel, SupportMode::Proposed),
            MethodSpec::new(Method::BoundaryKernel, SupportMode::Extremes),
            MethodSpec::new(Method::Reflection, SupportMode::Proposed),
            MethodSpec::new(Method::Reflection, SupportMode::Extremes),
        ]
    }

    pub fn label(&self) -> String {
        match self.mode {
            None => self.method.to_string(),
            Some(mode) => format!("{}/{}", self.method, mode),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// `naive` or `METHOD/MODE`, e.g. `boundary-kernel/proposed`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once('/') {
            None => {
                let method: Method = s.parse()?;
                if method != Method::Naive {
                    return Err(Error::Config(format!("method `{s}` needs a support mode (METHOD/MODE)")));
                }
                Ok(MethodSpec::NAIVE)
            }
            Some((m, mode)) => Ok(MethodSpec::new(m.parse()?, mode.parse()?)),
        }
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub distributions: Vec<BetaDist>,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub kernel: Kernel,
    pub bandwidth: BandwidthPolicy,
    pub seed: u64,
    pub quadrature_nodes: usize,
    #[serde(skip)]
    pub solver: SolverOptions,
}

pub const DESK_REPLICATIONS: usize = 500;
pub const FULL_REPLICATIONS: usize = 10_000;

impl Default for ExperimentSpec {
    /// Desk-scale study: three beta populations, n ∈ {50, 100, 300}, N = 500.
    fn default() -> Self {
        Self {
            distributions: vec![
                BetaDist { p: 1.0, q: 1.0 },
                BetaDist { p: 3.0, q: 1.0 },
                BetaDist { p: 3.0, q: 3.0 },
            ],
            sample_sizes: vec![50, 100, 300],
            methods: MethodSpec::comparison_set(),
            replications: DESK_REPLICATIONS,
            kernel: Kernel::EPANECHNIKOV,
            bandwidth: BandwidthPolicy::Lscv,
            seed: 0,
            quadrature_nodes: 4001,
            solver: SolverOptions::default(),
        }
    }
}

fn split_list(v: &str, sep: char) -> impl Iterator<Item = &str> {
    v.split(sep).map(str::trim).filter(|t| !t.is_empty())
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.distributions.is_empty() || self.sample_sizes.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("distributions, sample sizes and methods must be nonempty".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("sample sizes must be at least 2, got {n}")));
        }
        for d in &self.distributions {
            BetaDist::new(d.p, d.q)?;
        }
        if self.quadrature_nodes < 3 {
            return Err(Error::Config("quadrature needs at least 3 nodes".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("`{key}` expects an integer, got `{v}`")))
        };
        match key.trim() {
            "dist" | "distributions" => {
                self.distributions = split_list(value, ';').map(str::parse).collect::<Result<_>>()?;
            }
            "n" | "sample_sizes" => {
                self.sample_sizes = split_list(value, ',')
                    .map(|t| num(t).map(|v| v as usize))
                    .collect::<Result<_>>()?;
            }
            "methods" => {
                self.methods = split_list(value, ';').map(str::parse).collect::<Result<_>>()?;
            }
            "reps" | "replications" => self.replications = num(value)? as usize,
            "seed" => self.seed = num(value)?,
            "nodes" | "quadrature_nodes" => self.quadrature_nodes = num(value)? as usize,
            "kernel" => self.kernel = value.parse()?,
            "bandwidth" => self.bandwidth = value.parse()?,
            "tol" => {
                self.solver.tol = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid tolerance `{value}`")))?;
            }
            other => return Err(Error::Config(format!("unknown experiment key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a plain-text config of `key = value` lines; `#` starts a comment.
    /// Unset keys keep their desk-scale defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub distribution: String,
    pub n: usize,
    pub method: String,
    pub mean_ise: f64,
    pub std_error: f64,
    pub replications: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub methods: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn get(&self, dist: &BetaDist, n: usize, method: &MethodSpec) -> Option<&ResultRow> {
        let (d, m) = (dist.to_string(), method.label());
        self.rows.iter().find(|r| r.distribution == d && r.n == n && r.method == m)
    }

    /// Table layout: one line per (distribution, n), mean ISE and its standard
    /// error per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distribution,n");
        for m in &self.methods {
            write!(out, ",{m},{m}:se").unwrap();
        }
        out.push('\n');
        let mut i = 0;
        while i < self.rows.len() {
            let head = &self.rows[i];
            write!(out, "\"{}\",{}", head.distribution, head.n).unwrap();
            for row in &self.rows[i..i + self.methods.len()] {
                write!(out, ",{:.16e},{:.16e}", row.mean_ise, row.std_error).unwrap();
            }
            out.push('\n');
            i += self.methods.len();
        }
        out
    }
}

/// Sum with pairwise splitting; result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Per-replication outcome of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub ise: f64,
    pub fallback: bool,
}

/// Runs one replication: sample, shared bandwidth, every method, boundary ISE each.
pub fn run_replication(
    spec: &ExperimentSpec,
    dist: BetaDist,
    n: usize,
    replication: u64,
) -> Result<Vec<Outcome>> {
    let mut rng = replication_rng(spec.seed, replication);
    let sample = Sample::new(beta_draws(&mut rng, dist, n))?;
    let h = spec.bandwidth.select(&sample, spec.kernel)?;
    spec.methods
        .iter()
        .map(|m| {
            let (est, report) = fit(sample.clone(), h, spec.kernel, m.method, m.mode, &spec.solver)?;
            let ise = boundary_ise(&est, |x| dist.pdf(x), 1.0, h, spec.quadrature_nodes)?;
            let fallback = report.is_some_and(|r| r.fallback_left || r.fallback_right);
            Ok(Outcome { ise, fallback })
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_range(spec, 0..spec.replications as u64)
}

/// Like [`run_experiment`] over an explicit range of replication indices.
pub fn run_experiment_range(spec: &ExperimentSpec, reps: std::ops::Range<u64>) -> Result<ExperimentResult> {
    spec.validate()?;
    let count = (reps.end - reps.start) as usize;
    if count == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &dist in &spec.distributions {
        for &n in &spec.sample_sizes {
            let outcomes: Vec<Vec<Outcome>> = reps
                .clone()
                .into_par_iter()
                .map(|r| run_replication(spec, dist, n, r))
                .collect::<Result<_>>()?;
            for (k, m) in spec.methods.iter().enumerate() {
                let ises: Vec<f64> = outcomes.iter().map(|o| o[k].ise).collect();
                let mean = pairwise_sum(&ises) / count as f64;
                let dev: Vec<f64> = ises.iter().map(|v| (v - mean) * (v - mean)).collect();
                let var = if count > 1 { pairwise_sum(&dev) / (count - 1) as f64 } else { 0.0 };
                rows.push(ResultRow {
                    distribution: dist.to_string(),
                    n,
                    method: m.label(),
                    mean_ise: mean,
                    std_error: (var / count as f64).sqrt(),
                    replications: count,
                    fallbacks: outcomes.iter().filter(|o| o[k].fallback).count(),
                });
            }
        }
    }
    Ok(ExperimentResult {
        methods: spec.methods.iter().map(MethodSpec::label).collect(),
        rows,
    })
}

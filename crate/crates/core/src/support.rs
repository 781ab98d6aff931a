//! Support estimation by solving the estimating equation `F̂_{l,u}(X₍₁₎, X₍ₙ₎) = (1/(n+1), n/(n+1))`.
//!
//! For the boundary-kernel method the two endpoint equations decouple and each
//! objective is strictly monotone with known limits, so a sign-checked bisection
//! always finds the unique root. For the reflection method the right objective
//! depends weakly on `l` (and vice versa); the pair is resolved by alternating
//! one-dimensional solves. Its natural bracket `[X₍ₙ₎, X₍ₙ₎ + h]` need not
//! straddle the target, in which case the sample extreme is returned and the
//! side is flagged as a fallback.
//!
//! Root searches are carried out on the offset `d = u − X₍ₙ₎` (or `X₍₁₎ − l`),
//! which keeps the objectives free of cancellation near the sample extremes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::sample::{Sample, SupportInterval};
use crate::univariate::{FittedEstimator, Method};

/// How the support endpoints are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SupportMode {
    Known { lower: f64, upper: f64 },
    /// Both endpoints solved from the estimating equation.
    Proposed,
    /// Sample minimum and maximum.
    Extremes,
    /// Lower endpoint known, upper solved.
    HalfKnownLower { lower: f64 },
    /// Upper endpoint known, lower solved.
    HalfKnownUpper { upper: f64 },
}

impl fmt::Display for SupportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportMode::Known { lower, upper } => write!(f, "known:{lower},{upper}"),
            SupportMode::Proposed => f.write_str("proposed"),
            SupportMode::Extremes => f.write_str("extremes"),
            SupportMode::HalfKnownLower { lower } => write!(f, "lower:{lower}"),
            SupportMode::HalfKnownUpper { upper } => write!(f, "upper:{upper}"),
        }
    }
}

fn parse_finite(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid number `{s}` in support mode")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("support endpoint must be finite, got {s}")));
    }
    Ok(v)
}

impl FromStr for SupportMode {
    type Err = Error;

    /// Accepts `proposed`, `extremes`, `known:L,U`, `lower:L` and `upper:U`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        match (head.to_ascii_lowercase().as_str(), tail) {
            ("proposed", "") => Ok(SupportMode::Proposed),
            ("extremes", "") => Ok(SupportMode::Extremes),
            ("known", t) => {
                let (a, b) = t
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("expected known:L,U, got `{s}`")))?;
                let (lower, upper) = (parse_finite(a)?, parse_finite(b)?);
                SupportInterval::new(lower, upper)?;
                Ok(SupportMode::Known { lower, upper })
            }
            ("lower", t) if !t.is_empty() => Ok(SupportMode::HalfKnownLower {
                lower: parse_finite(t)?,
            }),
            ("upper", t) if !t.is_empty() => Ok(SupportMode::HalfKnownUpper {
                upper: parse_finite(t)?,
            }),
            _ => Err(Error::Config(format!("unknown support mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance on each equation, and endpoint-movement tolerance
    /// for the alternating reflection solve.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 200,
            max_sweeps: 100,
        }
    }
}

/// Outcome of a support solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub l_hat: f64,
    pub u_hat: f64,
    pub residual_left: f64,
    pub residual_right: f64,
    pub iterations_left: usize,
    pub iterations_right: usize,
    pub bracket_left: (f64, f64),
    pub bracket_right: (f64, f64),
    pub fallback_left: bool,
    pub fallback_right: bool,
    pub outer_sweeps: usize,
}

impl SolveReport {
    pub fn support(&self) -> Result<SupportInterval> {
        SupportInterval::new(self.l_hat, self.u_hat)
    }
}

/// Targets `(1/(n+1), n/(n+1))`.
pub fn targets(n: usize) -> (f64, f64) {
    let n = n as f64;
    (1.0 / (n + 1.0), n / (n + 1.0))
}

/// `1 − n⁻¹ Σ W((Xᵢ − X₍ₙ₎)/d)` for `d = u − X₍ₙ₎ > 0`; the limit `1 − k/(2n)`
/// (k tied maxima) at `d = 0`.
fn bk_upper_by_offset(values: &[f64], kernel: Kernel, d: f64) -> f64 {
    let n = values.len() as f64;
    let max = values[values.len() - 1];
    if d <= 0.0 {
        let ties = values.iter().rev().take_while(|&&v| v == max).count() as f64;
        return 1.0 - ties * kernel.w(0.0) / n;
    }
    let reach = kernel.support_radius() * d;
    let start = if reach.is_finite() {
        values.partition_point(|&v| v < max - reach)
    } else {
        0
    };
    let s: f64 = values[start..].iter().map(|&v| kernel.w((v - max) / d)).sum();
    1.0 - s / n
}

/// `n⁻¹ Σ W((X₍₁₎ − Xᵢ)/d)` for `d = X₍₁₎ − l > 0`; the limit `k/(2n)` at `d = 0`.
fn bk_lower_by_offset(values: &[f64], kernel: Kernel, d: f64) -> f64 {
    let n = values.len() as f64;
    let min = values[0];
    if d <= 0.0 {
        let ties = values.iter().take_while(|&&v| v == min).count() as f64;
        return ties * kernel.w(0.0) / n;
    }
    let reach = kernel.support_radius() * d;
    let end = if reach.is_finite() {
        values.partition_point(|&v| v <= min + reach)
    } else {
        values.len()
    };
    let s: f64 = values[..end].iter().map(|&v| kernel.w((min - v) / d)).sum();
    s / n
}

/// Boundary-kernel right objective `F̂^{[BK,u]}_u(X₍ₙ₎)` as a function of `u ≥ X₍ₙ₎`.
pub fn boundary_kernel_upper_objective(sample: &Sample, kernel: Kernel, u: f64) -> f64 {
    bk_upper_by_offset(sample.values(), kernel, u - sample.max())
}

/// Boundary-kernel left objective `F̂^{[BK,l]}_l(X₍₁₎)` as a function of `l ≤ X₍₁₎`.
pub fn boundary_kernel_lower_objective(sample: &Sample, kernel: Kernel, l: f64) -> f64 {
    bk_lower_by_offset(sample.values(), kernel, sample.min() - l)
}

/// Reflection cdf on `[l, u]` evaluated at `x`, unclamped.
fn reflection_cdf(naive: &FittedEstimator, l: f64, u: f64, x: f64) -> f64 {
    (naive.naive_cdf(x) - naive.naive_cdf(2.0 * l - x))
        + (naive.naive_cdf(2.0 * u - l) - naive.naive_cdf(2.0 * u - x))
}

/// Reflection right objective `F̂^{[R]}_{l,u}(X₍ₙ₎)`.
pub fn reflection_upper_objective(sample: &Sample, h: f64, kernel: Kernel, l: f64, u: f64) -> Result<f64> {
    let naive = FittedEstimator::naive(sample.clone(), h, kernel)?;
    Ok(reflection_cdf(&naive, l, u, sample.max()))
}

/// Reflection left objective `F̂^{[R]}_{l,u}(X₍₁₎)`.
pub fn reflection_lower_objective(sample: &Sample, h: f64, kernel: Kernel, l: f64, u: f64) -> Result<f64> {
    let naive = FittedEstimator::naive(sample.clone(), h, kernel)?;
    Ok(reflection_cdf(&naive, l, u, sample.min()))
}

struct Root {
    at: f64,
    residual: f64,
    iterations: usize,
    bracket: (f64, f64),
}

/// Bisection for `phi(d) = target` on `[lo, hi]`, given that `phi − target`
/// changes sign across the bracket. Runs to full floating-point resolution and
/// then checks the residual against `tol`.
fn bisect<F: Fn(f64) -> f64>(
    phi: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    opts: &SolverOptions,
) -> Result<Root> {
    let r_lo = phi(lo) - target;
    let r_hi = phi(hi) - target;
    if r_lo == 0.0 {
        return Ok(Root { at: lo, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if r_hi == 0.0 {
        return Ok(Root { at: hi, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    let lo_positive = r_lo > 0.0;
    if lo_positive == (r_hi > 0.0) {
        return Err(Error::Numeric {
            message: "bracket does not straddle the target".into(),
            iterations: 0,
            lo,
            hi,
            residual: r_lo,
        });
    }
    let mut best = if r_lo.abs() < r_hi.abs() { (lo, r_lo) } else { (hi, r_hi) };
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let r = phi(mid) - target;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r == 0.0 {
            break;
        }
        if (r > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.1.abs() >= opts.tol {
        return Err(Error::Numeric {
            message: "bisection did not reach the residual tolerance".into(),
            iterations,
            lo,
            hi,
            residual: best.1,
        });
    }
    Ok(Root { at: best.0, residual: best.1, iterations, bracket: (lo, hi) })
}

/// One side of a solve, expressed in offset coordinates.
struct Side {
    offset: f64,
    residual: f64,
    iterations: usize,
    bracket: (f64, f64),
    fallback: bool,
}

impl Side {
    fn fixed() -> Self {
        Side { offset: 0.0, residual: 0.0, iterations: 0, bracket: (0.0, 0.0), fallback: false }
    }
}

fn solve_bk_side<F: Fn(f64) -> f64>(phi: F, target: f64, h: f64, opts: &SolverOptions) -> Result<Side> {
    // phi is decreasing (upper) or increasing (lower) in the offset; both expressed as
    // "distance from target changes sign between d → 0 and d → ∞".
    let at_zero = phi(0.0) - target;
    let mut range = h;
    let mut doublings = 0;
    while (phi(range) - target).signum() == at_zero.signum() {
        if at_zero == 0.0 {
            break;
        }
        range *= 2.0;
        doublings += 1;
        if !range.is_finite() || doublings > 2100 {
            // Target outside the objective's range (tied extremes): keep the sample extreme.
            return Ok(Side {
                offset: 0.0,
                residual: at_zero,
                iterations: 0,
                bracket: (0.0, 0.0),
                fallback: true,
            });
        }
    }
    let root = bisect(&phi, 0.0, range, target, opts)?;
    Ok(Side {
        offset: root.at,
        residual: root.residual,
        iterations: root.iterations,
        bracket: root.bracket,
        fallback: false,
    })
}

fn solve_reflection_side<F: Fn(f64) -> f64>(phi: F, target: f64, h: f64, opts: &SolverOptions) -> Result<Side> {
    let r0 = phi(0.0) - target;
    let rh = phi(h) - target;
    if r0 != 0.0 && rh != 0.0 && (r0 > 0.0) == (rh > 0.0) {
        return Ok(Side {
            offset: 0.0,
            residual: r0,
            iterations: 0,
            bracket: (0.0, h),
            fallback: true,
        });
    }
    let root = bisect(&phi, 0.0, h, target, opts)?;
    Ok(Side {
        offset: root.at,
        residual: root.residual,
        iterations: root.iterations,
        bracket: root.bracket,
        fallback: false,
    })
}

fn check_inputs(sample: &Sample, h: f64, kernel: Kernel, method: Method, opts: &SolverOptions) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("bandwidth must be positive and finite, got {h}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    match method {
        Method::Naive => {
            return Err(Error::Config("the naive estimator has no support to solve".into()));
        }
        Method::BoundaryKernel if !kernel.is_compact() => {
            return Err(Error::Config(
                "the boundary-kernel method needs a compactly supported kernel".into(),
            ));
        }
        _ => {}
    }
    let range = sample.max() - sample.min();
    if h > range / 2.0 {
        return Err(Error::Config(format!(
            "bandwidth {h} exceeds half the sample range {}",
            range / 2.0
        )));
    }
    Ok(())
}

/// Solves for the unknown support endpoints.
pub fn solve_support(
    sample: &Sample,
    h: f64,
    kernel: Kernel,
    method: Method,
    mode: SupportMode,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_inputs(sample, h, kernel, method, opts)?;
    let (min, max) = (sample.min(), sample.max());
    let (known_lower, known_upper) = match mode {
        SupportMode::Known { .. } => {
            return Err(Error::Config("a known support needs no solve".into()));
        }
        SupportMode::Extremes => return extremes_report(sample, h, kernel, method),
        SupportMode::Proposed => (None, None),
        SupportMode::HalfKnownLower { lower } => (Some(lower), None),
        SupportMode::HalfKnownUpper { upper } => (None, Some(upper)),
    };
    if let Some(l0) = known_lower {
        if l0 > min {
            return Err(Error::Domain(format!("known lower endpoint {l0} exceeds the sample minimum {min}")));
        }
        if max - l0 < 2.0 * h {
            return Err(Error::Config("bandwidth exceeds half the support width".into()));
        }
    }
    if let Some(u0) = known_upper {
        if u0 < max {
            return Err(Error::Domain(format!("known upper endpoint {u0} is below the sample maximum {max}")));
        }
    }
    let (t_lo, t_hi) = targets(sample.len());
    let values = sample.values();

    let (left, right, sweeps) = match method {
        Method::BoundaryKernel => {
            let right = match known_upper {
                Some(_) => Side::fixed(),
                None => solve_bk_side(|d| bk_upper_by_offset(values, kernel, d), t_hi, h, opts)?,
            };
            let left = match known_lower {
                Some(_) => Side::fixed(),
                None => solve_bk_side(|d| bk_lower_by_offset(values, kernel, d), t_lo, h, opts)?,
            };
            (left, right, 1)
        }
        Method::Reflection => {
            let naive = FittedEstimator::naive(sample.clone(), h, kernel)?;
            let mut l = known_lower.unwrap_or(min);
            let mut u = known_upper.unwrap_or(max);
            let mut left = Side::fixed();
            let mut right = Side::fixed();
            let mut iters = (0, 0);
            let mut sweeps = 0;
            while sweeps < opts.max_sweeps {
                sweeps += 1;
                let (l_prev, u_prev) = (l, u);
                if known_upper.is_none() {
                    right = solve_reflection_side(
                        |d| reflection_cdf(&naive, l, max + d, max),
                        t_hi,
                        h,
                        opts,
                    )?;
                    iters.1 += right.iterations;
                    u = max + right.offset;
                }
                if known_lower.is_none() {
                    left = solve_reflection_side(
                        |d| reflection_cdf(&naive, min - d, u, min),
                        t_lo,
                        h,
                        opts,
                    )?;
                    iters.0 += left.iterations;
                    l = min - left.offset;
                }
                if (l - l_prev).abs() < opts.tol && (u - u_prev).abs() < opts.tol {
                    break;
                }
            }
            left.iterations = iters.0;
            right.iterations = iters.1;
            (left, right, sweeps)
        }
        Method::Naive => unreachable!("rejected by check_inputs"),
    };

    let l_hat = known_lower.unwrap_or(min - left.offset);
    let u_hat = known_upper.unwrap_or(max + right.offset);
    let bracket_left = match known_lower {
        Some(l0) => (l0, l0),
        None => (min - left.bracket.1, min - left.bracket.0),
    };
    let bracket_right = match known_upper {
        Some(u0) => (u0, u0),
        None => (max + right.bracket.0, max + right.bracket.1),
    };
    Ok(SolveReport {
        l_hat,
        u_hat,
        residual_left: left.residual,
        residual_right: right.residual,
        iterations_left: left.iterations,
        iterations_right: right.iterations,
        bracket_left,
        bracket_right,
        fallback_left: left.fallback,
        fallback_right: right.fallback,
        outer_sweeps: sweeps,
    })
}

fn extremes_report(sample: &Sample, h: f64, kernel: Kernel, method: Method) -> Result<SolveReport> {
    let (min, max) = (sample.min(), sample.max());
    let est = FittedEstimator::with_method(method, sample.clone(), h, kernel, SupportInterval::new(min, max)?)?;
    Ok(SolveReport {
        l_hat: min,
        u_hat: max,
        residual_left: est.cdf(min),
        residual_right: est.cdf(max) - 1.0,
        iterations_left: 0,
        iterations_right: 0,
        bracket_left: (min, min),
        bracket_right: (max, max),
        fallback_left: false,
        fallback_right: false,
        outer_sweeps: 0,
    })
}

/// Resolves the support for `method` under `mode` and fits the estimator on it.
///
/// The naive estimator takes no mode and gets an unbounded support; a known
/// support is used as is and yields no report.
pub fn fit(
    sample: Sample,
    h: f64,
    kernel: Kernel,
    method: Method,
    mode: Option<SupportMode>,
    opts: &SolverOptions,
) -> Result<(FittedEstimator, Option<SolveReport>)> {
    match (method, mode) {
        (Method::Naive, None) => Ok((FittedEstimator::naive(sample, h, kernel)?, None)),
        (Method::Naive, Some(_)) => Err(Error::Config("the naive estimator takes no support mode".into())),
        (_, None) => Err(Error::Config(format!("method {method} needs a support mode"))),
        (_, Some(SupportMode::Known { lower, upper })) => {
            let support = SupportInterval::new(lower, upper)?;
            Ok((FittedEstimator::with_method(method, sample, h, kernel, support)?, None))
        }
        (_, Some(mode)) => {
            let report = solve_support(&sample, h, kernel, method, mode, opts)?;
            let est = FittedEstimator::with_method(method, sample, h, kernel, report.support()?)?;
            Ok((est, Some(report)))
        }
    }
}

//! One-dimensional kernel estimators of a density and its distribution function.
//!
//! Three methods are provided:
//!
//! * **naive**: the plain kernel estimator, `f̂(x) = (nh)⁻¹ Σ K((x − Xᵢ)/h)`
//!   and `F̂(x) = n⁻¹ Σ W((x − Xᵢ)/h)`;
//! * **reflection**: mirror images of the sample across both support endpoints
//!   are added to the naive density;
//! * **boundary kernel**: within distance `h` of an endpoint the kernel scale
//!   shrinks to the distance from that endpoint, giving a piecewise CDF whose
//!   derivative is the density estimate.
//!
//! Corrected estimators are defined on their support `[l, u]`; outside it the
//! pdf is 0 and the cdf is clamped to 0 or 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::sample::{Sample, SupportInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Naive,
    Reflection,
    BoundaryKernel,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Reflection => "reflection",
            Method::BoundaryKernel => "boundary-kernel",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "reflection" | "r" => Ok(Method::Reflection),
            "boundary-kernel" | "boundary_kernel" | "bk" => Ok(Method::BoundaryKernel),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// One grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub pdf: f64,
    pub cdf: f64,
}

/// A fitted estimator: immutable, cheap to evaluate from many threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEstimator {
    method: Method,
    kernel: Kernel,
    bandwidth: f64,
    support: SupportInterval,
    sample: Sample,
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("bandwidth must be positive and finite, got {h}")));
    }
    Ok(())
}

fn check_bounded(sample: &Sample, h: f64, support: SupportInterval) -> Result<()> {
    check_bandwidth(h)?;
    if !support.is_bounded() {
        return Err(Error::Config("corrected estimators need a bounded support".into()));
    }
    if sample.min() < support.lower() || sample.max() > support.upper() {
        return Err(Error::Domain(format!(
            "sample range [{}, {}] is not inside the support [{}, {}]",
            sample.min(),
            sample.max(),
            support.lower(),
            support.upper()
        )));
    }
    if h > support.width() / 2.0 {
        return Err(Error::Config(format!(
            "bandwidth {h} exceeds half the support width {}",
            support.width() / 2.0
        )));
    }
    Ok(())
}

impl FittedEstimator {
    pub fn naive(sample: Sample, h: f64, kernel: Kernel) -> Result<Self> {
        check_bandwidth(h)?;
        Ok(Self {
            method: Method::Naive,
            kernel,
            bandwidth: h,
            support: SupportInterval::unbounded(),
            sample,
        })
    }

    pub fn reflection(sample: Sample, h: f64, kernel: Kernel, support: SupportInterval) -> Result<Self> {
        check_bounded(&sample, h, support)?;
        Ok(Self {
            method: Method::Reflection,
            kernel,
            bandwidth: h,
            support,
            sample,
        })
    }

    pub fn boundary_kernel(
        sample: Sample,
        h: f64,
        kernel: Kernel,
        support: SupportInterval,
    ) -> Result<Self> {
        if !kernel.is_compact() {
            return Err(Error::Config(
                "the boundary-kernel method needs a compactly supported kernel".into(),
            ));
        }
        check_bounded(&sample, h, support)?;
        Ok(Self {
            method: Method::BoundaryKernel,
            kernel,
            bandwidth: h,
            support,
            sample,
        })
    }

    /// Dispatch on `method`; `support` is ignored for the naive estimator.
    pub fn with_method(
        method: Method,
        sample: Sample,
        h: f64,
        kernel: Kernel,
        support: SupportInterval,
    ) -> Result<Self> {
        match method {
            Method::Naive => Self::naive(sample, h, kernel),
            Method::Reflection => Self::reflection(sample, h, kernel, support),
            Method::BoundaryKernel => Self::boundary_kernel(sample, h, kernel, support),
        }
    }

    /// Re-checks the invariants of a deserialized estimator.
    pub fn validate(self) -> Result<Self> {
        let FittedEstimator {
            method,
            kernel,
            bandwidth,
            support,
            sample,
        } = self;
        Self::with_method(method, sample, bandwidth, kernel, support)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    /// Indices `[lo, hi)` of observations within `radius · scale` of `x`.
    #[inline]
    fn window(&self, x: f64, scale: f64) -> (usize, usize) {
        let v = self.sample.values();
        let reach = self.kernel.support_radius() * scale;
        if !reach.is_finite() {
            return (0, v.len());
        }
        let lo = v.partition_point(|&xi| xi < x - reach);
        let hi = v.partition_point(|&xi| xi <= x + reach);
        (lo, hi.max(lo))
    }

    /// `n⁻¹ Σ W((x − Xᵢ)/s)`.
    fn smooth_cdf(&self, x: f64, s: f64) -> f64 {
        let v = self.sample.values();
        let (lo, hi) = self.window(x, s);
        let inside: f64 = v[lo..hi].iter().map(|&xi| self.kernel.w((x - xi) / s)).sum();
        // Observations left of the window contribute W = 1.
        (lo as f64 + inside) / v.len() as f64
    }

    /// `(ns)⁻¹ Σ K((x − Xᵢ)/s)`.
    fn smooth_pdf(&self, x: f64, s: f64) -> f64 {
        let v = self.sample.values();
        let (lo, hi) = self.window(x, s);
        let sum: f64 = v[lo..hi].iter().map(|&xi| self.kernel.k((x - xi) / s)).sum();
        sum / (v.len() as f64 * s)
    }

    /// The naive distribution estimator `F̂` at this bandwidth, whatever the method.
    pub fn naive_cdf(&self, x: f64) -> f64 {
        self.smooth_cdf(x, self.bandwidth)
    }

    /// The naive density estimator `f̂` at this bandwidth, whatever the method.
    pub fn naive_pdf(&self, x: f64) -> f64 {
        self.smooth_pdf(x, self.bandwidth)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let (l, u) = (self.support.lower(), self.support.upper());
        match self.method {
            Method::Naive => self.naive_pdf(x),
            Method::Reflection => {
                if x < l || x > u {
                    return 0.0;
                }
                self.naive_pdf(x) + self.naive_pdf(2.0 * u - x) + self.naive_pdf(2.0 * l - x)
            }
            Method::BoundaryKernel => {
                if x <= l || x >= u {
                    0.0
                } else if x < l + h {
                    self.bk_left_pdf(x)
                } else if x < u - h {
                    self.naive_pdf(x)
                } else {
                    self.bk_right_pdf(x)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let (l, u) = (self.support.lower(), self.support.upper());
        match self.method {
            Method::Naive => self.naive_cdf(x),
            Method::Reflection => {
                if x <= l {
                    return 0.0;
                }
                if x > u {
                    return 1.0;
                }
                // Grouped so that x = l cancels exactly.
                let v = (self.naive_cdf(x) - self.naive_cdf(2.0 * l - x))
                    + (self.naive_cdf(2.0 * u - l) - self.naive_cdf(2.0 * u - x));
                v.clamp(0.0, 1.0)
            }
            Method::BoundaryKernel => {
                if x < l {
                    0.0
                } else if x == l {
                    // Right limit of the left piece: only observations sitting on l survive.
                    let ties = self.sample.values().partition_point(|&xi| xi <= l);
                    ties as f64 * self.kernel.w(1.0) / self.sample.len() as f64
                } else if x < l + h {
                    self.smooth_cdf(x, x - l)
                } else if x < u - h {
                    self.naive_cdf(x)
                } else if x < u {
                    // 1 − n⁻¹ Σ W((Xᵢ − x)/(u − x)), rewritten through W(−z) = 1 − W(z).
                    self.smooth_cdf(x, u - x)
                } else {
                    1.0
                }
            }
        }
    }

    fn bk_left_pdf(&self, x: f64) -> f64 {
        let l = self.support.lower();
        let s = x - l;
        let v = self.sample.values();
        let (lo, hi) = self.window(x, s);
        let sum: f64 = v[lo..hi]
            .iter()
            .map(|&xi| self.kernel.k((x - xi) / s) * (xi - l))
            .sum();
        sum / (v.len() as f64 * s * s)
    }

    fn bk_right_pdf(&self, x: f64) -> f64 {
        let u = self.support.upper();
        let s = u - x;
        let v = self.sample.values();
        let (lo, hi) = self.window(x, s);
        let sum: f64 = v[lo..hi]
            .iter()
            .map(|&xi| self.kernel.k((xi - x) / s) * (u - xi))
            .sum();
        sum / (v.len() as f64 * s * s)
    }

    /// Contribution of a single observation `xi` to `cdf(x)`; the estimator's
    /// cdf is the average of these over its sample.
    pub fn observation_cdf(&self, x: f64, xi: f64) -> f64 {
        let h = self.bandwidth;
        let (l, u) = (self.support.lower(), self.support.upper());
        let w = |z: f64| self.kernel.w(z);
        match self.method {
            Method::Naive => w((x - xi) / h),
            Method::Reflection => {
                if x <= l {
                    0.0
                } else if x > u {
                    1.0
                } else {
                    let v = (w((x - xi) / h) - w((2.0 * l - x - xi) / h))
                        + (w((2.0 * u - l - xi) / h) - w((2.0 * u - x - xi) / h));
                    v.clamp(0.0, 1.0)
                }
            }
            Method::BoundaryKernel => {
                if x < l {
                    0.0
                } else if x == l {
                    if xi <= l {
                        w(1.0)
                    } else {
                        0.0
                    }
                } else if x < l + h {
                    w((x - xi) / (x - l))
                } else if x < u - h {
                    w((x - xi) / h)
                } else if x < u {
                    w((x - xi) / (u - x))
                } else {
                    1.0
                }
            }
        }
    }

    /// Contribution of a single observation `xi` to `pdf(x)`.
    pub fn observation_pdf(&self, x: f64, xi: f64) -> f64 {
        let h = self.bandwidth;
        let (l, u) = (self.support.lower(), self.support.upper());
        let k = |z: f64| self.kernel.k(z);
        match self.method {
            Method::Naive => k((x - xi) / h) / h,
            Method::Reflection => {
                if x < l || x > u {
                    0.0
                } else {
                    (k((x - xi) / h) + k((x + xi - 2.0 * u) / h) + k((x + xi - 2.0 * l) / h)) / h
                }
            }
            Method::BoundaryKernel => {
                if x <= l || x >= u {
                    0.0
                } else if x < l + h {
                    let s = x - l;
                    k((x - xi) / s) * (xi - l) / (s * s)
                } else if x < u - h {
                    k((x - xi) / h) / h
                } else {
                    let s = u - x;
                    k((xi - x) / s) * (u - xi) / (s * s)
                }
            }
        }
    }

    /// Points where the pdf may jump: support endpoints and boundary-kernel seams.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (l, u) = (self.support.lower(), self.support.upper());
        let h = self.bandwidth;
        match self.method {
            Method::Naive => Vec::new(),
            Method::Reflection => vec![l, u],
            Method::BoundaryKernel => vec![l, l + h, u - h, u],
        }
    }

    pub fn evaluate_grid(&self, grid: &[f64]) -> Vec<GridPoint> {
        grid.iter()
            .map(|&x| GridPoint {
                x,
                pdf: self.pdf(x),
                cdf: self.cdf(x),
            })
            .collect()
    }
}

pub fn fit_naive(sample: Sample, h: f64, kernel: Kernel) -> Result<FittedEstimator> {
    FittedEstimator::naive(sample, h, kernel)
}

pub fn fit_reflection(
    sample: Sample,
    h: f64,
    kernel: Kernel,
    support: SupportInterval,
) -> Result<FittedEstimator> {
    FittedEstimator::reflection(sample, h, kernel, support)
}

pub fn fit_boundary_kernel(
    sample: Sample,
    h: f64,
    kernel: Kernel,
    support: SupportInterval,
) -> Result<FittedEstimator> {
    FittedEstimator::boundary_kernel(sample, h, kernel, support)
}

/// `count` equally spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { max } else { min + i as f64 * step })
                .collect()
        }
    }
}

//! Least-squares cross-validation for the naive estimator's bandwidth.
//!
//! `LSCV(h) = ∫ f̂² − (2/n) Σᵢ f̂₋ᵢ(Xᵢ)` is an unbiased estimate of the
//! integrated squared error up to a constant. Both terms reduce to pairwise
//! sums: `∫ f̂² = (n²h)⁻¹ Σᵢⱼ (K∗K)((Xᵢ − Xⱼ)/h)` with the kernel
//! self-convolution in closed form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::sample::Sample;

/// Strictly increasing positive bandwidth candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    candidates: Vec<f64>,
}

impl BandwidthGrid {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Config("bandwidth grid is empty".into()));
        }
        if candidates.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::Config("bandwidth candidates must be positive and finite".into()));
        }
        if candidates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("bandwidth candidates must be strictly increasing".into()));
        }
        Ok(Self { candidates })
    }

    /// `count` log-spaced candidates from `lo` to `hi`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || count == 0 {
            return Err(Error::Config(format!("invalid log grid [{lo}, {hi}] x {count}")));
        }
        if count == 1 {
            return Self::new(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        Self::new((0..count).map(|i| (a + i as f64 * step).exp()).collect())
    }

    /// 40 log-spaced candidates from `0.05 · σ̂ · n^(−1/5)` up to `σ̂`.
    ///
    /// The upper end never exceeds half the sample range, so every candidate is
    /// admissible for the boundary-corrected estimators.
    pub fn default_for(sample: &Sample) -> Result<Self> {
        let sd = sample.std_dev();
        if !(sd > 0.0) {
            return Err(Error::Domain("sample has zero variance".into()));
        }
        let pilot = sd * (sample.len() as f64).powf(-0.2);
        let range = sample.max() - sample.min();
        Self::log_spaced(0.05 * pilot, sd.min(range / 2.0), 40)
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.candidates.iter().map(|h| a * h).collect())
    }
}

/// The LSCV criterion at bandwidth `h`.
pub fn lscv_score(sample: &Sample, kernel: Kernel, h: f64) -> f64 {
    let v = sample.values();
    let n = v.len() as f64;
    // Pair reach of K∗K (twice the kernel radius), in data units.
    let reach = 2.0 * kernel.support_radius() * h;
    let mut conv = 0.0;
    let mut loo = 0.0;
    for (i, &xi) in v.iter().enumerate() {
        for &xj in &v[i + 1..] {
            let d = xj - xi;
            if d > reach {
                break;
            }
            let t = d / h;
            conv += kernel.self_convolution(t);
            loo += kernel.k(t);
        }
    }
    let square_integral = (n * kernel.self_convolution(0.0) + 2.0 * conv) / (n * n * h);
    let loo_mean = 2.0 * loo / ((n - 1.0) * h * n);
    square_integral - 2.0 * loo_mean
}

/// LSCV-optimal candidate; ties go to the smaller bandwidth.
pub fn lscv_bandwidth(sample: &Sample, kernel: Kernel, grid: &BandwidthGrid) -> Result<f64> {
    if sample.len() < 3 {
        return Err(Error::Domain("cross-validation needs at least 3 observations".into()));
    }
    if !(sample.std_dev() > 0.0) {
        return Err(Error::Domain("sample has zero variance".into()));
    }
    let scores: Vec<f64> = grid
        .candidates()
        .par_iter()
        .map(|&h| lscv_score(sample, kernel, h))
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(grid.candidates()[best])
}

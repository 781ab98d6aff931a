//! Symmetric smoothing kernels `K` together with their distribution functions `W`.
//!
//! Every estimator in this crate is written in terms of these two functions.
//! Epanechnikov is the default: it has compact support `[-1, 1]`, which keeps
//! boundary-region computations exact.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Epanechnikov,
    Gaussian,
}

/// An immutable kernel description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Kernel {
    kind: KernelKind,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Kernel {
    pub const EPANECHNIKOV: Kernel = Kernel {
        kind: KernelKind::Epanechnikov,
    };
    pub const GAUSSIAN: Kernel = Kernel {
        kind: KernelKind::Gaussian,
    };

    pub fn new(kind: KernelKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Half-width of the kernel support; infinite for the Gaussian.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            KernelKind::Epanechnikov => 1.0,
            KernelKind::Gaussian => f64::INFINITY,
        }
    }

    pub fn is_compact(&self) -> bool {
        self.support_radius().is_finite()
    }

    /// Kernel density `K(z)`. Internal hot path: no validation.
    #[inline]
    pub fn k(&self, z: f64) -> f64 {
        match self.kind {
            KernelKind::Epanechnikov => {
                if z.abs() <= 1.0 {
                    0.75 * (1.0 - z * z)
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => INV_SQRT_2PI * (-0.5 * z * z).exp(),
        }
    }

    /// Kernel distribution `W(z) = ∫_{-∞}^z K`. Accepts `±∞`.
    #[inline]
    pub fn w(&self, z: f64) -> f64 {
        match self.kind {
            KernelKind::Epanechnikov => {
                if z <= -1.0 {
                    0.0
                } else if z >= 1.0 {
                    1.0
                } else {
                    0.5 + z * (0.75 - 0.25 * z * z)
                }
            }
            // erfc keeps full relative accuracy in the lower tail.
            KernelKind::Gaussian => 0.5 * libm::erfc(-z * FRAC_1_SQRT_2),
        }
    }

    /// Self-convolution `(K * K)(t)`, used for the closed-form `∫ f̂²`.
    #[inline]
    pub fn self_convolution(&self, t: f64) -> f64 {
        match self.kind {
            KernelKind::Epanechnikov => {
                let a = t.abs();
                if a >= 2.0 {
                    0.0
                } else {
                    let r = 2.0 - a;
                    3.0 / 160.0 * r * r * r * (a * a + 6.0 * a + 4.0)
                }
            }
            KernelKind::Gaussian => 0.5 / PI.sqrt() * (-0.25 * t * t).exp(),
        }
    }

    /// Validated `K(z)`.
    pub fn eval_k(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Input(format!("kernel argument must be finite, got {z}")));
        }
        Ok(self.k(z))
    }

    /// Validated `W(z)`; infinite arguments are allowed.
    pub fn eval_w(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(Error::Input("kernel argument is NaN".into()));
        }
        Ok(self.w(z))
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Gaussian => "gaussian",
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" => Ok(Kernel::EPANECHNIKOV),
            "gaussian" => Ok(Kernel::GAUSSIAN),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

//! Kernel estimators of a density and its distribution function on a bounded
//! support, with the support endpoints estimated from the same sample.
//!
//! Start with [`fit`]: it takes a [`Sample`], a bandwidth, a [`Kernel`], a
//! [`Method`] and (for the boundary-corrected methods) a [`SupportMode`], and
//! returns a [`FittedEstimator`] plus the solver report.
//!
//! ```
//! use boundary_kde::{fit, Kernel, Method, Sample, SolverOptions, SupportMode};
//!
//! # fn main() -> boundary_kde::Result<()> {
//! let sample = Sample::new(vec![0.12, 0.31, 0.44, 0.58, 0.73, 0.91])?;
//! let (est, report) = fit(
//!     sample,
//!     0.2,
//!     Kernel::EPANECHNIKOV,
//!     Method::BoundaryKernel,
//!     Some(SupportMode::Proposed),
//!     &SolverOptions::default(),
//! )?;
//! let report = report.expect("estimated support");
//! assert!(report.l_hat < 0.12 && report.u_hat > 0.91);
//! assert!(est.pdf(0.5) > 0.0 && est.cdf(0.5) > 0.0 && est.cdf(0.5) < 1.0);
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod cli;
pub mod error;
pub mod joint;
pub mod kernel;
pub mod quadrature;
pub mod sample;
pub mod simulation;
pub mod support;
pub mod univariate;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelKind};
pub use sample::{Sample, SupportInterval};
pub use univariate::{FittedEstimator, GridPoint, Method};
pub use support::{fit, solve_support, SolveReport, SolverOptions, SupportMode};
pub use bandwidth::{lscv_bandwidth, BandwidthGrid};
pub use joint::{fit_joint, JointEstimator, MultiSample};

//! Joint cdf and pdf on an estimated hyper-rectangle, built from
//! per-coordinate boundary-corrected marginals combined in product form.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::sample::{Sample, SupportInterval};
use crate::support::{fit, SolveReport, SolverOptions, SupportMode};
use crate::univariate::{FittedEstimator, Method};

/// `n` observations of `d` coordinates, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSample {
    columns: Vec<Vec<f64>>,
}

impl MultiSample {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::Input("multivariate sample needs at least one row and one column".into()));
        }
        if rows.len() < 2 {
            return Err(Error::Input(format!("sample needs at least 2 rows, got {}", rows.len())));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Input(format!("row {} has {} values, expected {d}", i + 1, row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Input(format!("row {}, column {}: non-finite value", i + 1, j + 1)));
                }
                columns[j].push(v);
            }
        }
        Ok(Self { columns })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Coordinate `j` in row order.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

/// How marginal terms are combined across coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    #[default]
    ProductType,
}

#[derive(Debug, Clone, Serialize)]
pub struct Marginal {
    pub estimator: FittedEstimator,
    pub report: Option<SolveReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointEstimator {
    marginals: Vec<Marginal>,
    combiner: Combiner,
    #[serde(skip)]
    data: MultiSample,
}

/// Fits every coordinate with the univariate pipeline and combines them.
pub fn fit_joint(
    data: MultiSample,
    bandwidths: &[f64],
    kernel: Kernel,
    method: Method,
    modes: &[SupportMode],
    opts: &SolverOptions,
) -> Result<JointEstimator> {
    let d = data.dim();
    if bandwidths.len() != d || modes.len() != d {
        return Err(Error::Config(format!(
            "data has {d} coordinates but {} bandwidths and {} modes were given",
            bandwidths.len(),
            modes.len()
        )));
    }
    if method == Method::Naive {
        return Err(Error::Config("joint estimation needs a boundary-corrected method".into()));
    }
    let marginals = (0..d)
        .into_par_iter()
        .map(|j| {
            let sample = Sample::new(data.column(j).to_vec())?;
            let (estimator, report) = fit(sample, bandwidths[j], kernel, method, Some(modes[j]), opts)?;
            Ok(Marginal { estimator, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointEstimator { marginals, combiner: Combiner::ProductType, data })
}

impl JointEstimator {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn marginal(&self, j: usize) -> &FittedEstimator {
        &self.marginals[j].estimator
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    /// The estimated rectangle as one interval per coordinate.
    pub fn rectangle(&self) -> Vec<SupportInterval> {
        self.marginals.iter().map(|m| m.estimator.support()).collect()
    }

    pub fn upper_corner(&self) -> Vec<f64> {
        self.rectangle().iter().map(SupportInterval::upper).collect()
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        self.rectangle().iter().map(SupportInterval::lower).collect()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Config(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("evaluation point must be finite".into()));
        }
        Ok(())
    }

    fn average<F: Fn(&FittedEstimator, f64, f64) -> f64>(&self, x: &[f64], term: F) -> f64 {
        let n = self.data.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut prod = 1.0;
            for (j, m) in self.marginals.iter().enumerate() {
                prod *= term(&m.estimator, x[j], self.data.column(j)[i]);
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
        sum / n as f64
    }

    pub fn cdf(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.average(x, FittedEstimator::observation_cdf).clamp(0.0, 1.0))
    }

    /// Zero outside the estimated rectangle.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        if self.rectangle().iter().zip(x).any(|(r, &v)| !r.contains(v)) {
            return Ok(0.0);
        }
        Ok(self.average(x, FittedEstimator::observation_pdf))
    }

    /// `(point, pdf, cdf)` at each of `points`.
    pub fn evaluate_points(&self, points: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, f64, f64)>> {
        points
            .par_iter()
            .map(|p| Ok((p.clone(), self.pdf(p)?, self.cdf(p)?)))
            .collect()
    }
}

/// Cartesian product of per-axis grids, last coordinate varying fastest.
pub fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{beta_draws, replication_rng, BetaDist};
    use crate::univariate::linspace;
    use proptest::prelude::*;

    const E: Kernel = Kernel::EPANECHNIKOV;

    fn known() -> SupportMode {
        SupportMode::Known { lower: 0.0, upper: 1.0 }
    }

    fn independent_uniform(n: usize, seed: u64) -> MultiSample {
        let mut rng = replication_rng(seed, 0);
        let dist = BetaDist { p: 1.0, q: 1.0 };
        let a = beta_draws(&mut rng, dist, n);
        let b = beta_draws(&mut rng, dist, n);
        let rows: Vec<Vec<f64>> = a.into_iter().zip(b).map(|(x, y)| vec![x, y]).collect();
        MultiSample::from_rows(&rows).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MultiSample::from_rows(&[]).is_err());
        assert!(MultiSample::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(MultiSample::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(MultiSample::from_rows(&[vec![1.0], vec![f64::NAN]]).is_err());
        let data = MultiSample::from_rows(&[vec![0.2, 0.3], vec![0.4, 0.6]]).unwrap();
        let opts = SolverOptions::default();
        let err = fit_joint(data.clone(), &[0.1], E, Method::Reflection, &[known(), known()], &opts);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = fit_joint(data.clone(), &[0.1, 0.1], E, Method::Naive, &[known(), known()], &opts);
        assert!(matches!(err, Err(Error::Config(_))));
        let est = fit_joint(data, &[0.1, 0.1], E, Method::Reflection, &[known(), known()], &opts).unwrap();
        assert!(matches!(est.cdf(&[0.5]), Err(Error::Config(_))));
        assert!(matches!(est.pdf(&[0.5, f64::INFINITY]), Err(Error::Input(_))));
    }

    #[test]
    fn one_coordinate_reduces_to_univariate() {
        let v = [0.12, 0.3, 0.33, 0.5, 0.71, 0.9];
        let rows: Vec<Vec<f64>> = v.iter().map(|&x| vec![x]).collect();
        let opts = SolverOptions::default();
        for method in [Method::Reflection, Method::BoundaryKernel] {
            let est = fit_joint(MultiSample::from_rows(&rows).unwrap(), &[0.15], E, method, &[SupportMode::Proposed], &opts)
                .unwrap();
            let m = est.marginal(0);
            for x in linspace(-0.1, 1.1, 97) {
                assert!((est.cdf(&[x]).unwrap() - m.cdf(x)).abs() < 1e-12, "{method} cdf at {x}");
                assert!((est.pdf(&[x]).unwrap() - m.pdf(x)).abs() < 1e-12, "{method} pdf at {x}");
            }
        }
    }

    #[test]
    fn product_of_reflection_terms_at_center() {
        let data = MultiSample::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let est = fit_joint(data, &[0.3, 0.3], E, Method::Reflection, &[known(), known()], &SolverOptions::default())
            .unwrap();
        assert!((est.pdf(&[0.5, 0.5]).unwrap() - 6.25).abs() < 1e-12);
        assert_eq!(est.pdf(&[1.2, 0.5]).unwrap(), 0.0);
        assert_eq!(est.cdf(&[-0.1, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn reflection_cdf_saturates_at_upper_corner() {
        let data = independent_uniform(80, 4);
        let modes = [SupportMode::Proposed, SupportMode::Proposed];
        let est = fit_joint(data, &[0.12, 0.1], E, Method::Reflection, &modes, &SolverOptions::default()).unwrap();
        assert!((est.cdf(&est.upper_corner()).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(est.cdf(&est.lower_corner()).unwrap(), 0.0);
    }

    #[test]
    fn pdf_matches_mixed_difference_of_cdf() {
        let data = independent_uniform(40, 8);
        let modes = [SupportMode::Proposed, SupportMode::Proposed];
        for method in [Method::Reflection, Method::BoundaryKernel] {
            let est = fit_joint(data.clone(), &[0.2, 0.2], E, method, &modes, &SolverOptions::default()).unwrap();
            let step = 1e-5;
            for &(x, y) in &[(0.41, 0.52), (0.63, 0.37), (0.5, 0.5)] {
                let c = |a: f64, b: f64| est.cdf(&[a, b]).unwrap();
                let mixed = (c(x + step, y + step) - c(x + step, y - step) - c(x - step, y + step)
                    + c(x - step, y - step))
                    / (4.0 * step * step);
                let pdf = est.pdf(&[x, y]).unwrap();
                assert!((mixed - pdf).abs() < 1e-3 * pdf.max(1.0), "{method} at ({x}, {y}): {mixed} vs {pdf}");
            }
        }
    }

    #[test]
    fn independent_coordinates_factorize() {
        let data = independent_uniform(500, 21);
        let modes = [SupportMode::Proposed, SupportMode::Proposed];
        let est = fit_joint(data, &[0.1, 0.1], E, Method::Reflection, &modes, &SolverOptions::default()).unwrap();
        let grid = linspace(0.0, 1.0, 21);
        let mut worst: f64 = 0.0;
        for &x in &grid {
            for &y in &grid {
                let joint = est.cdf(&[x, y]).unwrap();
                let prod = est.marginal(0).cdf(x) * est.marginal(1).cdf(y);
                worst = worst.max((joint - prod).abs());
            }
        }
        assert!(worst <= 0.1, "max deviation {worst}");
    }

    #[test]
    fn tensor_grid_order() {
        let g = tensor_grid(&[vec![0.0, 1.0], vec![2.0, 3.0, 4.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![0.0, 3.0]);
        assert_eq!(g[3], vec![1.0, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn marginalization_and_monotonicity(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 6..30),
            h in 0.05f64..0.3,
            xs in prop::collection::vec(-0.2f64..1.2, 8),
            bk in any::<bool>(),
        ) {
            let data = MultiSample::from_rows(&rows).unwrap();
            prop_assume!((0..2).all(|j| {
                let c = data.column(j);
                let (lo, hi) = c.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
                hi - lo >= 2.0 * h
            }));
            let method = if bk { Method::BoundaryKernel } else { Method::Reflection };
            let modes = [SupportMode::Proposed, SupportMode::Extremes];
            let est = fit_joint(data, &[h, h], E, method, &modes, &SolverOptions::default()).unwrap();
            let above = est.upper_corner().iter().map(|u| u + 1.0).collect::<Vec<_>>();
            let mut prev = 0.0;
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            for &x in &sorted {
                let c0 = est.cdf(&[x, above[1]]).unwrap();
                let c1 = est.cdf(&[above[0], x]).unwrap();
                prop_assert!((c0 - est.marginal(0).cdf(x)).abs() < 1e-12);
                prop_assert!((c1 - est.marginal(1).cdf(x)).abs() < 1e-12);
                let diag = est.cdf(&[x, x]).unwrap();
                prop_assert!(diag >= prev - 1e-15);
                prev = diag;
                prop_assert!(est.pdf(&[x, 1.0 - x]).unwrap() >= 0.0);
            }
        }
    }
}

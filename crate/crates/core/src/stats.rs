//! Weighted point sets and their intrinsic sample statistics.

use crate::error::{Error, Result};
use crate::linalg::{check_square, check_symmetric, min_eigenvalue, symmetrize, Matrix, Vector, PSD_FLOOR};
use crate::manifold::{log_map, tangent_basis, Manifold, ManifoldPoint};

/// Weighted point set with separate weights for the mean, the covariance and
/// the cross-covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSet {
    points: Vec<ManifoldPoint>,
    w_m: Vec<f64>,
    w_c: Vec<f64>,
    w_cc: Vec<f64>,
}

impl WeightedSet {
    pub fn new(points: Vec<ManifoldPoint>, w_m: Vec<f64>, w_c: Vec<f64>, w_cc: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty weighted set".into()));
        }
        for (name, w) in [("w_m", &w_m), ("w_c", &w_c), ("w_cc", &w_cc)] {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            if let Some(i) = w.iter().position(|x| *x == 0.0 || !x.is_finite()) {
                return Err(Error::InvalidWeights(format!("{name}[{i}] = {}", w[i])));
            }
        }
        let m = points[0].manifold();
        if let Some(p) = points.iter().find(|p| p.manifold() != m) {
            return Err(Error::ManifoldMismatch {
                expected: m.to_string(),
                found: p.manifold().to_string(),
            });
        }
        Ok(Self { points, w_m, w_c, w_cc })
    }

    /// Same weights for all three families.
    pub fn uniform_family(points: Vec<ManifoldPoint>, w: Vec<f64>) -> Result<Self> {
        Self::new(points, w.clone(), w.clone(), w)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn manifold(&self) -> &Manifold {
        self.points[0].manifold()
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn w_m(&self) -> &[f64] {
        &self.w_m
    }

    pub fn w_c(&self) -> &[f64] {
        &self.w_c
    }

    pub fn w_cc(&self) -> &[f64] {
        &self.w_cc
    }

    /// Every weight family sums to one within `1e-12`.
    pub fn is_normalized(&self) -> bool {
        [&self.w_m, &self.w_c, &self.w_cc]
            .iter()
            .all(|w| (w.iter().sum::<f64>() - 1.0).abs() <= 1e-12)
    }

    /// The same weights attached to new points (e.g. images under a map).
    pub fn with_points(&self, points: Vec<ManifoldPoint>) -> Result<Self> {
        if points.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: points.len(),
            });
        }
        Self::new(points, self.w_m.clone(), self.w_c.clone(), self.w_cc.clone())
    }
}

/// Mean point and covariance expressed in `tangent_basis(mean)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomPointEstimate {
    pub mean: ManifoldPoint,
    pub cov: Matrix,
}

impl RandomPointEstimate {
    /// Checks dimension, symmetry and positive semi-definiteness.
    pub fn new(mean: ManifoldPoint, cov: Matrix) -> Result<Self> {
        check_square(&cov, mean.manifold().intrinsic_dim())?;
        check_symmetric(&cov)?;
        let lambda = min_eigenvalue(&cov);
        if lambda < PSD_FLOOR {
            return Err(Error::NotPsd {
                min_eigenvalue: lambda,
            });
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        self.mean.manifold()
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KarcherOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

fn weighted_log_sum(set: &WeightedSet, mu: &ManifoldPoint) -> Result<Vector> {
    let mut grad = Vector::zeros(mu.coords().len());
    for (p, w) in set.points.iter().zip(&set.w_m) {
        grad += log_map(mu, p)?.coords() * *w;
    }
    Ok(grad)
}

/// Karcher mean by the fixed-point iteration `μ ← exp_μ(Σ wᵢ log_μ χᵢ)`.
///
/// Starts from `init`, or from the point with the largest mean weight when
/// `init` is `None`. At least one update is always applied, so flat spaces
/// return the weighted average exactly. Stops once the gradient norm is at most
/// `opts.tol`.
pub fn karcher_mean(
    set: &WeightedSet,
    init: Option<&ManifoldPoint>,
    opts: KarcherOptions,
) -> Result<ManifoldPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut mu = match init {
        Some(p) => {
            if p.manifold() != set.manifold() {
                return Err(Error::ManifoldMismatch {
                    expected: set.manifold().to_string(),
                    found: p.manifold().to_string(),
                });
            }
            p.clone()
        }
        None => {
            let best = (0..set.len()).fold(0, |b, i| if set.w_m[i] > set.w_m[b] { i } else { b });
            set.points[best].clone()
        }
    };
    let radius = 0.5 * set.manifold().injectivity_radius();
    for (index, p) in set.points.iter().enumerate() {
        let distance = mu.distance(p)?;
        if distance >= radius {
            return Err(Error::OutsideBall {
                index,
                distance,
                radius,
            });
        }
    }
    let mut gradient_norm = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let grad = weighted_log_sum(set, &mu)?;
        gradient_norm = grad.norm();
        if iter > 0 && gradient_norm <= opts.tol {
            return Ok(mu);
        }
        if iter == opts.max_iter {
            break;
        }
        let step = mu.project_tangent(&grad)?;
        mu = mu.exp(&step)?;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        gradient_norm,
    })
}

/// `log_at χᵢ` for every point, in `tangent_basis(at)` coordinates, as columns.
pub fn log_coords(set: &WeightedSet, at: &ManifoldPoint) -> Result<Matrix> {
    let basis = tangent_basis(at);
    let ft = basis.frame().transpose();
    let mut out = Matrix::zeros(basis.len(), set.len());
    for (i, p) in set.points.iter().enumerate() {
        out.set_column(i, &(&ft * log_map(at, p)?.coords()));
    }
    Ok(out)
}

fn centered_logs(set: &WeightedSet, at: &ManifoldPoint, sample_mean: &ManifoldPoint) -> Result<Matrix> {
    let mut logs = log_coords(set, at)?;
    if at != sample_mean {
        let basis = tangent_basis(at);
        let c = basis.frame().transpose() * log_map(at, sample_mean)?.coords();
        for mut col in logs.column_iter_mut() {
            col -= &c;
        }
    }
    Ok(logs)
}

fn weighted_outer(a: &Matrix, b: &Matrix, w: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), b.nrows());
    for (i, wi) in w.iter().enumerate() {
        out += *wi * a.column(i) * b.column(i).transpose();
    }
    out
}

/// Second sample moment at `at`, centered on `sample_mean`:
/// `Σ w_cᵢ (log_at χᵢ − log_at μ)(⋄)ᵀ`, in `tangent_basis(at)` coordinates.
pub fn sample_moment(set: &WeightedSet, at: &ManifoldPoint, sample_mean: &ManifoldPoint) -> Result<Matrix> {
    let logs = centered_logs(set, at, sample_mean)?;
    Ok(symmetrize(&weighted_outer(&logs, &logs, &set.w_c)))
}

/// Sample covariance at `mean`, which is taken to be the sample mean of `set`.
pub fn sample_covariance(set: &WeightedSet, mean: &ManifoldPoint) -> Result<Matrix> {
    sample_moment(set, mean, mean)
}

/// `Σ w_ccᵢ (log_{mean_x} χᵢ)(log_{mean_y} γᵢ)ᵀ` with the cross weights of `set_x`.
pub fn sample_cross_covariance(
    set_x: &WeightedSet,
    mean_x: &ManifoldPoint,
    set_y: &WeightedSet,
    mean_y: &ManifoldPoint,
) -> Result<Matrix> {
    if set_x.len() != set_y.len() {
        return Err(Error::DimensionMismatch {
            expected: set_x.len(),
            found: set_y.len(),
        });
    }
    let lx = log_coords(set_x, mean_x)?;
    let ly = log_coords(set_y, mean_y)?;
    Ok(weighted_outer(&lx, &ly, &set_x.w_cc))
}

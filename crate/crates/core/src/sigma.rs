//! Sigma representations: Euclidean constructions in tangent coordinates and
//! their lift to a manifold through the exponential map.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, Matrix, Vector};
use crate::manifold::{tangent_basis, Manifold};
use crate::stats::{RandomPointEstimate, WeightedSet};

/// Pair weights of the minimum symmetric representation.
#[derive(Clone, Debug, PartialEq)]
pub enum PairWeights {
    /// `wᵢ = i / (n(n+1))`, i = 1..n.
    Linear,
    /// Caller-supplied positive weights summing to ½.
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SigmaKind {
    /// `n+1` equally weighted points on a regular simplex.
    Minimum,
    /// `n+1` points; the first carries weight `ρ/(ρ+n)`, the others `1/(ρ+n)`.
    RhoMinimum(f64),
    /// `2n` points `μ ± colᵢ(√P)/√(2wᵢ)`, pair `i` weighted `wᵢ` on each side.
    MinimumSymmetric(PairWeights),
    /// `2n` points `μ ± √n·colᵢ(√P)`, all weighted `1/(2n)`.
    HomogeneousMinimumSymmetric,
}

impl SigmaKind {
    pub fn num_points(&self, n: usize) -> usize {
        match self {
            SigmaKind::Minimum | SigmaKind::RhoMinimum(_) => n + 1,
            SigmaKind::MinimumSymmetric(_) | SigmaKind::HomogeneousMinimumSymmetric => 2 * n,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            SigmaKind::MinimumSymmetric(_) | SigmaKind::HomogeneousMinimumSymmetric
        )
    }

    /// Short tag used in filter variant names (`Mi`, `RhoMi`, `MiSy`, `HoMiSy`).
    pub fn tag(&self) -> &'static str {
        match self {
            SigmaKind::Minimum => "Mi",
            SigmaKind::RhoMinimum(_) => "RhoMi",
            SigmaKind::MinimumSymmetric(_) => "MiSy",
            SigmaKind::HomogeneousMinimumSymmetric => "HoMiSy",
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            SigmaKind::RhoMinimum(rho) if !(*rho > 0.0 && rho.is_finite()) => {
                Err(Error::InvalidWeights(format!("rho must be positive, got {rho}")))
            }
            SigmaKind::MinimumSymmetric(PairWeights::Explicit(w)) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: w.len(),
                    });
                }
                if w.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::InvalidWeights("pair weights must be positive".into()));
                }
                let s: f64 = w.iter().sum();
                if (s - 0.5).abs() > 1e-12 {
                    return Err(Error::InvalidWeights(format!("pair weights sum to {s}, expected 0.5")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaKind::Minimum => f.write_str("minimum"),
            SigmaKind::RhoMinimum(rho) => write!(f, "rho-minimum(rho = {rho})"),
            SigmaKind::MinimumSymmetric(_) => f.write_str("minimum symmetric"),
            SigmaKind::HomogeneousMinimumSymmetric => f.write_str("homogeneous minimum symmetric"),
        }
    }
}

/// Sigma points in a vector space, one column per point.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanSigmaSet {
    pub kind: SigmaKind,
    pub points: Matrix,
    pub weights: Vec<f64>,
}

impl EuclideanSigmaSet {
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn mean(&self) -> Vector {
        let w = Vector::from_column_slice(&self.weights);
        &self.points * w
    }

    pub fn covariance(&self) -> Matrix {
        let mu = self.mean();
        let mut out = Matrix::zeros(self.points.nrows(), self.points.nrows());
        for (i, w) in self.weights.iter().enumerate() {
            let d = self.points.column(i) - &mu;
            out += *w * &d * d.transpose();
        }
        out
    }

    /// As a weighted set on `ℝⁿ`, all three weight families equal.
    pub fn to_weighted_set(&self) -> Result<WeightedSet> {
        let m = Manifold::euclidean(self.points.nrows());
        let pts = self
            .points
            .column_iter()
            .map(|c| m.point(c.iter().copied().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        WeightedSet::uniform_family(pts, self.weights.clone())
    }
}

/// Standardized points `sᵢ` with `Σ wᵢ sᵢ = 0`, `Σ wᵢ sᵢ sᵢᵀ = I`, for the
/// positive weights `w` summing to one (`n + 1` of them).
///
/// Take an orthogonal `V` whose first column is `√w`; the remaining columns,
/// read row-wise and scaled by `1/√wᵢ`, give the points.
fn simplex_points(w: &[f64]) -> Matrix {
    let m = w.len();
    let n = m - 1;
    let root: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    // Householder reflection mapping e₁ to √w.
    let mut u = Vector::from_column_slice(&root);
    u[0] -= 1.0;
    let uu = u.norm_squared();
    let v = if uu == 0.0 {
        Matrix::identity(m, m)
    } else {
        Matrix::identity(m, m) - (&u * u.transpose()) * (2.0 / uu)
    };
    let mut s = Matrix::zeros(n, m);
    for i in 0..m {
        for j in 0..n {
            s[(j, i)] = v[(i, j + 1)] / root[i];
        }
    }
    s
}

/// Normalized sigma representation of `(mean, p)` with positive weights.
pub fn euclidean_sigma(kind: &SigmaKind, mean: &Vector, p: &Matrix) -> Result<EuclideanSigmaSet> {
    let n = mean.len();
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    kind.validate(n)?;
    let l = psd_sqrt(p)?;
    if l.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: l.nrows(),
        });
    }
    let (standard, weights) = match kind {
        SigmaKind::Minimum => {
            let w = vec![1.0 / (n + 1) as f64; n + 1];
            (simplex_points(&w), w)
        }
        SigmaKind::RhoMinimum(rho) => {
            let mut w = vec![1.0 / (rho + n as f64); n + 1];
            w[0] = rho / (rho + n as f64);
            (simplex_points(&w), w)
        }
        SigmaKind::MinimumSymmetric(pairs) => {
            let pw: Vec<f64> = match pairs {
                PairWeights::Linear => {
                    let d = (n * (n + 1)) as f64;
                    (1..=n).map(|i| i as f64 / d).collect()
                }
                PairWeights::Explicit(w) => w.clone(),
            };
            let mut s = Matrix::zeros(n, 2 * n);
            for i in 0..n {
                let a = 1.0 / (2.0 * pw[i]).sqrt();
                s[(i, i)] = a;
                s[(i, n + i)] = -a;
            }
            let w = pw.iter().chain(pw.iter()).copied().collect();
            (s, w)
        }
        SigmaKind::HomogeneousMinimumSymmetric => {
            let a = (n as f64).sqrt();
            let mut s = Matrix::zeros(n, 2 * n);
            for i in 0..n {
                s[(i, i)] = a;
                s[(i, n + i)] = -a;
            }
            (s, vec![0.5 / n as f64; 2 * n])
        }
    };
    let mut points = &l * standard;
    for mut c in points.column_iter_mut() {
        c += mean;
    }
    Ok(EuclideanSigmaSet {
        kind: kind.clone(),
        points,
        weights,
    })
}

/// Lift of a zero-mean tangent sigma representation of `est.cov` through
/// `exp_{est.mean}`. Every tangent point must lie strictly inside the ball of
/// radius [`Manifold::sigma_radius`].
pub fn riemannian_sigma(kind: &SigmaKind, est: &RandomPointEstimate) -> Result<WeightedSet> {
    let n = est.dim();
    let tangent = euclidean_sigma(kind, &Vector::zeros(n), &est.cov)?;
    let radius = est.manifold().sigma_radius();
    let basis = tangent_basis(&est.mean);
    let mut points = Vec::with_capacity(tangent.len());
    for (index, c) in tangent.points.column_iter().enumerate() {
        let norm = c.norm();
        if !(norm < radius) {
            return Err(Error::SigmaOutOfBall {
                index,
                norm,
                radius,
            });
        }
        let v = est.mean.project_tangent(&(basis.frame() * c))?;
        points.push(est.mean.exp(&v)?);
    }
    WeightedSet::uniform_family(points, tangent.weights)
}

//! Unscented transformations between manifolds.

use crate::error::{Result, Stage, StageExt};
use crate::linalg::Matrix;
use crate::manifold::ManifoldPoint;
use crate::sigma::{riemannian_sigma, SigmaKind};
use crate::stats::{karcher_mean, sample_covariance, sample_cross_covariance, KarcherOptions, RandomPointEstimate, WeightedSet};

/// A map between manifolds, evaluated point by point.
pub type PointMap<'a> = dyn Fn(&ManifoldPoint) -> Result<ManifoldPoint> + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct UtResult {
    pub mean: ManifoldPoint,
    pub cov: Matrix,
    /// `Σ_χγ`, logs taken at the input mean and at `mean` respectively.
    pub cross_cov: Option<Matrix>,
    /// The dependent set `{f(χᵢ)}`.
    pub image: WeightedSet,
}

/// Propagate an existing weighted set whose sample mean is `mean_x`.
///
/// The Karcher mean of the image starts from `init`, or from `f(mean_x)`.
pub fn transform_set(
    f: &PointMap<'_>,
    set: &WeightedSet,
    mean_x: &ManifoldPoint,
    init: Option<&ManifoldPoint>,
    cross: bool,
    opts: KarcherOptions,
) -> Result<UtResult> {
    let images = set
        .points()
        .iter()
        .map(f)
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Propagation)?;
    let image = set.with_points(images).stage(Stage::Propagation)?;
    let start = match init {
        Some(p) => p.clone(),
        None => f(mean_x).stage(Stage::Propagation)?,
    };
    let mean = karcher_mean(&image, Some(&start), opts).stage(Stage::Mean)?;
    let cov = sample_covariance(&image, &mean).stage(Stage::Covariance)?;
    let cross_cov = if cross {
        Some(sample_cross_covariance(set, mean_x, &image, &mean).stage(Stage::Covariance)?)
    } else {
        None
    };
    Ok(UtResult {
        mean,
        cov,
        cross_cov,
        image,
    })
}

/// Full transformation with freshly generated sigma points.
pub fn unscented_transform(
    f: &PointMap<'_>,
    est: &RandomPointEstimate,
    kind: &SigmaKind,
    cross: bool,
    opts: KarcherOptions,
) -> Result<UtResult> {
    let set = riemannian_sigma(kind, est).stage(Stage::SigmaPoints)?;
    transform_set(f, &set, &est.mean, None, cross, opts)
}

/// Mean and covariance of `f(X)` for `X ∼ est`.
pub fn riut1(
    f: &PointMap<'_>,
    est: &RandomPointEstimate,
    kind: &SigmaKind,
    opts: KarcherOptions,
) -> Result<(ManifoldPoint, Matrix)> {
    let r = unscented_transform(f, est, kind, false, opts)?;
    Ok((r.mean, r.cov))
}

/// Mean, covariance and cross-covariance of `f(X)` for `X ∼ est`.
pub fn riut2(
    f: &PointMap<'_>,
    est: &RandomPointEstimate,
    kind: &SigmaKind,
    opts: KarcherOptions,
) -> Result<UtResult> {
    unscented_transform(f, est, kind, true, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::Vector;
    use crate::manifold::Manifold;
    use crate::sigma::PairWeights;
    use approx::assert_relative_eq;

    fn kinds() -> Vec<SigmaKind> {
        vec![
            SigmaKind::Minimum,
            SigmaKind::RhoMinimum(0.5),
            SigmaKind::MinimumSymmetric(PairWeights::Linear),
            SigmaKind::HomogeneousMinimumSymmetric,
        ]
    }

    fn euclid_est() -> RandomPointEstimate {
        let r2 = Manifold::euclidean(2);
        RandomPointEstimate::new(
            r2.point(vec![1.0, -2.0]).unwrap(),
            Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]),
        )
        .unwrap()
    }

    #[test]
    fn identity_map() {
        let est = euclid_est();
        let id = |p: &ManifoldPoint| Ok(p.clone());
        for kind in kinds() {
            let r = riut2(&id, &est, &kind, KarcherOptions::default()).unwrap();
            assert_relative_eq!(r.mean.coords(), est.mean.coords(), epsilon = 1e-12);
            assert_relative_eq!(r.cov, est.cov, epsilon = 1e-12);
            assert_relative_eq!(r.cross_cov.unwrap(), est.cov, epsilon = 1e-12);
        }
    }

    #[test]
    fn affine_map_is_exact() {
        let est = euclid_est();
        let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let b = Vector::from_vec(vec![0.1, 0.2, 0.3]);
        let r3 = Manifold::euclidean(3);
        let f = |p: &ManifoldPoint| r3.point((&a * p.coords() + &b).as_slice().to_vec());
        for kind in kinds() {
            let r = riut2(&f, &est, &kind, KarcherOptions::default()).unwrap();
            assert_relative_eq!(r.mean.coords(), &(&a * est.mean.coords() + &b), epsilon = 1e-12);
            assert_relative_eq!(r.cov, &a * &est.cov * a.transpose(), epsilon = 1e-12);
            assert_relative_eq!(r.cross_cov.unwrap(), &est.cov * a.transpose(), epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_map() {
        let est = euclid_est();
        let c = Manifold::sphere(2).point(vec![0.0, 1.0, 0.0]).unwrap();
        let f = |_: &ManifoldPoint| Ok(c.clone());
        let r = riut2(&f, &est, &SigmaKind::Minimum, KarcherOptions::default()).unwrap();
        assert_eq!(r.mean, c);
        assert_eq!(r.cov, Matrix::zeros(2, 2));
        assert_eq!(r.cross_cov.unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn errors_carry_stage() {
        let est = euclid_est();
        let f = |_: &ManifoldPoint| Err(Error::InvalidArgument("boom".into()));
        let err = riut1(&f, &est, &SigmaKind::Minimum, KarcherOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: Stage::Propagation, .. }));
    }
}

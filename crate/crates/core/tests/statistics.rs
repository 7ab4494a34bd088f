use proptest::prelude::*;
use riukf_core::{
    euclidean_sigma, karcher_mean, riemannian_sigma, riut1, riut2, sample_covariance, sample_cross_covariance,
    tangent_basis, KarcherOptions, Manifold, ManifoldPoint, Matrix, PairWeights, RandomPointEstimate, SigmaKind,
    Vector, WeightedSet,
};

const KINDS: [SigmaKind; 4] = [
    SigmaKind::Minimum,
    SigmaKind::RhoMinimum(0.4),
    SigmaKind::MinimumSymmetric(PairWeights::Linear),
    SigmaKind::HomogeneousMinimumSymmetric,
];

fn tight() -> KarcherOptions {
    KarcherOptions { tol: 1e-13, max_iter: 500 }
}

fn euclid(v: &[f64]) -> ManifoldPoint {
    Manifold::euclidean(v.len()).point(v.to_vec()).unwrap()
}

fn spd(raw: &[f64], n: usize, shift: f64) -> Matrix {
    let b = Matrix::from_fn(n, n, |i, j| raw[i * n + j]);
    &b * b.transpose() + Matrix::identity(n, n) * shift
}

#[test]
fn euclidean_statistics_match_classical_formulas() {
    let pts = [[0.0, 1.0], [2.0, -1.0], [4.0, 3.0]];
    let w = [0.2, 0.5, 0.3];
    let set = WeightedSet::uniform_family(pts.iter().map(|p| euclid(p)).collect(), w.to_vec()).unwrap();
    let mu = karcher_mean(&set, None, KarcherOptions::default()).unwrap();
    let expected = Vector::from_fn(2, |i, _| pts.iter().zip(&w).map(|(p, w)| w * p[i]).sum());
    assert!((mu.coords() - &expected).amax() < 1e-12);
    let mut scatter = Matrix::zeros(2, 2);
    for (p, w) in pts.iter().zip(&w) {
        let d = Vector::from_column_slice(p) - &expected;
        scatter += *w * &d * d.transpose();
    }
    assert!((sample_covariance(&set, &mu).unwrap() - scatter).amax() < 1e-12);
}

#[test]
fn scalar_cross_covariance() {
    let x = WeightedSet::uniform_family(vec![euclid(&[-1.0]), euclid(&[1.0])], vec![0.5, 0.5]).unwrap();
    let y = WeightedSet::uniform_family(vec![euclid(&[-2.0]), euclid(&[2.0])], vec![0.5, 0.5]).unwrap();
    let c = sample_cross_covariance(&x, &euclid(&[0.0]), &y, &euclid(&[0.0])).unwrap();
    assert_eq!(c[(0, 0)], 2.0);
    assert_eq!(sample_cross_covariance(&x, &euclid(&[0.0]), &x, &euclid(&[0.0])).unwrap(), sample_covariance(&x, &euclid(&[0.0])).unwrap());
}

#[test]
fn euclidean_lift_is_a_shift() {
    let mean = Vector::from_vec(vec![1.0, -2.0, 0.5]);
    let p = Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
    for kind in &KINDS {
        let flat = euclidean_sigma(kind, &mean, &p).unwrap();
        let est = RandomPointEstimate::new(euclid(mean.as_slice()), p.clone()).unwrap();
        let lifted = riemannian_sigma(kind, &est).unwrap();
        assert_eq!(lifted.len(), flat.len());
        for (i, x) in lifted.points().iter().enumerate() {
            assert!((x.coords() - flat.points.column(i)).amax() < 1e-14);
        }
        assert_eq!(lifted.w_m(), flat.weights.as_slice());
    }
}

/// Weighted mean and covariance computed directly from the sigma matrix.
fn reference_ut(f: impl Fn(&Vector) -> Vector, mean: &Vector, p: &Matrix, kind: &SigmaKind) -> (Vector, Matrix, Matrix) {
    let set = euclidean_sigma(kind, mean, p).unwrap();
    let ys: Vec<Vector> = set.points.column_iter().map(|c| f(&c.into_owned())).collect();
    let ybar = ys.iter().zip(&set.weights).fold(Vector::zeros(ys[0].len()), |acc, (y, w)| acc + *w * y);
    let mut pyy = Matrix::zeros(ybar.len(), ybar.len());
    let mut pxy = Matrix::zeros(mean.len(), ybar.len());
    for (i, (y, w)) in ys.iter().zip(&set.weights).enumerate() {
        let dy = y - &ybar;
        pyy += *w * &dy * dy.transpose();
        pxy += *w * (set.points.column(i) - mean) * dy.transpose();
    }
    (ybar, pyy, pxy)
}

#[test]
fn euclidean_ut_matches_reference() {
    let mean = Vector::from_vec(vec![0.5, -1.0]);
    let p = Matrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.3]);
    let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 0.0, 1.5]);
    let b = Vector::from_vec(vec![0.1, 0.2, -0.3]);
    let affine = |x: &Vector| &a * x + &b;
    let quadratic = |x: &Vector| Vector::from_vec(vec![x[0] * x[1], x[0] * x[0] - x[1], (x[1] + 1.0).powi(2)]);
    let est = RandomPointEstimate::new(euclid(mean.as_slice()), p.clone()).unwrap();
    for kind in &KINDS {
        for (g, tol) in [(&affine as &dyn Fn(&Vector) -> Vector, 1e-12), (&quadratic, 1e-10)] {
            let f = |x: &ManifoldPoint| Ok(euclid(g(x.coords()).as_slice()));
            let r = riut2(&f, &est, kind, KarcherOptions::default()).unwrap();
            let (ybar, pyy, pxy) = reference_ut(g, &mean, &p, kind);
            assert!((r.mean.coords() - ybar).amax() < tol, "{kind}");
            assert!((r.cov - pyy).amax() < tol, "{kind}");
            assert!((r.cross_cov.unwrap() - pxy).amax() < tol, "{kind}");
        }
        let (m, c) = riut1(&|x: &ManifoldPoint| Ok(euclid(affine(x.coords()).as_slice())), &est, kind, KarcherOptions::default()).unwrap();
        assert!((m.coords() - (&a * &mean + &b)).amax() < 1e-12);
        assert!((c - &a * &p * a.transpose()).amax() < 1e-12);
        let id = riut2(&|x: &ManifoldPoint| Ok(x.clone()), &est, kind, KarcherOptions::default()).unwrap();
        assert!((id.cross_cov.unwrap() - &p).amax() < 1e-12);
    }
}

#[test]
fn ut_through_a_rotation_of_the_sphere() {
    let s2 = Manifold::sphere(2);
    let (c, s) = (0.7f64.cos(), 0.7f64.sin());
    let rot = Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
    let mu = s2.project_point(vec![0.3, 0.4, 0.8]).unwrap();
    let p = Matrix::from_row_slice(2, 2, &[0.02, 0.005, 0.005, 0.01]);
    let est = RandomPointEstimate::new(mu.clone(), p.clone()).unwrap();
    let r2 = rot.clone();
    let f = move |x: &ManifoldPoint| Manifold::sphere(2).project_point((&r2 * x.coords()).as_slice().to_vec());
    let image = s2.project_point((&rot * mu.coords()).as_slice().to_vec()).unwrap();
    let m = tangent_basis(&image).frame().transpose() * &rot * tangent_basis(&mu).frame();
    for kind in &KINDS {
        let r = riut2(&f, &est, kind, tight()).unwrap();
        assert!(r.mean.distance(&image).unwrap() < 1e-10);
        assert!((r.cov - &m * &p * m.transpose()).amax() < 1e-10);
        assert!((r.cross_cov.unwrap() - &p * m.transpose()).amax() < 1e-10);
    }
}

#[test]
fn sigma_points_outside_the_ball_are_rejected() {
    let s2 = Manifold::sphere(2);
    let est = RandomPointEstimate::new(s2.point(vec![0.0, 0.0, 1.0]).unwrap(), Matrix::identity(2, 2) * 4.0).unwrap();
    assert!(riemannian_sigma(&SigmaKind::HomogeneousMinimumSymmetric, &est).is_err());
}

proptest! {
    #[test]
    fn euclidean_sigma_moments(n in 1usize..7, raw in prop::collection::vec(-1.0f64..1.0, 42), rho in 0.05f64..4.0) {
        let p = spd(&raw, n, 0.01);
        let mean = Vector::from_column_slice(&raw[36..36 + n]);
        for kind in [SigmaKind::Minimum, SigmaKind::RhoMinimum(rho), SigmaKind::MinimumSymmetric(PairWeights::Linear), SigmaKind::HomogeneousMinimumSymmetric] {
            let set = euclidean_sigma(&kind, &mean, &p).unwrap();
            prop_assert_eq!(set.len(), kind.num_points(n));
            prop_assert!(set.weights.iter().all(|w| *w > 0.0));
            prop_assert!((set.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((set.mean() - &mean).amax() < 1e-12);
            prop_assert!((set.covariance() - &p).norm() <= 1e-10 * p.norm());
        }
    }

    #[test]
    fn lifted_sets_recover_their_moments(n in 2usize..4, raw in prop::collection::vec(-1.0f64..1.0, 13), scale in 1e-3f64..0.05) {
        let m = Manifold::sphere(n);
        let base = m.project_point(raw[9..9 + n + 1].to_vec()).unwrap();
        let p = spd(&raw, n, 1e-3);
        let top = p.symmetric_eigenvalues().max();
        let p = p * (scale / top);
        let est = RandomPointEstimate::new(base.clone(), p.clone()).unwrap();
        for kind in &KINDS {
            let set = riemannian_sigma(kind, &est).unwrap();
            let mu = karcher_mean(&set, None, tight()).unwrap();
            prop_assert!(mu.distance(&base).unwrap() < 1e-8);
            prop_assert!((sample_covariance(&set, &mu).unwrap() - &p).norm() < 1e-8);
        }
    }
}

use proptest::prelude::*;
use riukf_core::{
    distance, exp_map, log_map, parallel_transport_cov, parallel_transport_vec, tangent_basis, to_coords, Manifold,
    ManifoldPoint, Matrix, Vector,
};

fn sphere_point(n: usize, raw: &[f64]) -> Option<ManifoldPoint> {
    let v = raw[..=n].to_vec();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 1e-3).then(|| Manifold::sphere(n).project_point(v).unwrap())
}

fn tangent_at(a: &ManifoldPoint, raw: &[f64], len: f64) -> riukf_core::TangentVector {
    let v = a.project_tangent(&Vector::from_column_slice(&raw[..a.coords().len()])).unwrap();
    if v.norm() < 1e-9 {
        return a.zero_vector();
    }
    v.scale(len / v.norm())
}

#[test]
fn closed_form_examples() {
    let r2 = Manifold::euclidean(2);
    let a = r2.point(vec![1.0, 2.0]).unwrap();
    let v = a.tangent(vec![0.5, -1.0]).unwrap();
    assert_eq!(exp_map(&a, &v).unwrap().coords().as_slice(), &[1.5, 1.0]);

    let r3 = Manifold::euclidean(3);
    let o = r3.point(vec![0.0; 3]).unwrap();
    let b = r3.point(vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(log_map(&o, &b).unwrap().coords().as_slice(), &[1.0, 2.0, 3.0]);

    let p = r2.point(vec![1.0, 1.0]).unwrap();
    let q = r2.point(vec![4.0, 5.0]).unwrap();
    assert_eq!(distance(&p, &q).unwrap(), 5.0);

    let m = Manifold::product(vec![Manifold::euclidean(1), Manifold::sphere(2)]);
    let x = m.point(vec![3.0, 0.0, 0.0, 1.0]).unwrap();
    let y = m.point(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!((distance(&x, &y).unwrap() - 3.0).abs() < 1e-15);

    let s2 = Manifold::sphere(2);
    let n = s2.point(vec![0.0, 0.0, 1.0]).unwrap();
    let e = s2.point(vec![1.0, 0.0, 0.0]).unwrap();
    assert!((distance(&n, &e).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    let v = n.tangent(vec![std::f64::consts::FRAC_PI_2, 0.0, 0.0]).unwrap();
    assert!((exp_map(&n, &v).unwrap().coords() - e.coords()).amax() < 1e-15);
}

#[test]
fn euclidean_transport_is_identity() {
    let r2 = Manifold::euclidean(2);
    let a = r2.point(vec![0.0, 0.0]).unwrap();
    let b = r2.point(vec![5.0, 5.0]).unwrap();
    let v = a.tangent(vec![1.0, 0.0]).unwrap();
    assert_eq!(parallel_transport_vec(&v, &a, &b).unwrap().coords().as_slice(), &[1.0, 0.0]);
    let p = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    assert_eq!(parallel_transport_cov(&p, &a, &b, &tangent_basis(&a), &tangent_basis(&b)).unwrap(), p);
}

proptest! {
    #[test]
    fn sphere_exp_log_roundtrip(n in 1usize..6, raw in prop::collection::vec(-1.0f64..1.0, 12), len in 0.0f64..3.0) {
        let Some(a) = sphere_point(n, &raw) else { return Ok(()) };
        let v = tangent_at(&a, &raw[6..], len);
        let b = exp_map(&a, &v).unwrap();
        prop_assert!((b.coords().norm() - 1.0).abs() < 1e-12);
        let w = log_map(&a, &b).unwrap();
        prop_assert!((w.coords() - v.coords()).amax() < 1e-9);
        prop_assert!((distance(&a, &b).unwrap() - v.norm()).abs() < 1e-10);
        prop_assert!((distance(&b, &a).unwrap() - distance(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn product_roundtrip(raw in prop::collection::vec(-1.0f64..1.0, 12)) {
        let m = Manifold::product(vec![Manifold::sphere(2), Manifold::euclidean(2), Manifold::sphere(1)]);
        let a = m.project_point(raw[..7].to_vec()).unwrap();
        let v = a.project_tangent(&Vector::from_column_slice(&raw[5..12])).unwrap().scale(0.7);
        let b = a.exp(&v).unwrap();
        prop_assert!((a.log(&b).unwrap().coords() - v.coords()).amax() < 1e-9);
        let c = a.log_coords(&b).unwrap();
        prop_assert_eq!(c.len(), 5);
        prop_assert!((a.exp_coords(&c).unwrap().coords() - b.coords()).amax() < 1e-12);
    }

    #[test]
    fn bases_are_orthonormal_and_deterministic(n in 1usize..6, raw in prop::collection::vec(-1.0f64..1.0, 6)) {
        let Some(a) = sphere_point(n, &raw) else { return Ok(()) };
        let basis = tangent_basis(&a);
        let f = basis.frame();
        prop_assert!((f.transpose() * f - Matrix::identity(n, n)).amax() < 1e-12);
        prop_assert!((f.transpose() * a.coords()).amax() < 1e-12);
        let again = tangent_basis(&a.clone());
        prop_assert_eq!(again.frame(), f);
    }

    #[test]
    fn transport_preserves_geometry(n in 1usize..6, raw in prop::collection::vec(-1.0f64..1.0, 24), len in 0.0f64..3.0) {
        let Some(a) = sphere_point(n, &raw) else { return Ok(()) };
        let b = exp_map(&a, &tangent_at(&a, &raw[6..], len)).unwrap();
        let u = tangent_at(&a, &raw[12..], 1.3);
        let v = tangent_at(&a, &raw[18..], 0.4);
        let tu = parallel_transport_vec(&u, &a, &b).unwrap();
        let tv = parallel_transport_vec(&v, &a, &b).unwrap();
        prop_assert!((tu.coords().dot(b.coords())).abs() < 1e-12);
        prop_assert!((tu.inner(&tv).unwrap() - u.inner(&v).unwrap()).abs() < 1e-12);
        let back = parallel_transport_vec(&tu, &b, &a).unwrap();
        prop_assert!((back.coords() - u.coords()).amax() < 1e-12);

        // Transported covariance agrees with transporting its factor.
        let (ba, bb) = (tangent_basis(&a), tangent_basis(&b));
        let cu = to_coords(&u, &ba).unwrap();
        let p = &cu * cu.transpose() + Matrix::identity(n, n) * 0.1;
        let moved = parallel_transport_cov(&p, &a, &b, &ba, &bb).unwrap();
        let ctu = to_coords(&tu, &bb).unwrap();
        let expected = &ctu * ctu.transpose() + Matrix::identity(n, n) * 0.1;
        prop_assert!((moved - expected).amax() < 1e-12);
    }
}

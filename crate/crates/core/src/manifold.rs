//! Geodesically complete manifolds with closed-form geometry.
//!
//! Three families are supported: Euclidean spaces `ℝⁿ`, unit spheres `Sⁿ ⊂ ℝⁿ⁺¹`
//! and finite Cartesian products of these. Points and tangent vectors are stored
//! in ambient coordinates; a deterministic orthonormal [`TangentBasis`] converts
//! tangent vectors to intrinsic coordinates wherever covariance matrices are
//! involved.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{check_square, check_symmetric, sym_eigen, symmetrize, Matrix, Vector};

/// Proximity to the cut locus, measured on `1 + a·b` for spheres.
pub const CUT_LOCUS_TOL: f64 = 1e-9;
/// Below this geodesic distance the sphere logarithm uses its series limit.
const SMALL_ANGLE: f64 = 1e-8;
/// Unit-norm tolerance for sphere points.
pub const UNIT_TOL: f64 = 1e-12;
/// Orthogonality tolerance for sphere tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Manifold {
    /// `ℝⁿ`.
    Euclidean(usize),
    /// The unit sphere `Sⁿ`, embedded in `ℝⁿ⁺¹`.
    Sphere(usize),
    Product(Arc<[Manifold]>),
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Euclidean(n) => write!(f, "R^{n}"),
            Manifold::Sphere(n) => write!(f, "S^{n}"),
            Manifold::Product(factors) => {
                for (i, m) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" x ")?;
                    }
                    write!(f, "{m}")?;
                }
                Ok(())
            }
        }
    }
}

/// A factor of a (possibly trivial) product, with its coordinate offsets.
#[derive(Clone, Copy, Debug)]
pub struct FactorSlot<'a> {
    pub manifold: &'a Manifold,
    pub ambient_offset: usize,
    pub intrinsic_offset: usize,
}

impl Manifold {
    /// # Panics
    /// If `n == 0`.
    pub fn euclidean(n: usize) -> Self {
        assert!(n >= 1, "Euclidean space needs dimension >= 1");
        Manifold::Euclidean(n)
    }

    /// # Panics
    /// If `n == 0`.
    pub fn sphere(n: usize) -> Self {
        assert!(n >= 1, "sphere needs dimension >= 1");
        Manifold::Sphere(n)
    }

    /// # Panics
    /// If `factors` is empty.
    pub fn product(factors: Vec<Manifold>) -> Self {
        assert!(!factors.is_empty(), "product needs at least one factor");
        Manifold::Product(factors.into())
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Euclidean(n) | Manifold::Sphere(n) => *n,
            Manifold::Product(fs) => fs.iter().map(Manifold::intrinsic_dim).sum(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Euclidean(n) => *n,
            Manifold::Sphere(n) => n + 1,
            Manifold::Product(fs) => fs.iter().map(Manifold::ambient_dim).sum(),
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Manifold::Euclidean(_) => f64::INFINITY,
            Manifold::Sphere(_) => PI,
            Manifold::Product(fs) => fs
                .iter()
                .map(Manifold::injectivity_radius)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Upper bound on the sectional curvature.
    pub fn curvature_bound(&self) -> f64 {
        match self {
            Manifold::Euclidean(_) => 0.0,
            Manifold::Sphere(n) => {
                if *n == 1 {
                    // S¹ is flat; its injectivity radius is still π.
                    0.0
                } else {
                    1.0
                }
            }
            Manifold::Product(fs) => fs.iter().map(Manifold::curvature_bound).fold(0.0, f64::max),
        }
    }

    /// `½·min{inj, π/√κ}`, the radius of the ball that sigma points must stay in.
    pub fn sigma_radius(&self) -> f64 {
        let kappa = self.curvature_bound();
        let curvature_limit = if kappa > 0.0 {
            PI / kappa.sqrt()
        } else {
            f64::INFINITY
        };
        0.5 * self.injectivity_radius().min(curvature_limit)
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Manifold::Euclidean(_) => true,
            Manifold::Sphere(_) => false,
            Manifold::Product(fs) => fs.iter().all(Manifold::is_flat),
        }
    }

    /// Factors with their offsets; a non-product manifold is its own single factor.
    pub fn slots(&self) -> Vec<FactorSlot<'_>> {
        match self {
            Manifold::Product(fs) => {
                let mut amb = 0;
                let mut int = 0;
                fs.iter()
                    .map(|m| {
                        let slot = FactorSlot {
                            manifold: m,
                            ambient_offset: amb,
                            intrinsic_offset: int,
                        };
                        amb += m.ambient_dim();
                        int += m.intrinsic_dim();
                        slot
                    })
                    .collect()
            }
            other => vec![FactorSlot {
                manifold: other,
                ambient_offset: 0,
                intrinsic_offset: 0,
            }],
        }
    }

    fn check_coords(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: coords.len(),
            });
        }
        match self {
            Manifold::Euclidean(_) => {
                if coords.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint("non-finite coordinate".into()))
                }
            }
            Manifold::Sphere(_) => {
                let norm = norm(coords);
                if (norm - 1.0).abs() <= UNIT_TOL {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "sphere point has norm {norm}, expected 1"
                    )))
                }
            }
            Manifold::Product(_) => {
                for s in self.slots() {
                    let n = s.manifold.ambient_dim();
                    s.manifold
                        .check_coords(&coords[s.ambient_offset..s.ambient_offset + n])?;
                }
                Ok(())
            }
        }
    }

    /// Validated point.
    pub fn point(&self, coords: impl Into<Vec<f64>>) -> Result<ManifoldPoint> {
        let coords = coords.into();
        self.check_coords(&coords)?;
        Ok(ManifoldPoint {
            manifold: self.clone(),
            coords: Vector::from_vec(coords),
        })
    }

    /// Point obtained by normalizing every sphere factor of `coords`.
    pub fn project_point(&self, coords: impl Into<Vec<f64>>) -> Result<ManifoldPoint> {
        let mut coords = coords.into();
        if coords.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: coords.len(),
            });
        }
        for s in self.slots() {
            if let Manifold::Sphere(_) = s.manifold {
                let block = &mut coords[s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim()];
                let n = norm(block);
                if n == 0.0 || !n.is_finite() {
                    return Err(Error::InvalidPoint("cannot normalize a zero vector".into()));
                }
                block.iter_mut().for_each(|c| *c /= n);
            }
        }
        self.point(coords)
    }

    /// Combine factor points into a point of this product manifold.
    pub fn point_from_factors(&self, parts: &[ManifoldPoint]) -> Result<ManifoldPoint> {
        let slots = self.slots();
        if slots.len() != parts.len() {
            return Err(Error::DimensionMismatch {
                expected: slots.len(),
                found: parts.len(),
            });
        }
        let mut coords = Vec::with_capacity(self.ambient_dim());
        for (s, p) in slots.iter().zip(parts) {
            same_manifold(s.manifold, &p.manifold)?;
            coords.extend_from_slice(p.coords.as_slice());
        }
        Ok(ManifoldPoint {
            manifold: self.clone(),
            coords: Vector::from_vec(coords),
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn same_manifold(expected: &Manifold, found: &Manifold) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ManifoldMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    manifold: Manifold,
    coords: Vector,
}

impl ManifoldPoint {
    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// The `i`-th factor of a product point (the point itself for `i = 0` otherwise).
    pub fn factor(&self, i: usize) -> Result<ManifoldPoint> {
        let slots = self.manifold.slots();
        let s = slots.get(i).ok_or(Error::DimensionMismatch {
            expected: slots.len(),
            found: i + 1,
        })?;
        let n = s.manifold.ambient_dim();
        Ok(ManifoldPoint {
            manifold: s.manifold.clone(),
            coords: self.coords.rows(s.ambient_offset, n).into_owned(),
        })
    }

    pub fn zero_vector(&self) -> TangentVector {
        TangentVector {
            base: self.clone(),
            coords: Vector::zeros(self.manifold.ambient_dim()),
        }
    }

    /// Tangent vector at this point from ambient coordinates, validated.
    pub fn tangent(&self, coords: impl Into<Vec<f64>>) -> Result<TangentVector> {
        let coords = Vector::from_vec(coords.into());
        if coords.len() != self.manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.manifold.ambient_dim(),
                found: coords.len(),
            });
        }
        for s in self.manifold.slots() {
            if let Manifold::Sphere(_) = s.manifold {
                let n = s.manifold.ambient_dim();
                let base = &self.coords.as_slice()[s.ambient_offset..s.ambient_offset + n];
                let v = &coords.as_slice()[s.ambient_offset..s.ambient_offset + n];
                let d = dot(base, v);
                if d.abs() > TANGENT_TOL * (1.0 + norm(v)) {
                    return Err(Error::InvalidArgument(format!(
                        "vector is not tangent to the sphere (normal component {d:e})"
                    )));
                }
            }
        }
        Ok(TangentVector {
            base: self.clone(),
            coords,
        })
    }

    /// Orthogonal projection of an ambient vector onto the tangent space here.
    pub fn project_tangent(&self, ambient: &Vector) -> Result<TangentVector> {
        if ambient.len() != self.manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.manifold.ambient_dim(),
                found: ambient.len(),
            });
        }
        let mut coords = ambient.clone();
        for s in self.manifold.slots() {
            if let Manifold::Sphere(_) = s.manifold {
                let n = s.manifold.ambient_dim();
                let base = self.coords.rows(s.ambient_offset, n);
                let d = base.dot(&coords.rows(s.ambient_offset, n));
                let mut block = coords.rows_mut(s.ambient_offset, n);
                block -= base * d;
            }
        }
        Ok(TangentVector {
            base: self.clone(),
            coords,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    coords: Vector,
}

impl TangentVector {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// Riemannian norm (the restricted ambient norm for every shipped manifold).
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        if self.base != other.base {
            return Err(Error::BaseMismatch);
        }
        Ok(self.coords.dot(&other.coords))
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coords: &self.coords * s,
        }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        if self.base != other.base {
            return Err(Error::BaseMismatch);
        }
        Ok(TangentVector {
            base: self.base.clone(),
            coords: &self.coords + &other.coords,
        })
    }
}

/// Ordered orthonormal basis of a tangent space, stored as an ambient frame
/// whose columns are the basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentBasis {
    base: ManifoldPoint,
    frame: Matrix,
}

impl TangentBasis {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    /// Ambient frame (`ambient_dim × intrinsic_dim`).
    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.frame.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.ncols() == 0
    }

    pub fn vector(&self, i: usize) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coords: self.frame.column(i).into_owned(),
        }
    }

    pub fn vectors(&self) -> impl Iterator<Item = TangentVector> + '_ {
        (0..self.len()).map(|i| self.vector(i))
    }
}

fn check_base(a: &ManifoldPoint, v: &TangentVector) -> Result<()> {
    same_manifold(&a.manifold, &v.base.manifold)?;
    if a.coords != v.base.coords {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

// Raw kernels operate on ambient coordinate slices of a single manifold.

fn exp_raw(m: &Manifold, a: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    match m {
        Manifold::Euclidean(_) => {
            for i in 0..a.len() {
                out[i] = a[i] + v[i];
            }
        }
        Manifold::Sphere(_) => {
            let theta = norm(v);
            if theta >= PI - CUT_LOCUS_TOL {
                return Err(Error::OutsideInjectiveDomain {
                    norm: theta,
                    limit: PI,
                });
            }
            if theta == 0.0 {
                out.copy_from_slice(a);
                return Ok(());
            }
            let (s, c) = theta.sin_cos();
            let k = s / theta;
            for i in 0..a.len() {
                out[i] = c * a[i] + k * v[i];
            }
            let n = norm(out);
            out.iter_mut().for_each(|x| *x /= n);
        }
        Manifold::Product(_) => {
            for s in m.slots() {
                let r = s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim();
                exp_raw(s.manifold, &a[r.clone()], &v[r.clone()], &mut out[r])?;
            }
        }
    }
    Ok(())
}

/// Geodesic distance between two sphere points, stable for tiny and near-π angles.
fn sphere_angle(a: &[f64], b: &[f64]) -> f64 {
    let chord_minus: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt();
    if chord_minus <= std::f64::consts::SQRT_2 {
        2.0 * (0.5 * chord_minus).min(1.0).asin()
    } else {
        let chord_plus: f64 = a.iter().zip(b).map(|(x, y)| (y + x) * (y + x)).sum::<f64>().sqrt();
        PI - 2.0 * (0.5 * chord_plus).clamp(-1.0, 1.0).asin()
    }
}

fn log_raw(m: &Manifold, a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
    match m {
        Manifold::Euclidean(_) => {
            for i in 0..a.len() {
                out[i] = b[i] - a[i];
            }
        }
        Manifold::Sphere(_) => {
            // 1 + a·b, computed as |a + b|² / 2 to keep precision near the antipode.
            let gap = 0.5 * a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>();
            if gap <= CUT_LOCUS_TOL {
                return Err(Error::CutLocus {
                    a: a.to_vec(),
                    b: b.to_vec(),
                    gap,
                });
            }
            let theta = sphere_angle(a, b);
            // b - (a·b)a == u - (a·u)a with u = b - a, which avoids cancellation.
            let mut au = 0.0;
            for i in 0..a.len() {
                au += a[i] * (b[i] - a[i]);
            }
            for i in 0..a.len() {
                out[i] = (b[i] - a[i]) - au * a[i];
            }
            if theta < SMALL_ANGLE {
                return Ok(());
            }
            let w = norm(out);
            let k = theta / w;
            out.iter_mut().for_each(|x| *x *= k);
        }
        Manifold::Product(_) => {
            for s in m.slots() {
                let r = s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim();
                log_raw(s.manifold, &a[r.clone()], &b[r.clone()], &mut out[r])?;
            }
        }
    }
    Ok(())
}

fn distance_raw(m: &Manifold, a: &[f64], b: &[f64]) -> f64 {
    match m {
        Manifold::Euclidean(_) => a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt(),
        Manifold::Sphere(_) => sphere_angle(a, b),
        Manifold::Product(_) => m
            .slots()
            .iter()
            .map(|s| {
                let r = s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim();
                distance_raw(s.manifold, &a[r.clone()], &b[r]).powi(2)
            })
            .sum::<f64>()
            .sqrt(),
    }
}

fn transport_raw(m: &Manifold, v: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
    match m {
        Manifold::Euclidean(_) => out.copy_from_slice(v),
        Manifold::Sphere(_) => {
            let mut u = vec![0.0; a.len()];
            log_raw(m, a, b, &mut u)?;
            let theta = norm(&u);
            if theta == 0.0 {
                out.copy_from_slice(v);
                return Ok(());
            }
            let ev = dot(&u, v) / theta;
            let (s, c) = theta.sin_cos();
            for i in 0..a.len() {
                out[i] = v[i] + (c - 1.0) * ev * u[i] / theta - s * ev * a[i];
            }
            // Remove round-off drift out of the tangent space at b.
            let d = dot(out, b);
            for i in 0..b.len() {
                out[i] -= d * b[i];
            }
        }
        Manifold::Product(_) => {
            for s in m.slots() {
                let r = s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim();
                transport_raw(s.manifold, &v[r.clone()], &a[r.clone()], &b[r.clone()], &mut out[r])?;
            }
        }
    }
    Ok(())
}

/// Riemannian exponential `exp_a(v)`.
pub fn exp_map(a: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    check_base(a, v)?;
    let mut out = vec![0.0; a.coords.len()];
    exp_raw(&a.manifold, a.coords.as_slice(), v.coords.as_slice(), &mut out)?;
    Ok(ManifoldPoint {
        manifold: a.manifold.clone(),
        coords: Vector::from_vec(out),
    })
}

/// Riemannian logarithm `log_a(b)`.
pub fn log_map(a: &ManifoldPoint, b: &ManifoldPoint) -> Result<TangentVector> {
    same_manifold(&a.manifold, &b.manifold)?;
    let mut out = vec![0.0; a.coords.len()];
    log_raw(&a.manifold, a.coords.as_slice(), b.coords.as_slice(), &mut out)?;
    Ok(TangentVector {
        base: a.clone(),
        coords: Vector::from_vec(out),
    })
}

/// Geodesic distance.
pub fn distance(a: &ManifoldPoint, b: &ManifoldPoint) -> Result<f64> {
    same_manifold(&a.manifold, &b.manifold)?;
    Ok(distance_raw(&a.manifold, a.coords.as_slice(), b.coords.as_slice()))
}

/// Parallel transport of `v` (based at `a`) to `b` along the minimizing geodesic.
pub fn parallel_transport_vec(
    v: &TangentVector,
    a: &ManifoldPoint,
    b: &ManifoldPoint,
) -> Result<TangentVector> {
    check_base(a, v)?;
    same_manifold(&a.manifold, &b.manifold)?;
    let mut out = vec![0.0; a.coords.len()];
    transport_raw(
        &a.manifold,
        v.coords.as_slice(),
        a.coords.as_slice(),
        b.coords.as_slice(),
        &mut out,
    )?;
    Ok(TangentVector {
        base: b.clone(),
        coords: Vector::from_vec(out),
    })
}

fn frame_raw(m: &Manifold, a: &[f64], frame: &mut Matrix, row: usize, col: usize) {
    match m {
        Manifold::Euclidean(n) => {
            for i in 0..*n {
                frame[(row + i, col + i)] = 1.0;
            }
        }
        Manifold::Sphere(n) => {
            // Householder reflection H with H·a = -sign(a_k)·e_k, k = argmax |a_i|.
            // The columns of H other than k are orthonormal and orthogonal to a.
            let k = a
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > a[best].abs() { i } else { best });
            let sign = if a[k] >= 0.0 { 1.0 } else { -1.0 };
            let mut u = a.to_vec();
            u[k] += sign;
            let uu = dot(&u, &u);
            let mut c = col;
            for j in 0..=*n {
                if j == k {
                    continue;
                }
                for i in 0..=*n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    frame[(row + i, c)] = e - 2.0 * u[i] * u[j] / uu;
                }
                c += 1;
            }
        }
        Manifold::Product(_) => {
            for s in m.slots() {
                let r = s.ambient_offset..s.ambient_offset + s.manifold.ambient_dim();
                frame_raw(s.manifold, &a[r], frame, row + s.ambient_offset, col + s.intrinsic_offset);
            }
        }
    }
}

/// Deterministic orthonormal basis of `T_a`.
///
/// Canonical axes for `ℝⁿ`; for `Sⁿ`, the Householder complement of `a` keyed on
/// its largest-magnitude coordinate; block-diagonal for products.
pub fn tangent_basis(a: &ManifoldPoint) -> TangentBasis {
    let m = &a.manifold;
    let mut frame = Matrix::zeros(m.ambient_dim(), m.intrinsic_dim());
    frame_raw(m, a.coords.as_slice(), &mut frame, 0, 0);
    TangentBasis {
        base: a.clone(),
        frame,
    }
}

/// Intrinsic coordinates of `v` in `basis`.
pub fn to_coords(v: &TangentVector, basis: &TangentBasis) -> Result<Vector> {
    check_base(&basis.base, v)?;
    Ok(basis.frame.transpose() * &v.coords)
}

/// Tangent vector with intrinsic coordinates `c` in `basis`.
pub fn from_coords(c: &Vector, basis: &TangentBasis) -> Result<TangentVector> {
    if c.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: c.len(),
        });
    }
    Ok(TangentVector {
        base: basis.base.clone(),
        coords: &basis.frame * c,
    })
}

/// Orthogonal matrix `T` mapping `basis_a` coordinates at `a` to `basis_b`
/// coordinates at `b` under parallel transport.
pub fn transport_matrix(
    a: &ManifoldPoint,
    b: &ManifoldPoint,
    basis_a: &TangentBasis,
    basis_b: &TangentBasis,
) -> Result<Matrix> {
    if basis_a.base != *a || basis_b.base != *b {
        return Err(Error::BaseMismatch);
    }
    let n = basis_a.len();
    let mut moved = Matrix::zeros(a.manifold.ambient_dim(), n);
    let mut out = vec![0.0; a.coords.len()];
    for j in 0..n {
        let col: Vec<f64> = basis_a.frame.column(j).iter().copied().collect();
        transport_raw(&a.manifold, &col, a.coords.as_slice(), b.coords.as_slice(), &mut out)?;
        moved.set_column(j, &Vector::from_column_slice(&out));
    }
    Ok(basis_b.frame.transpose() * moved)
}

/// Parallel transport of a symmetric bilinear form: `P = Σ λᵢ vᵢvᵢᵀ` maps to
/// `Σ λᵢ PT(vᵢ)PT(vᵢ)ᵀ`.
pub fn parallel_transport_cov(
    p: &Matrix,
    a: &ManifoldPoint,
    b: &ManifoldPoint,
    basis_a: &TangentBasis,
    basis_b: &TangentBasis,
) -> Result<Matrix> {
    let n = a.manifold.intrinsic_dim();
    check_square(p, n)?;
    check_symmetric(p)?;
    same_manifold(&a.manifold, &b.manifold)?;
    if basis_a.base != *a || basis_b.base != *b {
        return Err(Error::BaseMismatch);
    }
    if a.manifold.is_flat() {
        // Canonical bases and identity transport.
        return Ok(symmetrize(p));
    }
    let (values, vectors) = sym_eigen(p);
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let v = from_coords(&vectors.column(i).into_owned(), basis_a)?;
        let moved = parallel_transport_vec(&v, a, b)?;
        let d = to_coords(&moved, basis_b)?;
        out += values[i] * &d * d.transpose();
    }
    Ok(symmetrize(&out))
}

/// Convenience: transport `p` between the deterministic bases of `a` and `b`.
pub fn transport_cov_between(p: &Matrix, a: &ManifoldPoint, b: &ManifoldPoint) -> Result<Matrix> {
    if a == b {
        return Ok(p.clone());
    }
    parallel_transport_cov(p, a, b, &tangent_basis(a), &tangent_basis(b))
}

impl ManifoldPoint {
    /// `p` with each sphere factor negated where it lies in the opposite
    /// hemisphere from `self`. Useful when antipodal points represent the same
    /// physical state, as for unit quaternions.
    pub fn align_antipodal(&self, p: &ManifoldPoint) -> Result<ManifoldPoint> {
        same_manifold(&self.manifold, &p.manifold)?;
        let mut coords = p.coords.clone();
        for s in self.manifold.slots() {
            if let Manifold::Sphere(_) = s.manifold {
                let n = s.manifold.ambient_dim();
                if self.coords.rows(s.ambient_offset, n).dot(&coords.rows(s.ambient_offset, n)) < 0.0 {
                    coords.rows_mut(s.ambient_offset, n).neg_mut();
                }
            }
        }
        Ok(ManifoldPoint {
            manifold: p.manifold.clone(),
            coords,
        })
    }

    pub fn exp(&self, v: &TangentVector) -> Result<ManifoldPoint> {
        exp_map(self, v)
    }

    pub fn log(&self, b: &ManifoldPoint) -> Result<TangentVector> {
        log_map(self, b)
    }

    pub fn distance(&self, b: &ManifoldPoint) -> Result<f64> {
        distance(self, b)
    }

    /// `exp` of the tangent vector with intrinsic coordinates `c` in the
    /// deterministic basis here.
    pub fn exp_coords(&self, c: &Vector) -> Result<ManifoldPoint> {
        let v = from_coords(c, &tangent_basis(self))?;
        exp_map(self, &v)
    }

    /// Intrinsic coordinates of `log_self(b)` in the deterministic basis here.
    pub fn log_coords(&self, b: &ManifoldPoint) -> Result<Vector> {
        let v = log_map(self, b)?;
        to_coords(&v, &tangent_basis(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn s2(c: [f64; 3]) -> ManifoldPoint {
        Manifold::sphere(2).point(c.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_exp_and_log() {
        let r2 = Manifold::euclidean(2);
        let a = r2.point(vec![1.0, 2.0]).unwrap();
        let v = a.tangent(vec![0.5, -1.0]).unwrap();
        assert_eq!(exp_map(&a, &v).unwrap().coords().as_slice(), &[1.5, 1.0]);

        let r3 = Manifold::euclidean(3);
        let o = r3.point(vec![0.0; 3]).unwrap();
        let b = r3.point(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(log_map(&o, &b).unwrap().coords().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn sphere_quarter_circle() {
        let pole = s2([0.0, 0.0, 1.0]);
        let v = pole.tangent(vec![FRAC_PI_2, 0.0, 0.0]).unwrap();
        let e = exp_map(&pole, &v).unwrap();
        assert_relative_eq!(e.coords().as_slice(), &[1.0, 0.0, 0.0][..], epsilon = 1e-15);
        let back = log_map(&pole, &s2([1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(back.coords().as_slice(), &[FRAC_PI_2, 0.0, 0.0][..], epsilon = 1e-15);
    }

    #[test]
    fn sphere_zero_vector_and_self_log() {
        let pole = s2([0.0, 0.0, 1.0]);
        assert_eq!(exp_map(&pole, &pole.zero_vector()).unwrap(), pole);
        assert_eq!(log_map(&pole, &pole).unwrap().norm(), 0.0);
    }

    #[test]
    fn exp_rejects_cut_locus_length() {
        let pole = s2([0.0, 0.0, 1.0]);
        let v = pole.tangent(vec![PI, 0.0, 0.0]).unwrap();
        assert!(matches!(
            exp_map(&pole, &v),
            Err(Error::OutsideInjectiveDomain { .. })
        ));
    }

    #[test]
    fn exp_rejects_foreign_base() {
        let pole = s2([0.0, 0.0, 1.0]);
        let other = s2([1.0, 0.0, 0.0]);
        let v = other.tangent(vec![0.0, 0.1, 0.0]).unwrap();
        assert_eq!(exp_map(&pole, &v), Err(Error::BaseMismatch));
    }

    #[test]
    fn log_rejects_antipode() {
        let pole = s2([0.0, 0.0, 1.0]);
        let south = s2([0.0, 0.0, -1.0]);
        assert!(matches!(log_map(&pole, &south), Err(Error::CutLocus { .. })));
    }

    #[test]
    fn distances() {
        assert_relative_eq!(distance(&s2([0.0, 0.0, 1.0]), &s2([0.0, 0.0, -1.0])).unwrap(), PI);
        let r2 = Manifold::euclidean(2);
        let d = distance(&r2.point(vec![1.0, 1.0]).unwrap(), &r2.point(vec![4.0, 5.0]).unwrap());
        assert_relative_eq!(d.unwrap(), 5.0);
        let prod = Manifold::product(vec![Manifold::euclidean(1), Manifold::sphere(2)]);
        let a = prod.point(vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let b = prod.point(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(distance(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn distance_rejects_mismatch() {
        let a = Manifold::euclidean(3).point(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            distance(&a, &s2([0.0, 0.0, 1.0])),
            Err(Error::ManifoldMismatch { .. })
        ));
    }

    #[test]
    fn small_angle_log_is_accurate() {
        let pole = s2([0.0, 0.0, 1.0]);
        for &t in &[1e-12, 1e-9, 1e-7, 1e-4] {
            let v = pole.tangent(vec![t, 0.0, 0.0]).unwrap();
            let b = exp_map(&pole, &v).unwrap();
            let back = log_map(&pole, &b).unwrap();
            assert!((back.coords()[0] - t).abs() <= 1e-16 + 1e-9 * t, "t = {t}");
        }
    }

    #[test]
    fn transport_examples() {
        let r2 = Manifold::euclidean(2);
        let a = r2.point(vec![0.0, 0.0]).unwrap();
        let b = r2.point(vec![5.0, 5.0]).unwrap();
        let v = a.tangent(vec![1.0, 0.0]).unwrap();
        let t = parallel_transport_vec(&v, &a, &b).unwrap();
        assert_eq!(t.coords().as_slice(), &[1.0, 0.0]);
        assert_eq!(t.base(), &b);

        let pole = s2([0.0, 0.0, 1.0]);
        let eq = s2([1.0, 0.0, 0.0]);
        let side = pole.tangent(vec![0.0, 1.0, 0.0]).unwrap();
        let t = parallel_transport_vec(&side, &pole, &eq).unwrap();
        assert_relative_eq!(t.coords().as_slice(), &[0.0, 1.0, 0.0][..], epsilon = 1e-15);

        let along = pole.tangent(vec![FRAC_PI_2, 0.0, 0.0]).unwrap();
        let t = parallel_transport_vec(&along, &pole, &eq).unwrap();
        assert_relative_eq!(t.coords().as_slice(), &[0.0, 0.0, -FRAC_PI_2][..], epsilon = 1e-15);
    }

    /// Independent oracle: transport by many small steps, each re-projecting the
    /// vector onto the next tangent plane (first-order Levi-Civita connection).
    #[test]
    fn transport_matches_stepwise_projection() {
        let pole = s2([0.0, 0.0, 1.0]);
        let eq = s2([1.0, 0.0, 0.0]);
        let along = pole.tangent(vec![FRAC_PI_2, 0.0, 0.0]).unwrap();
        let dir = log_map(&pole, &eq).unwrap();
        let steps = 20000;
        let mut v = along.coords().clone();
        for k in 1..=steps {
            let p = exp_map(&pole, &dir.scale(k as f64 / steps as f64)).unwrap();
            let c = p.coords();
            v -= c * c.dot(&v);
            v *= FRAC_PI_2 / v.norm();
        }
        let closed = parallel_transport_vec(&along, &pole, &eq).unwrap();
        assert!((closed.coords() - v).norm() < 1e-3);
    }

    #[test]
    fn bases() {
        let r2 = Manifold::euclidean(2);
        let b = tangent_basis(&r2.point(vec![3.0, -1.0]).unwrap());
        assert_eq!(b.frame(), &Matrix::identity(2, 2));

        let pole = s2([0.0, 0.0, 1.0]);
        let b = tangent_basis(&pole);
        assert_eq!(b.len(), 2);
        assert_relative_eq!(b.frame().transpose() * b.frame(), Matrix::identity(2, 2), epsilon = 1e-15);
        for v in b.vectors() {
            assert_eq!(v.coords()[2], 0.0);
        }
        let c = Vector::from_vec(vec![FRAC_PI_2, 0.0]);
        let v = from_coords(&c, &b).unwrap();
        assert_relative_eq!(v.coords(), &(b.vector(0).coords() * FRAC_PI_2));
        assert_relative_eq!(to_coords(&v, &b).unwrap(), c, epsilon = 1e-15);
        assert_relative_eq!(v.norm(), FRAC_PI_2, epsilon = 1e-15);

        let prod = Manifold::product(vec![Manifold::euclidean(1), Manifold::sphere(2)]);
        let p = prod.point(vec![0.5, 0.0, 0.6, 0.8]).unwrap();
        let b = tangent_basis(&p);
        assert_eq!(b.len(), 3);
        assert_relative_eq!(b.frame().transpose() * b.frame(), Matrix::identity(3, 3), epsilon = 1e-15);
        assert!((b.frame().transpose() * p.coords()).rows(1, 2).norm() < 1e-15);
    }

    #[test]
    fn coords_zero_roundtrip() {
        let p = s2([0.6, 0.0, 0.8]);
        let b = tangent_basis(&p);
        assert_eq!(to_coords(&p.zero_vector(), &b).unwrap(), Vector::zeros(2));
        assert_eq!(from_coords(&Vector::zeros(2), &b).unwrap().norm(), 0.0);
        assert!(matches!(
            from_coords(&Vector::zeros(3), &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transport_cov_examples() {
        let r2 = Manifold::euclidean(2);
        let a = r2.point(vec![0.0, 0.0]).unwrap();
        let b = r2.point(vec![1.0, 7.0]).unwrap();
        let p = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(transport_cov_between(&p, &a, &b).unwrap(), p);

        let pole = s2([0.0, 0.0, 1.0]);
        let eq = s2([1.0, 0.0, 0.0]);
        let iso = Matrix::identity(2, 2) * 0.7;
        let out = transport_cov_between(&iso, &pole, &eq).unwrap();
        assert_relative_eq!(out, iso, epsilon = 1e-14);

        // diag(4, 1): compare with transporting each eigenvector individually.
        let p = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 1.0]));
        let (ba, bb) = (tangent_basis(&pole), tangent_basis(&eq));
        let out = parallel_transport_cov(&p, &pole, &eq, &ba, &bb).unwrap();
        let mut expected = Matrix::zeros(2, 2);
        for (i, lam) in [4.0, 1.0].iter().enumerate() {
            let moved = parallel_transport_vec(&ba.vector(i), &pole, &eq).unwrap();
            let d = to_coords(&moved, &bb).unwrap();
            expected += *lam * &d * d.transpose();
        }
        assert_relative_eq!(out, expected, epsilon = 1e-14);
        let (vals, _) = sym_eigen(&out);
        assert_relative_eq!(vals.as_slice(), &[1.0, 4.0][..], epsilon = 1e-12);
    }

    #[test]
    fn transport_cov_rejects_asymmetric() {
        let pole = s2([0.0, 0.0, 1.0]);
        let p = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let b = tangent_basis(&pole);
        assert!(matches!(
            parallel_transport_cov(&p, &pole, &pole, &b, &b),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn transport_matrix_agrees_with_eigen_route() {
        let a = s2([0.0, 0.6, 0.8]);
        let b = s2([0.48, 0.6, 0.64]);
        let (ba, bb) = (tangent_basis(&a), tangent_basis(&b));
        let t = transport_matrix(&a, &b, &ba, &bb).unwrap();
        let p = Matrix::from_row_slice(2, 2, &[3.0, 0.4, 0.4, 0.5]);
        let via_eigen = parallel_transport_cov(&p, &a, &b, &ba, &bb).unwrap();
        assert_relative_eq!(&t * &p * t.transpose(), via_eigen, epsilon = 1e-13);
        assert_relative_eq!(t.transpose() * &t, Matrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn point_validation() {
        assert!(Manifold::sphere(2).point(vec![1.0, 1.0, 0.0]).is_err());
        assert!(Manifold::sphere(2).point(vec![1.0, 0.0]).is_err());
        let p = Manifold::sphere(2).project_point(vec![1.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(p.coords().norm(), 1.0, epsilon = 1e-15);
        let pole = s2([0.0, 0.0, 1.0]);
        assert!(pole.tangent(vec![0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn descriptor_properties() {
        let prod = Manifold::product(vec![Manifold::euclidean(1), Manifold::sphere(3)]);
        assert_eq!(prod.intrinsic_dim(), 4);
        assert_eq!(prod.ambient_dim(), 5);
        assert_eq!(prod.injectivity_radius(), PI);
        assert_eq!(prod.curvature_bound(), 1.0);
        assert_relative_eq!(prod.sigma_radius(), FRAC_PI_2);
        assert_eq!(Manifold::euclidean(4).sigma_radius(), f64::INFINITY);
    }
}

//! Unit quaternions `[η, ε]` and their identification with points of `S³`.

use nalgebra::Quaternion;
use riukf_core::{Manifold, ManifoldPoint, Result};

/// Hamilton product `q₁ ⊗ q₂`, renormalized.
pub fn quat_mul(q1: &Quaternion<f64>, q2: &Quaternion<f64>) -> Quaternion<f64> {
    (q1 * q2).normalize()
}

/// Conjugate, the inverse of a unit quaternion.
pub fn quat_inv(q: &Quaternion<f64>) -> Quaternion<f64> {
    q.conjugate()
}

/// Rotation by `angle` about the unit `axis`.
pub fn axis_angle(axis: [f64; 3], angle: f64) -> Quaternion<f64> {
    let (s, c) = (0.5 * angle).sin_cos();
    Quaternion::new(c, s * axis[0], s * axis[1], s * axis[2])
}

/// Coordinates in the order `[η, ε₁, ε₂, ε₃]`.
pub fn to_array(q: &Quaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

pub fn from_array(a: [f64; 4]) -> Quaternion<f64> {
    Quaternion::new(a[0], a[1], a[2], a[3])
}

pub fn s3() -> Manifold {
    Manifold::sphere(3)
}

pub fn to_point(q: &Quaternion<f64>) -> Result<ManifoldPoint> {
    s3().project_point(to_array(q).to_vec())
}

pub fn from_point(p: &ManifoldPoint) -> Quaternion<f64> {
    let c = p.coords();
    Quaternion::new(c[0], c[1], c[2], c[3])
}

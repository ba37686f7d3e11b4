//! Quaternion and rigid-transform algebra.
//!
//! Quaternions are stored scalar-first, `[w, x, y, z]`, and every 4-vector in
//! the filter uses the same order. Products are evaluated through the 4×4
//! left/right multiplication matrices so that the filter's measurement matrix
//! is built from exactly the same primitives.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|q| - 1` accepted by operations that require a rotation.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Skew-symmetric cross-product matrix, `skew(a) * b == a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    /// Real part.
    pub w: f64,
    /// Vector part.
    pub v: Vector3<f64>,
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self {
            w,
            v: Vector3::new(x, y, z),
        }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion `[0, v]`.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self { w: 0.0, v }
    }

    pub fn from_vector4(q: &Vector4<f64>) -> Self {
        Self::new(q[0], q[1], q[2], q[3])
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.v.x, self.v.y, self.v.z)
    }

    /// Unit quaternion for a rotation of `angle` radians about `axis`.
    /// The axis does not need to be normalized; a zero axis yields identity.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        canonical(Self {
            w: c,
            v: axis * (s / n),
        })
    }

    /// Matrix `L(a)` with `a ⊙ b = L(a) b`.
    pub fn left_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = self.w;
        let block = skew(&self.v) + Matrix3::identity() * self.w;
        for i in 0..3 {
            m[(0, i + 1)] = -self.v[i];
            m[(i + 1, 0)] = self.v[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] = block[(i, j)];
            }
        }
        m
    }

    /// Matrix `R(b)` with `a ⊙ b = R(b) a`.
    pub fn right_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = self.w;
        let block = Matrix3::identity() * self.w - skew(&self.v);
        for i in 0..3 {
            m[(0, i + 1)] = -self.v[i];
            m[(i + 1, 0)] = self.v[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] = block[(i, j)];
            }
        }
        m
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.v.norm_squared()).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    fn require_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::NonUnitQuaternion(self.norm()))
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            w: self.w * s,
            v: self.v * s,
        }
    }

    /// Sign-flipped copy; `q` and `-q` encode the same rotation.
    pub fn negated(&self) -> Self {
        self.scale(-1.0)
    }

    /// Builds a unit quaternion from a rotation matrix using the branch with
    /// the largest diagonal term, which stays well conditioned for rotations
    /// close to π.
    pub fn from_rotation_matrix(r: &Matrix3<f64>) -> Self {
        let trace = r.trace();
        let candidates = [trace, r[(0, 0)], r[(1, 1)], r[(2, 2)]];
        let branch = candidates
            .iter()
            .enumerate()
            .fold(0, |best, (i, &c)| if c > candidates[best] { i } else { best });
        let q = match branch {
            0 => {
                let s = 2.0 * (1.0 + trace).sqrt();
                Self::new(
                    0.25 * s,
                    (r[(2, 1)] - r[(1, 2)]) / s,
                    (r[(0, 2)] - r[(2, 0)]) / s,
                    (r[(1, 0)] - r[(0, 1)]) / s,
                )
            }
            1 => {
                let s = 2.0 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
                Self::new(
                    (r[(2, 1)] - r[(1, 2)]) / s,
                    0.25 * s,
                    (r[(0, 1)] + r[(1, 0)]) / s,
                    (r[(0, 2)] + r[(2, 0)]) / s,
                )
            }
            2 => {
                let s = 2.0 * (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).sqrt();
                Self::new(
                    (r[(0, 2)] - r[(2, 0)]) / s,
                    (r[(0, 1)] + r[(1, 0)]) / s,
                    0.25 * s,
                    (r[(1, 2)] + r[(2, 1)]) / s,
                )
            }
            _ => {
                let s = 2.0 * (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).sqrt();
                Self::new(
                    (r[(1, 0)] - r[(0, 1)]) / s,
                    (r[(0, 2)] + r[(2, 0)]) / s,
                    (r[(1, 2)] + r[(2, 1)]) / s,
                    0.25 * s,
                )
            }
        };
        // The matrix may be only approximately orthonormal.
        canonical(q.scale(1.0 / q.norm()))
    }

    /// Intrinsic X-Y-Z Euler angles in radians: `R = Rx(rx) · Ry(ry) · Rz(rz)`.
    pub fn from_euler_xyz(rx: f64, ry: f64, rz: f64) -> Self {
        let qx = Self::from_axis_angle(&Vector3::x(), rx);
        let qy = Self::from_axis_angle(&Vector3::y(), ry);
        let qz = Self::from_axis_angle(&Vector3::z(), rz);
        canonical(quat_mul(&quat_mul(&qx, &qy), &qz))
    }

    /// Inverse of [`Quaternion::from_euler_xyz`]. Requires a unit quaternion.
    pub fn to_euler_xyz(&self) -> Result<Vector3<f64>> {
        let r = quat_to_rotmat(self)?;
        Ok(rotmat_to_euler_xyz(&r))
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.v.norm().atan2(self.w.abs())
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        quat_mul(&self, &rhs)
    }
}

/// Flips the sign so that the real part is non-negative.
pub fn canonical(q: Quaternion) -> Quaternion {
    if q.w < 0.0 {
        q.negated()
    } else {
        q
    }
}

/// Hamilton product `a ⊙ b`.
pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    Quaternion::from_vector4(&(a.left_matrix() * b.to_vector4()))
}

pub fn quat_conj(a: &Quaternion) -> Quaternion {
    Quaternion { w: a.w, v: -a.v }
}

/// Scales to unit length and canonicalizes the sign (`w >= 0`).
pub fn quat_normalize(a: &Quaternion) -> Result<Quaternion> {
    let n = a.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateQuaternion);
    }
    Ok(canonical(a.scale(1.0 / n)))
}

/// Rotates `v` by the unit quaternion `a` as `a ⊙ [0, v] ⊙ a*`.
pub fn quat_rotate(a: &Quaternion, v: &Vector3<f64>) -> Result<Vector3<f64>> {
    a.require_unit()?;
    Ok(quat_mul(&quat_mul(a, &Quaternion::pure(*v)), &quat_conj(a)).v)
}

pub fn quat_to_rotmat(a: &Quaternion) -> Result<Matrix3<f64>> {
    a.require_unit()?;
    Ok(rotmat_unchecked(a))
}

fn rotmat_unchecked(a: &Quaternion) -> Matrix3<f64> {
    let (w, x, y, z) = (a.w, a.v.x, a.v.y, a.v.z);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Intrinsic X-Y-Z Euler angles of a rotation matrix, in radians.
pub fn rotmat_to_euler_xyz(r: &Matrix3<f64>) -> Vector3<f64> {
    let ry = r[(0, 2)].clamp(-1.0, 1.0).asin();
    if r[(0, 2)].abs() < 1.0 - 1e-12 {
        Vector3::new(
            (-r[(1, 2)]).atan2(r[(2, 2)]),
            ry,
            (-r[(0, 1)]).atan2(r[(0, 0)]),
        )
    } else {
        // Gimbal lock: only rx ± rz is observable; put it all in rx.
        Vector3::new(r[(2, 1)].atan2(r[(1, 1)]), ry, 0.0)
    }
}

/// Rigid transform `p ↦ R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Quaternion, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Quaternion::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Quaternion::identity(), t)
    }

    pub fn from_rotation(q: Quaternion) -> Self {
        Self::new(q, Vector3::zeros())
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotmat_unchecked(&self.rotation)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation_matrix());
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        h
    }

    /// Parses a homogeneous matrix. The bottom row must be `[0 0 0 1]` and the
    /// rotation block must be orthonormal within [`UNIT_TOLERANCE`].
    pub fn from_matrix(h: &Matrix4<f64>) -> Result<Self> {
        let bottom = h.fixed_view::<1, 4>(3, 0);
        if (bottom - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).norm() > 1e-12 {
            return Err(Error::InvalidArgument(
                "homogeneous matrix bottom row must be [0 0 0 1]".into(),
            ));
        }
        let r: Matrix3<f64> = h.fixed_view::<3, 3>(0, 0).into_owned();
        if (r.transpose() * r - Matrix3::identity()).norm() > UNIT_TOLERANCE
            || r.determinant() < 0.0
        {
            return Err(Error::InvalidArgument(
                "rotation block is not a proper rotation".into(),
            ));
        }
        Ok(Self::new(
            Quaternion::from_rotation_matrix(&r),
            h.fixed_view::<3, 1>(0, 3).into_owned(),
        ))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        let rotation = canonical(quat_mul(&self.rotation, &other.rotation));
        Pose::new(
            rotation,
            self.rotation_matrix() * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rotation = quat_conj(&self.rotation);
        let r_inv = self.rotation_matrix().transpose();
        Pose::new(canonical(rotation), -(r_inv * self.translation))
    }
}

/// Change between two poses: geodesic angle of `p1⁻¹ ∘ p2` (radians, in
/// `[0, π]`) and Euclidean distance between the translations (meters).
pub fn pose_delta(p1: &Pose, p2: &Pose) -> (f64, f64) {
    let relative = quat_mul(&quat_conj(&p1.rotation), &p2.rotation);
    (relative.angle(), (p1.translation - p2.translation).norm())
}

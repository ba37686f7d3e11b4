use serde::{Deserialize, Serialize};

use super::{Point3, TriangleMesh};
use crate::error::{Error, Result};
use crate::quat::Pose;

/// Slack on barycentric bounds so that edge and vertex hits count.
const EDGE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Point3,
    direction: Point3,
}

impl Ray {
    /// Normalizes `direction`; zero or non-finite directions are rejected.
    pub fn new(origin: Point3, direction: Point3) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("ray direction must be nonzero".into()));
        }
        Ok(Self {
            origin,
            direction: direction / n,
        })
    }

    pub fn direction(&self) -> &Point3 {
        &self.direction
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.direction * t
    }

    pub fn transformed(&self, pose: &Pose) -> Ray {
        Ray {
            origin: pose.transform_point(&self.origin),
            direction: pose.rotation_matrix() * self.direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Point3,
    pub t: f64,
    pub triangle: usize,
}

/// Möller–Trumbore. Returns the ray parameter of a hit with `t >= 0`.
pub fn ray_triangle_intersect(ray: &Ray, tri: &[Point3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= 1e-14 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some(t)
}

/// First hit of `ray` against `mesh` placed at `pose`.
pub fn ray_mesh_intersect(ray: &Ray, mesh: &TriangleMesh, pose: &Pose) -> Option<Hit> {
    // Intersect in the mesh frame; t is preserved by rigid motions.
    let local = ray.transformed(&pose.inverse());
    let mut best: Option<(f64, usize)> = None;
    for i in 0..mesh.triangles().len() {
        if let Some(t) = ray_triangle_intersect(&local, &mesh.triangle(i)) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    best.map(|(t, triangle)| Hit {
        point: ray.at(t),
        t,
        triangle,
    })
}

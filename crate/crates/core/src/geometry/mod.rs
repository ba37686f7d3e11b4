//! Meshes, point clouds, ray casting and nearest-neighbor search.

pub(crate) mod io;
mod kdtree;
mod mesh;
mod ray;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Pose;

pub use io::{load_mesh, parse_obj, parse_ply, write_obj, write_ply};
pub use kdtree::{nearest_neighbor, SpatialIndex};
pub use mesh::{sample_surface, sample_surface_with, TriangleMesh};
pub use ray::{ray_mesh_intersect, ray_triangle_intersect, Hit, Ray};

pub type Point3 = Vector3<f64>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Result<Point3> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let sum = self.points.iter().fold(Point3::zeros(), |acc, p| acc + p);
        Ok(sum / self.points.len() as f64)
    }
}

impl From<Vec<Point3>> for PointCloud {
    fn from(points: Vec<Point3>) -> Self {
        Self { points }
    }
}

/// Applies `R p + t` to every point.
pub fn transform_cloud(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    let r = pose.rotation_matrix();
    PointCloud::new(
        cloud
            .points
            .iter()
            .map(|p| r * p + pose.translation)
            .collect(),
    )
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Bounding box of `cloud` scaled about its center by `padding` (≥ 1).
pub fn compute_aabb(cloud: &PointCloud, padding: f64) -> Result<Aabb> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(padding >= 1.0) || !padding.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bounding box padding must be >= 1, got {padding}"
        )));
    }
    let mut min = cloud.points[0];
    let mut max = cloud.points[0];
    for p in &cloud.points[1..] {
        min = min.inf(p);
        max = max.sup(p);
    }
    let center = (min + max) * 0.5;
    let half = (max - min) * (0.5 * padding);
    Ok(Aabb {
        min: center - half,
        max: center + half,
    })
}

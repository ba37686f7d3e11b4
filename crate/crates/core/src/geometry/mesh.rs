use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Aabb, Point3, PointCloud};
use crate::error::{Error, MeshError, Result};

/// Triangles smaller than this (m²) are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and triangle areas.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::NoTriangles);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if triangle_area(&vertices, tri) <= MIN_TRIANGLE_AREA {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Like [`TriangleMesh::new`] but silently drops zero-area triangles.
    pub fn new_dropping_degenerate(
        vertices: Vec<Point3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    vertex_count: vertices.len(),
                });
            }
        }
        let kept = triangles
            .into_iter()
            .filter(|tri| triangle_area(&vertices, tri) > MIN_TRIANGLE_AREA)
            .collect();
        Self::new(vertices, kept)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[i])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min = min.inf(v);
            max = max.sup(v);
        }
        Aabb { min, max }
    }

    /// Uniformly scales every vertex about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self, MeshError> {
        Self::new(
            self.vertices.iter().map(|v| v * factor).collect(),
            self.triangles.clone(),
        )
    }

    pub fn vertex_cloud(&self) -> PointCloud {
        PointCloud::new(self.vertices.clone())
    }

    /// Copy with every vertex replaced by `f(vertex)`.
    pub fn map_vertices(&self, f: impl FnMut(&Point3) -> Point3) -> Result<Self, MeshError> {
        Self::new_dropping_degenerate(
            self.vertices.iter().map(f).collect(),
            self.triangles.clone(),
        )
    }
}

fn triangle_area(vertices: &[Point3], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = *tri;
    0.5 * (vertices[b] - vertices[a])
        .cross(&(vertices[c] - vertices[a]))
        .norm()
}

/// Area-weighted uniform samples on the mesh surface, deterministic in `seed`.
pub fn sample_surface(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_surface_with(mesh, count, &mut rng)
}

pub fn sample_surface_with<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    count: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh);
    }
    let points = (0..count)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let t = cumulative
                .partition_point(|&c| c <= target)
                .min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(t);
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
        })
        .collect();
    Ok(PointCloud::new(points))
}

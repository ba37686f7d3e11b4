//! Meshes bundled with the library.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::error::{Error, MeshError, Result};
use crate::geometry::{load_mesh, parse_obj, parse_ply, write_ply, Point3, TriangleMesh};

pub const BUILTIN_PREFIX: &str = "builtin:";
pub const BUILTIN_NAMES: [&str; 3] = ["cube", "tetra", "blob"];

const CUBE_PLY: &str = include_str!("../../fixtures/cube.ply");
const TETRA_OBJ: &str = include_str!("../../fixtures/tetra.obj");

/// Ellipsoids making up the bunny-like test object: center, semi-axes, and
/// rotation about the y axis (radians).
const PARTS: [([f64; 3], [f64; 3], f64); 7] = [
    // body
    ([-0.01, 0.0, 0.0], [0.065, 0.05, 0.05], 0.0),
    // haunch
    ([-0.035, 0.0, -0.01], [0.04, 0.055, 0.045], 0.0),
    // head
    ([0.055, 0.0, 0.035], [0.032, 0.028, 0.03], 0.3),
    // ears
    ([0.035, 0.018, 0.085], [0.012, 0.01, 0.04], -0.5),
    ([0.045, -0.02, 0.078], [0.012, 0.01, 0.035], -0.2),
    // tail
    ([-0.075, 0.0, 0.015], [0.018, 0.018, 0.018], 0.0),
    // front feet
    ([0.04, 0.0, -0.045], [0.035, 0.04, 0.015], 0.0),
];
const BLOB_SUBDIVISIONS: usize = 5;

pub fn builtin_mesh(name: &str) -> Result<TriangleMesh> {
    let mesh = match name {
        "cube" => parse_ply(CUBE_PLY, Path::new("builtin:cube"))?,
        "tetra" => parse_obj(TETRA_OBJ, Path::new("builtin:tetra"))?,
        "blob" => blob()?,
        other => {
            return Err(Error::Config(format!(
                "unknown builtin mesh '{other}' (expected one of {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(mesh)
}

/// Loads `builtin:<name>` or a mesh file.
pub fn resolve_mesh(source: &str) -> Result<TriangleMesh> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin_mesh(name),
        None => Ok(load_mesh(source)?),
    }
}

/// Writes `cube.ply`, `tetra.obj` and `blob.ply` into `dir`.
pub fn export_fixtures(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = [
        ("cube.ply", CUBE_PLY.to_string()),
        ("tetra.obj", TETRA_OBJ.to_string()),
        ("blob.ply", write_ply(&blob()?)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

fn icosphere(subdivisions: usize) -> (Vec<Point3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Farthest exit of the ray `t · dir` from any part, or 0 if it misses all.
fn blob_radius(dir: &Point3) -> f64 {
    PARTS
        .iter()
        .filter_map(|(center, axes, tilt)| {
            let (s, c) = tilt.sin_cos();
            // rotate into the ellipsoid frame, then scale to the unit sphere
            let to_local = |v: &Point3| Point3::new(c * v.x - s * v.z, v.y, s * v.x + c * v.z);
            let scale = Point3::from(*axes);
            let d = to_local(dir).component_div(&scale);
            let o = to_local(&-Point3::from(*center)).component_div(&scale);
            let (a, b, k) = (d.norm_squared(), 2.0 * o.dot(&d), o.norm_squared() - 1.0);
            let disc = b * b - 4.0 * a * k;
            (disc >= 0.0).then(|| (-b + disc.sqrt()) / (2.0 * a)).filter(|t| *t > 0.0)
        })
        .fold(0.0, f64::max)
}

/// Closed, star-shaped, bunny-like test object about 15 cm across. Stands in
/// for a scanned model when none is supplied.
pub fn blob() -> Result<TriangleMesh, MeshError> {
    let (dirs, faces) = icosphere(BLOB_SUBDIVISIONS);
    let vertices = dirs.iter().map(|d| d * blob_radius(d)).collect();
    TriangleMesh::new(vertices, faces)
}

use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading a mesh file.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unsupported mesh extension {0:?} (expected .ply or .obj)")]
    UnknownExtension(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("triangle {triangle} references vertex {index} but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("mesh contains no triangles")]
    NoTriangles,
    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate quaternion (zero norm)")]
    DegenerateQuaternion,
    #[error("quaternion is not unit length (norm {0})")]
    NonUnitQuaternion(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point clouds differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("mesh has zero total surface area")]
    DegenerateMesh,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("covariance is not symmetric positive definite")]
    NotSpd,
    #[error("renyi divergence is undefined at alpha = 1; use kl_div instead")]
    RenyiAlphaOne,
    #[error("renyi alpha must be finite and positive, got {0}")]
    InvalidAlpha(f64),
    #[error("eigendecomposition failed")]
    Eigen,
    #[error("measurement pair is degenerate (difference below {0} m)")]
    DegeneratePair(f64),
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("registration needs at least {needed} scene points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("every measurement pair is degenerate")]
    AllPairsDegenerate,
    #[error("bounding box has zero extent along axis {0}")]
    DegenerateBox(usize),
    #[error("no candidate actions")]
    NoActions,
    #[error("every candidate action missed or was rejected")]
    AllActionsRejected,
    #[error("config error: {0}")]
    Config(String),
    #[error("unreachable object: no touch hit the object")]
    UnreachableObject,
    #[error("every run in the sweep failed: {0}")]
    SweepFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

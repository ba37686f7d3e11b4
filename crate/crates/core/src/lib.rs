//! Active tactile object-pose estimation.
//!
//! A translation-invariant quaternion Kalman filter registers sparse,
//! sequentially acquired contact points against a known object model, and a
//! next-best-touch selector ranks candidate probing rays by the closed-form
//! divergence between the current rotation belief and its one-step
//! look-ahead posterior.
//!
//! - [`quat`]: quaternion and rigid-transform algebra
//! - [`geometry`]: meshes, clouds, ray casting, exact nearest neighbors
//! - [`gaussian`]: Gaussian beliefs and the divergence criteria
//! - [`filter`]: the quaternion filter and the registration loop
//! - [`active`]: candidate touches, look-ahead and selection
//! - [`sim`]: the simulated experiment harness, metrics and output files

pub mod active;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod geometry;
pub mod par;
pub mod quat;
pub mod sim;

pub use error::{Error, MeshError, Result};
pub use par::Parallelism;

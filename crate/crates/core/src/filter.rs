//! Translation-invariant quaternion filter.
//!
//! Rotation is estimated by a linear Kalman filter whose state is a unit
//! quaternion. Each measurement is a pair of scene points and their model
//! correspondences; differencing the pair removes the translation, and the
//! constraint `s_ji = R o_ji` becomes a linear pseudo-measurement `H x = 0`.
//! Translation is recovered in closed form once the rotation is known, and
//! correspondences are re-estimated in an ICP-style outer loop.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianNd, MIN_EIGENVALUE};
use crate::geometry::{PointCloud, SpatialIndex};
use crate::quat::{canonical, pose_delta, quat_to_rotmat, skew, Pose, Quaternion};

/// Minimum length (m) of both difference vectors in a measurement pair.
pub const PAIR_EPSILON: f64 = 1e-6;
pub const DEFAULT_RHO: f64 = 1e-2;
pub const DEFAULT_INITIAL_COV_SCALE: f64 = 1e4;

/// Gaussian belief over the rotation quaternion `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

impl FilterState {
    /// Normalizes the mean (scaling the covariance accordingly) and fixes the
    /// sign so that the real part is non-negative.
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        let n = mean.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateQuaternion);
        }
        let sign = if mean[0] < 0.0 { -1.0 } else { 1.0 };
        let cov = cov / (n * n);
        Ok(Self {
            mean: mean * (sign / n),
            cov: (cov + cov.transpose()) * 0.5,
        })
    }

    /// Belief centred on `rotation` with isotropic covariance `scale · I₄`.
    pub fn isotropic(rotation: &Quaternion, scale: f64) -> Self {
        let q = canonical(rotation.scale(1.0 / rotation.norm()));
        Self {
            mean: q.to_vector4(),
            cov: Matrix4::identity() * scale,
        }
    }

    pub fn rotation(&self) -> Quaternion {
        Quaternion::from_vector4(&self.mean)
    }

    pub fn to_gaussian(&self) -> GaussianNd {
        GaussianNd {
            mean: DVector::from_column_slice(self.mean.as_slice()),
            cov: DMatrix::from_column_slice(4, 4, self.cov.as_slice()),
        }
    }
}

/// Translation-free measurement: a scene difference and the matching model
/// difference, related by `scene_diff = R · model_diff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPair {
    pub scene_diff: Vector3<f64>,
    pub model_diff: Vector3<f64>,
}

impl MeasurementPair {
    pub fn new(scene_diff: Vector3<f64>, model_diff: Vector3<f64>) -> Result<Self> {
        if scene_diff.norm() <= PAIR_EPSILON || model_diff.norm() <= PAIR_EPSILON {
            return Err(Error::DegeneratePair(PAIR_EPSILON));
        }
        Ok(Self {
            scene_diff,
            model_diff,
        })
    }

    /// Pair from two correspondences `(s_i, o_i)` and `(s_j, o_j)`.
    pub fn from_correspondences(
        s_i: &Vector3<f64>,
        o_i: &Vector3<f64>,
        s_j: &Vector3<f64>,
        o_j: &Vector3<f64>,
    ) -> Result<Self> {
        Self::new(s_j - s_i, o_j - o_i)
    }
}

/// Pseudo-measurement matrix `H = L(s̃) − R(õ)`, whose null space contains
/// the true rotation quaternion.
pub fn build_h(pair: &MeasurementPair) -> Matrix4<f64> {
    let diff = pair.scene_diff - pair.model_diff;
    let sum = pair.scene_diff + pair.model_diff;
    let block: Matrix3<f64> = skew(&sum);
    let mut h = Matrix4::zeros();
    for i in 0..3 {
        h[(0, i + 1)] = -diff[i];
        h[(i + 1, 0)] = diff[i];
        for j in 0..3 {
            h[(i + 1, j + 1)] = block[(i, j)];
        }
    }
    h
}

/// State-dependent pseudo-measurement covariance
/// `¼ρ [tr(x̄x̄ᵀ + Σ̄) I₄ − (x̄x̄ᵀ + Σ̄)]`.
pub fn measurement_noise(state: &FilterState, rho: f64) -> Matrix4<f64> {
    let p = state.mean * state.mean.transpose() + state.cov;
    let m = (Matrix4::identity() * p.trace() - p) * (0.25 * rho);
    (m + m.transpose()) * 0.5
}

/// One Kalman step before and after re-normalization.
#[derive(Debug, Clone, Copy)]
pub struct KalmanStep {
    pub prior: FilterState,
    /// `(I − K H) Σ̄`, before the mean is projected back to unit length.
    pub updated_cov: Matrix4<f64>,
    /// Updated mean before projection.
    pub updated_mean: Vector4<f64>,
    /// Normalized, sign-canonical posterior.
    pub posterior: FilterState,
}

pub fn kalman_update(state: &FilterState, pair: &MeasurementPair, rho: f64) -> Result<FilterState> {
    kalman_step(state, pair, rho).map(|s| s.posterior)
}

/// Kalman update with the pseudo-measurement `z = 0`, then normalization.
pub fn kalman_step(state: &FilterState, pair: &MeasurementPair, rho: f64) -> Result<KalmanStep> {
    let h = build_h(pair);
    let r = measurement_noise(state, rho);
    let ph = state.cov * h.transpose();
    let s = h * ph + r;
    let s = (s + s.transpose()) * 0.5;
    let chol = match s.cholesky() {
        Some(c) => c,
        None => {
            let min = s.symmetric_eigenvalues().min();
            (s + Matrix4::identity() * (MIN_EIGENVALUE - min.min(0.0)))
                .cholesky()
                .ok_or(Error::SingularInnovation)?
        }
    };
    // K = Σ Hᵀ S⁻¹, computed as (S⁻¹ H Σ)ᵀ
    let gain = chol.solve(&ph.transpose()).transpose();
    let innovation = h * state.mean;
    let updated_mean = state.mean - gain * innovation;
    let updated_cov = (Matrix4::identity() - gain * h) * state.cov;
    let updated_cov = (updated_cov + updated_cov.transpose()) * 0.5;
    let posterior = FilterState::new(updated_mean, updated_cov)?;
    Ok(KalmanStep {
        prior: *state,
        updated_cov,
        updated_mean,
        posterior,
    })
}

/// `t = mean(scene) − R · mean(model)` over index-aligned correspondences.
pub fn estimate_translation(
    scene: &PointCloud,
    model: &PointCloud,
    rotation: &Matrix3<f64>,
) -> Result<Vector3<f64>> {
    if scene.len() != model.len() {
        return Err(Error::LengthMismatch(scene.len(), model.len()));
    }
    Ok(scene.centroid()? - rotation * model.centroid()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Correspondence uncertainty in the pseudo-measurement noise.
    pub rho: f64,
    pub max_iterations: usize,
    /// Rotation change (rad) below which the loop may stop.
    pub rotation_tolerance: f64,
    /// Translation change (m) below which the loop may stop.
    pub translation_tolerance: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            max_iterations: 50,
            rotation_tolerance: 1e-4,
            translation_tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub pose: Pose,
    pub state: FilterState,
    pub iterations: usize,
    pub converged: bool,
}

/// Model point index matched to each scene point under `pose`.
pub fn correspond(scene: &PointCloud, index: &SpatialIndex, pose: &Pose) -> Vec<usize> {
    let inv = pose.inverse();
    scene
        .points
        .iter()
        .map(|s| index.nearest(&inv.transform_point(s)).0)
        .collect()
}

/// Consecutive measurement pairs `(i, i+1)`; degenerate pairs are skipped.
pub fn consecutive_pairs(scene: &PointCloud, matched: &PointCloud) -> Vec<MeasurementPair> {
    (1..scene.len())
        .filter_map(|j| {
            MeasurementPair::from_correspondences(
                &scene.points[j - 1],
                &matched.points[j - 1],
                &scene.points[j],
                &matched.points[j],
            )
            .ok()
        })
        .collect()
}

/// Fewest scene points accepted by [`register`].
pub const MIN_SCENE_POINTS: usize = 4;

/// Registers `scene` against the model.
///
/// Each outer iteration re-matches every scene point to its nearest model
/// point under the current pose, then runs one Kalman pass over all
/// consecutive pairs starting from the current mean and the covariance of
/// `init`, and finally recovers the translation. The loop stops when both the
/// rotation and translation change fall below their tolerances, or after
/// `max_iterations`.
pub fn register(
    scene: &PointCloud,
    model_index: &SpatialIndex,
    model: &PointCloud,
    init: &FilterState,
    init_translation: &Vector3<f64>,
    params: &FilterParams,
) -> Result<RegistrationResult> {
    register_observed(scene, model_index, model, init, init_translation, params, |_| {})
}

/// [`register`] with a callback invoked after every Kalman step.
pub fn register_observed(
    scene: &PointCloud,
    model_index: &SpatialIndex,
    model: &PointCloud,
    init: &FilterState,
    init_translation: &Vector3<f64>,
    params: &FilterParams,
    mut observer: impl FnMut(&KalmanStep),
) -> Result<RegistrationResult> {
    if scene.len() < MIN_SCENE_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_SCENE_POINTS,
            got: scene.len(),
        });
    }
    if model_index.len() != model.len() {
        return Err(Error::LengthMismatch(model_index.len(), model.len()));
    }
    let mut state = *init;
    let mut pose = Pose::new(init.rotation(), *init_translation);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        iterations += 1;
        let matched = PointCloud::new(
            correspond(scene, model_index, &pose)
                .into_iter()
                .map(|i| model.points[i])
                .collect(),
        );
        let pairs = consecutive_pairs(scene, &matched);
        if pairs.is_empty() {
            return Err(Error::AllPairsDegenerate);
        }
        let mut pass = FilterState {
            mean: state.mean,
            cov: init.cov,
        };
        for pair in &pairs {
            let step = kalman_step(&pass, pair, params.rho)?;
            observer(&step);
            pass = step.posterior;
        }
        let rotation = pass.rotation();
        let translation = estimate_translation(scene, &matched, &quat_to_rotmat(&rotation)?)?;
        let next = Pose::new(rotation, translation);
        let (angle, distance) = pose_delta(&pose, &next);
        pose = next;
        state = pass;
        if angle < params.rotation_tolerance && distance < params.translation_tolerance {
            converged = true;
            break;
        }
    }

    Ok(RegistrationResult {
        pose,
        state,
        iterations,
        converged,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ExperimentConfig, SceneSource};
use crate::active::TouchAction;
use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::geometry::{ray_mesh_intersect, Point3, TriangleMesh};
use crate::quat::{Pose, Quaternion};

const STREAM_SCENE: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_ACTIONS: u64 = 2;

/// Independent generators for one run.
///
/// Every run is seeded with `seed + run` and split into ChaCha streams: 0 for
/// the scene, 1 for touch noise, 2 for action sampling.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub scene: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub actions: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(run_seed: u64) -> Self {
        let stream = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            rng.set_stream(s);
            rng
        };
        Self {
            scene: stream(STREAM_SCENE),
            noise: stream(STREAM_NOISE),
            actions: stream(STREAM_ACTIONS),
        }
    }
}

/// Hidden state of a run. Only touch execution and metrics read it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pose: Pose,
    /// Mesh in the object frame that touches are cast against.
    pub mesh: TriangleMesh,
}

fn symmetric(rng: &mut impl Rng, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// Pose with translation components and intrinsic XYZ Euler angles drawn
/// uniformly from the configured ranges.
pub fn sample_pose(config: &ExperimentConfig, rng: &mut impl Rng) -> Pose {
    let t = Point3::new(
        symmetric(rng, config.init_translation_range),
        symmetric(rng, config.init_translation_range),
        symmetric(rng, config.init_translation_range),
    );
    let r = config.init_rotation_range.to_radians();
    let (rx, ry, rz) = (symmetric(rng, r), symmetric(rng, r), symmetric(rng, r));
    Pose::new(Quaternion::from_euler_xyz(rx, ry, rz), t)
}

/// Draws the true pose, then the start pose of the estimator. In `vertices`
/// mode the touched mesh is also perturbed once here.
pub fn make_scene(
    config: &ExperimentConfig,
    mesh: &TriangleMesh,
    rng: &mut ChaCha8Rng,
) -> Result<(GroundTruth, FilterState, Pose)> {
    let truth = sample_pose(config, rng);
    let start = sample_pose(config, rng);
    let touched = match config.scene_source {
        SceneSource::SurfaceSamples => mesh.clone(),
        SceneSource::Vertices => {
            let normal = noise_distribution(config.noise_sigma)?;
            mesh.map_vertices(|v| v + Point3::from_fn(|_, _| normal.sample(rng)))?
        }
    };
    let state = FilterState::isotropic(&start.rotation, config.initial_cov_scale);
    Ok((
        GroundTruth {
            pose: truth,
            mesh: touched,
        },
        state,
        start,
    ))
}

fn noise_distribution(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise_sigma: {e}")))
}

/// Casts the action against the ground truth and perturbs the hit with
/// independent per-coordinate Gaussian noise.
pub fn execute_touch(
    action: &TouchAction,
    truth: &GroundTruth,
    noise_sigma: f64,
    rng: &mut impl Rng,
) -> Result<Option<Point3>> {
    let Some(hit) = ray_mesh_intersect(&action.ray, &truth.mesh, &truth.pose) else {
        return Ok(None);
    };
    if noise_sigma == 0.0 {
        return Ok(Some(hit.point));
    }
    let normal = noise_distribution(noise_sigma)?;
    Ok(Some(hit.point + Point3::from_fn(|_, _| normal.sample(rng))))
}

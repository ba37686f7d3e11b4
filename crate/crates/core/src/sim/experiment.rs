use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Policy, SceneSource};
use super::fixtures::resolve_mesh;
use super::metrics::{adi_metric_indexed, pose_errors, PoseErrors};
use super::scene::{execute_touch, make_scene, GroundTruth, RunStreams};
use crate::active::{generate_actions_with, select_action, LookaheadContext, TouchAction};
use crate::error::{Error, Result};
use crate::filter::{register_observed, FilterState, KalmanStep, MIN_SCENE_POINTS};
use crate::geometry::{sample_surface_with, Point3, PointCloud, SpatialIndex, TriangleMesh};
use crate::par;
use crate::quat::Pose;

/// Touches taken at random before registration starts.
pub const RANDOM_INIT_TOUCHES: usize = MIN_SCENE_POINTS - 1;

/// Fresh action sets drawn for one touch before giving up on the object.
const MAX_ACTION_ROUNDS: usize = 10;

const STREAM_MODEL: u64 = 3;

/// The estimator's knowledge of the object: its mesh, a dense surface cloud
/// and a search index over that cloud.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: TriangleMesh,
    pub cloud: PointCloud,
    pub index: SpatialIndex,
}

impl Model {
    pub fn new(mesh: TriangleMesh, samples: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_MODEL);
        let cloud = sample_surface_with(&mesh, samples, &mut rng)?;
        let index = SpatialIndex::new(&cloud)?;
        Ok(Self { mesh, cloud, index })
    }

    /// Loads and scales the configured mesh and samples its surface.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let mut mesh = resolve_mesh(&config.mesh)?;
        if config.mesh_scale != 1.0 {
            mesh = mesh.scaled(config.mesh_scale)?;
        }
        Self::new(mesh, config.model_samples, config.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchRecord {
    pub run: usize,
    /// 1-based.
    pub touch: usize,
    pub criterion: String,
    /// `None` for the random initial touches.
    pub action_id: Option<usize>,
    pub point: Point3,
    pub estimate: Pose,
    pub truth: Pose,
    pub errors: PoseErrors,
    pub adi: f64,
    pub wall_s: f64,
}

/// Order in which actions are tried: the gain ranking (if any), then the
/// remaining actions in random order.
fn execution_order(ranked: Vec<usize>, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut rest: Vec<usize> = (0..count).filter(|i| !ranked.contains(i)).collect();
    rest.shuffle(rng);
    let mut order = ranked;
    order.extend(rest);
    order
}

struct Estimator<'a> {
    config: &'a ExperimentConfig,
    model: &'a Model,
    state: FilterState,
    pose: Pose,
    start: Pose,
    scene: PointCloud,
}

impl Estimator<'_> {
    fn rank(&self, actions: &[TouchAction], policy: &Policy, random_init: bool) -> Result<Vec<usize>> {
        let Policy::Gain(criterion) = policy else {
            return Ok(Vec::new());
        };
        if random_init {
            return Ok(Vec::new());
        }
        let ctx = LookaheadContext {
            mesh: &self.model.mesh,
            est_pose: &self.pose,
            scene: &self.scene,
            model_index: &self.model.index,
            model: &self.model.cloud,
            rho: self.config.rho,
        };
        match select_action(actions, &self.state, criterion, &ctx, self.config.parallelism) {
            Ok((_, report)) => {
                let mut scored: Vec<(usize, f64)> = report
                    .evaluations
                    .iter()
                    .filter_map(|e| e.gain.map(|g| (e.action_id, g)))
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                Ok(scored.into_iter().map(|(i, _)| i).collect())
            }
            Err(Error::AllActionsRejected) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    fn register(&mut self, observer: &mut dyn FnMut(&KalmanStep)) -> Result<()> {
        if self.scene.len() < MIN_SCENE_POINTS {
            return Ok(());
        }
        // every registration restarts from the start pose; carrying the last
        // estimate forward lets an early flip lock in
        let init = FilterState::isotropic(&self.start.rotation, self.config.initial_cov_scale);
        let t0 = self.start.translation;
        let result = register_observed(
            &self.scene,
            &self.model.index,
            &self.model.cloud,
            &init,
            &t0,
            &self.config.filter_params(),
            observer,
        )?;
        self.state = result.state;
        self.pose = result.pose;
        Ok(())
    }
}

/// One run: three random touches, then gain-driven touches, registering
/// after each from the fourth on.
pub fn run_experiment(config: &ExperimentConfig, model: &Model, policy: &Policy, run: usize) -> Result<Vec<TouchRecord>> {
    run_experiment_observed(config, model, policy, run, &mut |_| {})
}

/// [`run_experiment`] reporting every Kalman step of every registration.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    model: &Model,
    policy: &Policy,
    run: usize,
    observer: &mut dyn FnMut(&KalmanStep),
) -> Result<Vec<TouchRecord>> {
    let mut streams = RunStreams::new(config.seed.wrapping_add(run as u64));
    let (truth, state, start): (GroundTruth, _, _) = make_scene(config, &model.mesh, &mut streams.scene)?;
    let touch_sigma = match config.scene_source {
        SceneSource::SurfaceSamples => config.noise_sigma,
        SceneSource::Vertices => 0.0,
    };
    let mut est = Estimator {
        config,
        model,
        state,
        pose: start,
        start,
        scene: PointCloud::default(),
    };
    let mut records = Vec::with_capacity(config.max_touches);

    for touch in 1..=config.max_touches {
        let clock = Instant::now();
        let random_init = touch <= RANDOM_INIT_TOUCHES;
        let mut executed = None;
        for round in 0..MAX_ACTION_ROUNDS {
            let actions = generate_actions_with(
                &est.pose,
                &model.cloud,
                config.per_face,
                config.padding,
                &mut streams.actions,
            )?;
            let ranked = if round == 0 { est.rank(&actions, policy, random_init)? } else { Vec::new() };
            for id in execution_order(ranked, actions.len(), &mut streams.actions) {
                if let Some(p) = execute_touch(&actions[id], &truth, touch_sigma, &mut streams.noise)? {
                    executed = Some((id, p));
                    break;
                }
            }
            if executed.is_some() {
                break;
            }
        }
        let (id, point) = executed.ok_or(Error::UnreachableObject)?;
        est.scene.points.push(point);
        est.register(observer)?;
        let wall_s = if config.record_timing { clock.elapsed().as_secs_f64() } else { 0.0 };

        records.push(TouchRecord {
            run,
            touch,
            criterion: policy.name().to_string(),
            action_id: (!random_init).then_some(id),
            point,
            estimate: est.pose,
            truth: truth.pose,
            errors: pose_errors(&est.pose, &truth.pose)?,
            adi: adi_metric_indexed(&model.index, &est.pose, &truth.pose),
            wall_s,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub criterion: String,
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub policies: Vec<Policy>,
    /// Ordered by criterion, then run, then touch.
    pub records: Vec<TouchRecord>,
    pub failures: Vec<RunFailure>,
}

/// Runs every configured criterion `runs` times. Runs execute in parallel
/// when enabled; results are collected in a fixed order regardless.
pub fn run_sweep(config: &ExperimentConfig, model: &Model) -> Result<SweepResult> {
    config.validate()?;
    let policies = config.policies()?;
    let jobs: Vec<(Policy, usize)> = policies
        .iter()
        .flat_map(|p| (0..config.runs).map(move |r| (*p, r)))
        .collect();
    let outcomes = par::map(&jobs, config.parallelism, |_, (policy, run)| {
        run_experiment(config, model, policy, *run)
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((policy, run), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(RunFailure {
                criterion: policy.name().to_string(),
                run: *run,
                message: e.to_string(),
            }),
        }
    }
    if failures.len() == jobs.len() {
        return Err(Error::SweepFailed(failures[0].message.clone()));
    }
    Ok(SweepResult {
        policies,
        records,
        failures,
    })
}

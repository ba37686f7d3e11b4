//! Next-best-touch selection.
//!
//! Candidate touches are rays sampled on the faces of the model's bounding box
//! at the estimated pose. Each candidate is scored by the divergence between
//! the current belief and the belief after one hypothetical update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{kalman_update, FilterState, MeasurementPair};
use crate::gaussian::{divergence, Criterion, GaussianNd};
use crate::geometry::{
    compute_aabb, ray_mesh_intersect, transform_cloud, Point3, PointCloud, Ray, SpatialIndex,
    TriangleMesh,
};
use crate::par::{self, Parallelism};
use crate::quat::Pose;

pub const DEFAULT_PER_FACE: usize = 10;
pub const DEFAULT_PADDING: f64 = 1.1;

/// A touch: a ray starting on the bounding box and pointing inward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchAction {
    pub ray: Ray,
    /// Face of the box, `2 * axis + side` with side 0 for the min face.
    pub face: usize,
}

/// Samples `per_face` rays uniformly on each of the six faces of the padded
/// box around `model` placed at `est_pose`. Faces are ordered `-x, +x, -y,
/// +y, -z, +z`.
pub fn generate_actions(
    est_pose: &Pose,
    model: &PointCloud,
    per_face: usize,
    padding: f64,
    seed: u64,
) -> Result<Vec<TouchAction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_actions_with(est_pose, model, per_face, padding, &mut rng)
}

pub fn generate_actions_with(
    est_pose: &Pose,
    model: &PointCloud,
    per_face: usize,
    padding: f64,
    rng: &mut impl Rng,
) -> Result<Vec<TouchAction>> {
    if per_face == 0 {
        return Err(Error::InvalidArgument("per_face must be at least 1".into()));
    }
    let aabb = compute_aabb(&transform_cloud(model, est_pose), padding)?;
    let extent = aabb.extent();
    if let Some(axis) = (0..3).find(|&a| !(extent[a] > 0.0)) {
        return Err(Error::DegenerateBox(axis));
    }
    let mut actions = Vec::with_capacity(6 * per_face);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let mut direction = Point3::zeros();
            direction[axis] = if side == 0 { 1.0 } else { -1.0 };
            for _ in 0..per_face {
                let mut origin = Point3::zeros();
                origin[axis] = if side == 0 { aabb.min[axis] } else { aabb.max[axis] };
                origin[u] = aabb.min[u] + rng.random::<f64>() * extent[u];
                origin[v] = aabb.min[v] + rng.random::<f64>() * extent[v];
                actions.push(TouchAction {
                    ray: Ray::new(origin, direction)?,
                    face: 2 * axis + side,
                });
            }
        }
    }
    Ok(actions)
}

/// Where the touch would land if the object sat exactly at `est_pose`.
pub fn hypothesize_measurement(
    action: &TouchAction,
    mesh: &TriangleMesh,
    est_pose: &Pose,
) -> Option<Point3> {
    ray_mesh_intersect(&action.ray, mesh, est_pose).map(|h| h.point)
}

/// Everything the look-ahead needs besides the belief itself.
#[derive(Debug, Clone, Copy)]
pub struct LookaheadContext<'a> {
    pub mesh: &'a TriangleMesh,
    pub est_pose: &'a Pose,
    pub scene: &'a PointCloud,
    pub model_index: &'a SpatialIndex,
    pub model: &'a PointCloud,
    pub rho: f64,
}

/// Belief after one hypothetical update pairing `hyp_point` with the most
/// recent real measurement. Both points are matched to the model under the
/// estimated pose.
pub fn one_step_lookahead(
    state: &FilterState,
    hyp_point: &Point3,
    ctx: &LookaheadContext<'_>,
) -> Result<GaussianNd> {
    let last = ctx.scene.points.last().ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    let inv = ctx.est_pose.inverse();
    let o_last = ctx.model.points[ctx.model_index.nearest(&inv.transform_point(last)).0];
    let o_hyp = ctx.model.points[ctx.model_index.nearest(&inv.transform_point(hyp_point)).0];
    let pair = MeasurementPair::from_correspondences(last, &o_last, hyp_point, &o_hyp)?;
    Ok(kalman_update(state, &pair, ctx.rho)?.to_gaussian())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvaluation {
    pub action_id: usize,
    /// `None` when the ray misses the mesh at the estimated pose.
    pub hit: Option<Point3>,
    /// `None` when the action missed or its look-ahead was rejected.
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub evaluations: Vec<ActionEvaluation>,
    pub chosen: usize,
}

impl GainReport {
    pub fn chosen_gain(&self) -> f64 {
        self.evaluations[self.chosen].gain.unwrap_or(f64::NAN)
    }
}

/// Scores one action. Misses and rejected look-aheads carry no gain.
pub fn evaluate_action(
    action_id: usize,
    action: &TouchAction,
    state: &FilterState,
    criterion: &Criterion,
    ctx: &LookaheadContext<'_>,
) -> ActionEvaluation {
    let hit = hypothesize_measurement(action, ctx.mesh, ctx.est_pose);
    let gain = hit.and_then(|p| {
        let posterior = one_step_lookahead(state, &p, ctx).ok()?;
        divergence(criterion, &posterior, &state.to_gaussian())
            .ok()
            .filter(|g| g.is_finite())
    });
    ActionEvaluation {
        action_id,
        hit,
        gain,
    }
}

/// Picks the action with the largest gain; ties go to the lowest index.
pub fn select_action(
    actions: &[TouchAction],
    state: &FilterState,
    criterion: &Criterion,
    ctx: &LookaheadContext<'_>,
    mode: Parallelism,
) -> Result<(TouchAction, GainReport)> {
    if actions.is_empty() {
        return Err(Error::NoActions);
    }
    criterion.validate()?;
    let evaluations = par::map(actions, mode, |i, a| evaluate_action(i, a, state, criterion, ctx));
    let mut chosen: Option<(usize, f64)> = None;
    for e in &evaluations {
        if let Some(g) = e.gain {
            if chosen.is_none_or(|(_, best)| g > best) {
                chosen = Some((e.action_id, g));
            }
        }
    }
    let (chosen, _) = chosen.ok_or(Error::AllActionsRejected)?;
    Ok((
        actions[chosen],
        GainReport {
            evaluations,
            chosen,
        },
    ))
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::filter::DEFAULT_RHO;
    use crate::geometry::io::tests::unit_cube;
    use crate::geometry::sample_surface;
    use crate::quat::Quaternion;

    struct Fixture {
        mesh: TriangleMesh,
        model: PointCloud,
        index: SpatialIndex,
        pose: Pose,
        scene: PointCloud,
        state: FilterState,
    }

    impl Fixture {
        fn ctx(&self) -> LookaheadContext<'_> {
            LookaheadContext {
                mesh: &self.mesh,
                est_pose: &self.pose,
                scene: &self.scene,
                model_index: &self.index,
                model: &self.model,
                rho: DEFAULT_RHO,
            }
        }
    }

    /// 10 cm cube at the identity pose; scene touches only on the bottom face
    /// along the x axis, so rotation about x is still unconstrained.
    fn fixture() -> Fixture {
        let mesh = unit_cube().scaled(0.1).unwrap();
        let model = sample_surface(&mesh, 6000, 1).unwrap();
        let index = SpatialIndex::new(&model).unwrap();
        let scene = PointCloud::new(vec![
            Point3::new(0.02, 0.05, 0.0),
            Point3::new(0.05, 0.05, 0.0),
            Point3::new(0.08, 0.05, 0.0),
        ]);
        let mut state = FilterState::isotropic(&Quaternion::identity(), 1e4);
        for w in scene.points.windows(2) {
            let pair = MeasurementPair::new(w[1] - w[0], w[1] - w[0]).unwrap();
            state = kalman_update(&state, &pair, DEFAULT_RHO).unwrap();
        }
        Fixture {
            mesh,
            model,
            index,
            pose: Pose::identity(),
            scene,
            state,
        }
    }

    #[test]
    fn sixty_actions_on_box_boundary() {
        let f = fixture();
        let actions = generate_actions(&f.pose, &f.model, 10, 1.1, 3).unwrap();
        assert_eq!(actions.len(), 60);
        let aabb = compute_aabb(&f.model, 1.1).unwrap();
        for a in &actions {
            let axis = a.face / 2;
            let o = a.ray.origin;
            let on_face = (o[axis] - aabb.min[axis]).abs() < 1e-15 || (o[axis] - aabb.max[axis]).abs() < 1e-15;
            assert!(on_face && aabb.contains(&o));
            let d = a.ray.direction();
            assert!((d.norm() - 1.0).abs() < 1e-15);
            assert_eq!(d.iter().filter(|c| **c != 0.0).count(), 1);
            // inward: moving along the ray enters the box
            assert!(aabb.contains(&a.ray.at(1e-3)));
        }
        assert_eq!(actions, generate_actions(&f.pose, &f.model, 10, 1.1, 3).unwrap());
        assert_ne!(actions, generate_actions(&f.pose, &f.model, 10, 1.1, 4).unwrap());
    }

    #[test]
    fn generation_errors() {
        let f = fixture();
        assert!(generate_actions(&f.pose, &f.model, 0, 1.1, 0).is_err());
        let flat = PointCloud::new(vec![Point3::zeros(), Point3::new(1.0, 1.0, 0.0)]);
        assert!(matches!(
            generate_actions(&Pose::identity(), &flat, 2, 1.1, 0),
            Err(Error::DegenerateBox(2))
        ));
    }

    #[test]
    fn hypotheses() {
        let f = fixture();
        let pose = Pose::new(Quaternion::from_euler_xyz(0.2, 0.1, -0.3), Vector3::new(0.3, 0.0, 0.1));
        let center = pose.transform_point(&Point3::repeat(0.05));
        let aim = TouchAction {
            ray: Ray::new(center + Point3::new(1.0, 0.2, -0.1), -Point3::new(1.0, 0.2, -0.1)).unwrap(),
            face: 0,
        };
        let hit = hypothesize_measurement(&aim, &f.mesh, &pose).unwrap();
        assert_eq!(Some(hit), ray_mesh_intersect(&aim.ray, &f.mesh, &pose).map(|h| h.point));
        let wide = TouchAction {
            ray: Ray::new(Point3::new(-1.0, 0.5, 0.5), Point3::x()).unwrap(),
            face: 0,
        };
        assert!(hypothesize_measurement(&wide, &f.mesh, &Pose::identity()).is_none());
    }

    #[test]
    fn lookahead_matches_direct_update() {
        let f = fixture();
        let hyp = Point3::new(0.08, 0.0, 0.05);
        let posterior = one_step_lookahead(&f.state, &hyp, &f.ctx()).unwrap();
        assert!(posterior.cov.trace() <= f.state.cov.trace() + 1e-12);

        let last = f.scene.points[2];
        let o_last = f.model.points[f.index.nearest(&last).0];
        let o_hyp = f.model.points[f.index.nearest(&hyp).0];
        let pair = MeasurementPair::from_correspondences(&last, &o_last, &hyp, &o_hyp).unwrap();
        let direct = kalman_update(&f.state, &pair, DEFAULT_RHO).unwrap().to_gaussian();
        assert_eq!(posterior, direct);

        assert!(one_step_lookahead(&f.state, &last, &f.ctx()).is_err());
    }

    fn ray_to(target: Point3, from: Vector3<f64>) -> TouchAction {
        TouchAction {
            ray: Ray::new(target + from, -from).unwrap(),
            face: 0,
        }
    }

    #[test]
    fn probing_beats_retouching_under_kl() {
        let f = fixture();
        let retouch = ray_to(Point3::new(0.02, 0.05, 0.0), Vector3::new(0.0, 0.0, -1.0));
        let probe = ray_to(Point3::new(0.08, 0.0, 0.05), Vector3::new(0.0, -1.0, 0.0));
        let before = f.state;
        let (_, report) =
            select_action(&[retouch, probe], &f.state, &Criterion::Kl, &f.ctx(), Parallelism::Sequential).unwrap();
        assert_eq!(report.chosen, 1);
        let g = |i: usize| report.evaluations[i].gain.unwrap();
        assert!(g(1) > g(0), "{} vs {}", g(1), g(0));
        assert_eq!(before, f.state);

        // reported gain equals a fresh recomputation
        let hit = report.evaluations[1].hit.unwrap();
        let post = one_step_lookahead(&f.state, &hit, &f.ctx()).unwrap();
        let fresh = divergence(&Criterion::Kl, &post, &f.state.to_gaussian()).unwrap();
        assert!((fresh - report.chosen_gain()).abs() <= 1e-12 * fresh.abs().max(1.0));
    }

    #[test]
    fn ties_and_rejections() {
        let f = fixture();
        let probe = ray_to(Point3::new(0.08, 0.0, 0.05), Vector3::new(0.0, -1.0, 0.0));
        let miss = TouchAction {
            ray: Ray::new(Point3::new(-1.0, 0.5, 0.5), Point3::x()).unwrap(),
            face: 0,
        };
        let (chosen, report) =
            select_action(&[miss, probe, probe, probe], &f.state, &Criterion::Kl, &f.ctx(), Parallelism::Sequential)
                .unwrap();
        assert_eq!(report.chosen, 1);
        assert_eq!(chosen, probe);
        assert_eq!(report.evaluations.len(), 4);
        assert_eq!(report.evaluations[0], ActionEvaluation { action_id: 0, hit: None, gain: None });

        let (_, single) = select_action(&[miss, probe], &f.state, &Criterion::Fisher, &f.ctx(), Parallelism::Sequential).unwrap();
        assert_eq!(single.chosen, 1);

        // re-touching the last measurement is a degenerate pair
        let same = ray_to(f.scene.points[2], Vector3::new(0.0, 0.0, -1.0));
        assert!(matches!(
            select_action(&[miss, same], &f.state, &Criterion::Kl, &f.ctx(), Parallelism::Sequential),
            Err(Error::AllActionsRejected)
        ));
        assert!(matches!(
            select_action(&[], &f.state, &Criterion::Kl, &f.ctx(), Parallelism::Sequential),
            Err(Error::NoActions)
        ));
    }

    #[test]
    fn parallel_matches_sequential() {
        let f = fixture();
        let actions = generate_actions(&f.pose, &f.model, 10, 1.1, 11).unwrap();
        for c in Criterion::all(0.3) {
            let a = select_action(&actions, &f.state, &c, &f.ctx(), Parallelism::Sequential).unwrap();
            let b = select_action(&actions, &f.state, &c, &f.ctx(), Parallelism::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kl_and_near_one_renyi_agree() {
        let f = fixture();
        let mut compared = 0;
        for seed in 0..30 {
            let pose = Pose::new(
                Quaternion::from_euler_xyz(0.01 * seed as f64, -0.02, 0.015 * seed as f64),
                Vector3::zeros(),
            );
            let ctx = LookaheadContext { est_pose: &pose, ..f.ctx() };
            let actions = generate_actions(&pose, &f.model, 10, 1.1, seed).unwrap();
            let (_, kl) = select_action(&actions, &f.state, &Criterion::Kl, &ctx, Parallelism::Parallel).unwrap();
            let mut gains: Vec<f64> = kl.evaluations.iter().filter_map(|e| e.gain).collect();
            gains.sort_by(|a, b| b.total_cmp(a));
            if gains.len() < 2 || gains[0] - gains[1] <= 1e-3 {
                continue;
            }
            compared += 1;
            let (_, renyi) =
                select_action(&actions, &f.state, &Criterion::Renyi(0.999), &ctx, Parallelism::Parallel).unwrap();
            assert_eq!(kl.chosen, renyi.chosen, "seed {seed}");
        }
        assert!(compared >= 10, "only {compared} separable instances");
    }
}

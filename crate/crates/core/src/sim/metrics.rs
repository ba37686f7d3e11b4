use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{PointCloud, SpatialIndex};
use crate::quat::{quat_conj, quat_mul, Pose};

/// Slack on the nearest-neighbor radius when collecting ADI candidates.
const ADI_SLACK: f64 = 1e-9;

/// Average distance from each ground-truth-posed model point to the closest
/// estimate-posed model point.
pub fn adi_metric(model: &PointCloud, est: &Pose, gt: &Pose) -> Result<f64> {
    let index = SpatialIndex::new(model)?;
    Ok(adi_metric_indexed(&index, est, gt))
}

/// [`adi_metric`] reusing a prebuilt index of the model cloud.
///
/// The tree narrows the candidates for each point; the minimum is then taken
/// over the exact world-frame distances, so the value agrees bit for bit
/// with a double loop over the cloud.
pub fn adi_metric_indexed(index: &SpatialIndex, est: &Pose, gt: &Pose) -> f64 {
    let points = index.points();
    let (r_gt, r_est) = (gt.rotation_matrix(), est.rotation_matrix());
    let est_inv = est.inverse();
    let mut sum = 0.0;
    for p1 in points {
        let g = r_gt * p1 + gt.translation;
        let query = est_inv.transform_point(&g);
        let (_, d) = index.nearest(&query);
        let mut best = f64::INFINITY;
        for j in index.within_radius(&query, d + ADI_SLACK) {
            best = best.min((g - (r_est * points[j] + est.translation)).norm());
        }
        sum += best;
    }
    sum / points.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrors {
    /// `|t̂ − t|` in meters.
    pub position: f64,
    /// Angle of `R̂ᵀ R` in degrees.
    pub rotation_geodesic_deg: f64,
    /// L₂ norm of the wrapped intrinsic XYZ Euler-angle differences, degrees.
    pub rotation_euler_deg: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

pub fn pose_errors(est: &Pose, gt: &Pose) -> Result<PoseErrors> {
    let rel = quat_mul(&quat_conj(&est.rotation), &gt.rotation);
    let e_est = est.rotation.to_euler_xyz()?;
    let e_gt = gt.rotation.to_euler_xyz()?;
    let euler = (e_est - e_gt).map(wrap_angle).norm();
    Ok(PoseErrors {
        position: (est.translation - gt.translation).norm(),
        rotation_geodesic_deg: rel.angle().to_degrees(),
        rotation_euler_deg: euler.to_degrees(),
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::quat::Quaternion;

    fn double_loop(model: &PointCloud, est: &Pose, gt: &Pose) -> f64 {
        let (r_gt, r_est) = (gt.rotation_matrix(), est.rotation_matrix());
        let mut sum = 0.0;
        for p1 in &model.points {
            let g = r_gt * p1 + gt.translation;
            let mut best = f64::INFINITY;
            for p2 in &model.points {
                best = best.min((g - (r_est * p2 + est.translation)).norm());
            }
            sum += best;
        }
        sum / model.len() as f64
    }

    #[test]
    fn adi_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cloud = PointCloud::new((0..50).map(|_| Vector3::new(rng.random(), rng.random(), rng.random())).collect());
        let pose = Pose::new(Quaternion::from_euler_xyz(0.1, 0.2, 0.3), Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(adi_metric(&cloud, &pose, &pose).unwrap(), 0.0);
        let single = PointCloud::new(vec![Vector3::new(0.3, -0.2, 0.1)]);
        let shifted = Pose::new(pose.rotation, pose.translation + Vector3::new(0.25, 0.0, 0.0));
        assert!((adi_metric(&single, &shifted, &pose).unwrap() - 0.25).abs() < 1e-15);
        assert!(adi_metric(&PointCloud::default(), &pose, &pose).is_err());
    }

    #[test]
    fn adi_matches_double_loop_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let cloud = PointCloud::new(
                (0..50)
                    .map(|_| Vector3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
                    .collect(),
            );
            let pose = |rng: &mut ChaCha8Rng| {
                Pose::new(
                    Quaternion::from_euler_xyz(rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(-3.0..3.0)),
                    Vector3::new(rng.random(), rng.random(), rng.random()) * 0.1,
                )
            };
            let (est, gt) = (pose(&mut rng), pose(&mut rng));
            assert_eq!(adi_metric(&cloud, &est, &gt).unwrap(), double_loop(&cloud, &est, &gt));
        }
    }

    #[test]
    fn pose_error_cases() {
        let p = Pose::new(Quaternion::from_euler_xyz(0.3, -0.2, 0.5), Vector3::new(0.1, 0.2, 0.3));
        let e = pose_errors(&p, &p).unwrap();
        assert_eq!(e.position, 0.0);
        assert!(e.rotation_geodesic_deg < 1e-6 && e.rotation_euler_deg == 0.0);

        let z90 = Pose::from_rotation(Quaternion::from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2));
        let e = pose_errors(&z90, &Pose::identity()).unwrap();
        assert!((e.rotation_geodesic_deg - 90.0).abs() < 1e-9);
        assert!((e.rotation_euler_deg - 90.0).abs() < 1e-9);

        let t = Pose::from_translation(Vector3::new(0.03, 0.04, 0.0));
        assert!((pose_errors(&t, &Pose::identity()).unwrap().position - 0.05).abs() < 1e-15);
    }

    #[test]
    fn euler_difference_wraps() {
        let a = Pose::from_rotation(Quaternion::from_euler_xyz(0.0, 0.0, 3.1));
        let b = Pose::from_rotation(Quaternion::from_euler_xyz(0.0, 0.0, -3.1));
        let e = pose_errors(&a, &b).unwrap();
        assert!((e.rotation_euler_deg - (2.0 * std::f64::consts::PI - 6.2).to_degrees()).abs() < 1e-6);
    }
}

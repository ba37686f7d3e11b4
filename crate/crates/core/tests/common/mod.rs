//! Independent reference computations for the acceptance checks. None of
//! these reuse the library's closed forms.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use tiqf_core::geometry::PointCloud;
use tiqf_core::quat::Pose;

/// Log density of N(mean, cov) at x via an explicit inverse and determinant.
fn log_density(x: &DVector<f64>, mean: &DVector<f64>, inv: &DMatrix<f64>, det: f64) -> f64 {
    let d = x.len() as f64;
    let r = x - mean;
    -0.5 * ((r.transpose() * inv * &r)[0] + det.ln() + d * (2.0 * std::f64::consts::PI).ln())
}

struct Density {
    mean: DVector<f64>,
    inv: DMatrix<f64>,
    det: f64,
    chol: DMatrix<f64>,
}

impl Density {
    fn new(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Self {
        Self {
            mean: mean.clone(),
            inv: cov.clone().try_inverse().expect("invertible covariance"),
            det: cov.determinant(),
            chol: cov.clone().cholesky().expect("SPD covariance").l(),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol * z
    }

    fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        log_density(x, &self.mean, &self.inv, self.det)
    }
}

/// Monte-Carlo estimate of E_p[log p/q] from `n` draws of p.
pub fn kl_monte_carlo(
    (mi, ci): (&DVector<f64>, &DMatrix<f64>),
    (mj, cj): (&DVector<f64>, &DMatrix<f64>),
    n: usize,
    rng: &mut impl Rng,
) -> f64 {
    let (p, q) = (Density::new(mi, ci), Density::new(mj, cj));
    let mut sum = 0.0;
    for _ in 0..n {
        let x = p.sample(rng);
        sum += p.log_pdf(&x) - q.log_pdf(&x);
    }
    sum / n as f64
}

/// Monte-Carlo estimate of 1/(α−1) log ∫ p^α q^(1−α), drawing from q.
pub fn renyi_monte_carlo(
    (mi, ci): (&DVector<f64>, &DMatrix<f64>),
    (mj, cj): (&DVector<f64>, &DMatrix<f64>),
    alpha: f64,
    n: usize,
    rng: &mut impl Rng,
) -> f64 {
    let (p, q) = (Density::new(mi, ci), Density::new(mj, cj));
    let mut sum = 0.0;
    for _ in 0..n {
        let x = q.sample(rng);
        sum += (alpha * (p.log_pdf(&x) - q.log_pdf(&x))).exp();
    }
    (sum / n as f64).ln() / (alpha - 1.0)
}

/// Composite Simpson rule on [a, b] with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// −ln ∫ √(p q) for diagonal Gaussians: the integral factorizes into one
/// quadrature per dimension.
pub fn bhattacharyya_quadrature(mi: &[f64], vi: &[f64], mj: &[f64], vj: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..mi.len() {
        let spread = 12.0 * vi[k].max(vj[k]).sqrt();
        let (lo, hi) = (mi[k].min(mj[k]) - spread, mi[k].max(mj[k]) + spread);
        let bc = simpson(
            |x| (normal_pdf(x, mi[k], vi[k]) * normal_pdf(x, mj[k], vj[k])).sqrt(),
            lo,
            hi,
            20_000,
        );
        total -= bc.ln();
    }
    total
}

/// Squared 2-Wasserstein distance of diagonal Gaussians as a sum of 1-D
/// distances (μᵢ−μⱼ)² + (σᵢ−σⱼ)².
pub fn wasserstein_per_dimension(mi: &[f64], vi: &[f64], mj: &[f64], vj: &[f64]) -> f64 {
    (0..mi.len())
        .map(|k| (mi[k] - mj[k]).powi(2) + (vi[k].sqrt() - vj[k].sqrt()).powi(2))
        .sum()
}

/// The Fisher expression evaluated with explicit inverses and products.
pub fn fisher_direct(mi: &DVector<f64>, ci: &DMatrix<f64>, mj: &DVector<f64>, cj: &DMatrix<f64>) -> f64 {
    let inv_j = cj.clone().try_inverse().unwrap();
    let inv_i = ci.clone().try_inverse().unwrap();
    let diff = mi - mj;
    let v = &inv_j * &diff;
    let m = &inv_j * &inv_j * ci - &inv_j * 2.0 + inv_i;
    v.dot(&v) + m.trace()
}

/// ADI by exhaustive search over every model point pair.
pub fn adi_double_loop(model: &PointCloud, est: &Pose, gt: &Pose) -> f64 {
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

pub fn random_spd(rng: &mut impl Rng, d: usize, floor: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * floor
}

pub fn random_unit_vector(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

//! Multivariate Gaussians and closed-form divergences between them.
//!
//! Every covariance goes through the same conditioning step before it is
//! factorized: it is symmetrized and, if its smallest eigenvalue is below
//! [`MIN_EIGENVALUE`], shifted up so that the smallest eigenvalue equals it.
//! Log-determinants always come from a Cholesky factor.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to covariance eigenvalues before inversion.
pub const MIN_EIGENVALUE: f64 = 1e-12;

/// Default Rényi order used by the experiment configs.
pub const DEFAULT_RENYI_ALPHA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNd {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianNd {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::DimensionMismatch(cov.nrows(), cov.ncols()));
        }
        if mean.len() != cov.nrows() {
            return Err(Error::DimensionMismatch(mean.len(), cov.nrows()));
        }
        if mean.is_empty() {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Information-gain measure used to rank candidate touches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Kl,
    Renyi(f64),
    Fisher,
    Bhattacharyya,
    Wasserstein2,
}

impl Criterion {
    pub fn validate(&self) -> Result<()> {
        if let Criterion::Renyi(alpha) = *self {
            check_alpha(alpha)?;
        }
        Ok(())
    }

    /// Short lowercase name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Kl => "kl",
            Criterion::Renyi(_) => "renyi",
            Criterion::Fisher => "fisher",
            Criterion::Bhattacharyya => "bhattacharyya",
            Criterion::Wasserstein2 => "wasserstein",
        }
    }

    /// All five criteria, with Rényi at order `alpha`.
    pub fn all(alpha: f64) -> [Criterion; 5] {
        [
            Criterion::Kl,
            Criterion::Renyi(alpha),
            Criterion::Fisher,
            Criterion::Bhattacharyya,
            Criterion::Wasserstein2,
        ]
    }

    /// Parses a criterion name; `alpha` is only used for Rényi.
    pub fn parse_with_alpha(name: &str, alpha: f64) -> Result<Self> {
        let c = match name.to_ascii_lowercase().as_str() {
            "kl" => Criterion::Kl,
            "renyi" => Criterion::Renyi(alpha),
            "fisher" => Criterion::Fisher,
            "bhattacharyya" => Criterion::Bhattacharyya,
            "wasserstein" | "wasserstein2" => Criterion::Wasserstein2,
            other => return Err(Error::Config(format!("unknown criterion '{other}'"))),
        };
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_alpha(s, DEFAULT_RENYI_ALPHA)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 1.0 {
        return Err(Error::RenyiAlphaOne);
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Symmetrizes `cov` and lifts its spectrum to at least [`MIN_EIGENVALUE`].
pub fn condition_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::DimensionMismatch(cov.nrows(), cov.ncols()));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSpd);
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    if min_eig < MIN_EIGENVALUE {
        let n = sym.nrows();
        Ok(sym + DMatrix::identity(n, n) * (MIN_EIGENVALUE - min_eig))
    } else {
        Ok(sym)
    }
}

/// Cholesky-backed view of a conditioned covariance.
struct Factored {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Factored {
    fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let conditioned = condition_covariance(cov)?;
        Self::exact(conditioned)
    }

    /// Factorizes without conditioning; fails on indefinite input.
    fn exact(sym: DMatrix<f64>) -> Result<Self> {
        let chol = sym.cholesky().ok_or(Error::NotSpd)?;
        Ok(Self { chol })
    }

    fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `vᵀ Σ⁻¹ v`.
    fn mahalanobis_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.chol.solve(v))
    }
}

fn check_dims(p: &GaussianNd, q: &GaussianNd) -> Result<()> {
    if p.dim() != q.dim() || p.cov.nrows() != q.cov.nrows() {
        return Err(Error::DimensionMismatch(p.dim(), q.dim()));
    }
    Ok(())
}

/// Kullback–Leibler divergence `KL(p_i ‖ p_j)`.
pub fn kl_div(p_i: &GaussianNd, p_j: &GaussianNd) -> Result<f64> {
    check_dims(p_i, p_j)?;
    let sigma_i = condition_covariance(&p_i.cov)?;
    let fi = Factored::exact(sigma_i.clone())?;
    let fj = Factored::new(&p_j.cov)?;
    let diff = &p_i.mean - &p_j.mean;
    let trace = (fj.chol.solve(&sigma_i)).trace();
    let d = p_i.dim() as f64;
    Ok(0.5 * (fj.log_det() - fi.log_det() + trace - d + fj.mahalanobis_sq(&diff)))
}

/// Rényi divergence of order `alpha` (`alpha > 0`, `alpha != 1`).
pub fn renyi_div(p_i: &GaussianNd, p_j: &GaussianNd, alpha: f64) -> Result<f64> {
    check_dims(p_i, p_j)?;
    check_alpha(alpha)?;
    let sigma_i = condition_covariance(&p_i.cov)?;
    let sigma_j = condition_covariance(&p_j.cov)?;
    let fi = Factored::exact(sigma_i.clone())?;
    let fj = Factored::exact(sigma_j.clone())?;
    let mixed = &sigma_j * alpha + &sigma_i * (1.0 - alpha);
    // an indefinite mixture (possible for alpha > 1) is rejected, not lifted
    let fa = Factored::exact((&mixed + mixed.transpose()) * 0.5)?;
    let diff = &p_i.mean - &p_j.mean;
    let log_ratio = fa.log_det() - (1.0 - alpha) * fi.log_det() - alpha * fj.log_det();
    Ok(0.5 * alpha * fa.mahalanobis_sq(&diff) - log_ratio / (2.0 * (alpha - 1.0)))
}

/// `|Σⱼ⁻¹(μᵢ−μⱼ)|² + tr(Σⱼ⁻²Σᵢ − 2Σⱼ⁻¹ + Σᵢ⁻¹)`.
pub fn fisher_dist(p_i: &GaussianNd, p_j: &GaussianNd) -> Result<f64> {
    check_dims(p_i, p_j)?;
    let sigma_i = condition_covariance(&p_i.cov)?;
    let inv_i = Factored::exact(sigma_i.clone())?.inverse();
    let inv_j = Factored::new(&p_j.cov)?.inverse();
    let diff = &p_i.mean - &p_j.mean;
    let trace = (&inv_j * &inv_j * &sigma_i - &inv_j * 2.0 + inv_i).trace();
    Ok((&inv_j * diff).norm_squared() + trace)
}

/// Bhattacharyya distance.
pub fn bhattacharyya_dist(p_i: &GaussianNd, p_j: &GaussianNd) -> Result<f64> {
    check_dims(p_i, p_j)?;
    let sigma_i = condition_covariance(&p_i.cov)?;
    let sigma_j = condition_covariance(&p_j.cov)?;
    let avg = (&sigma_i + &sigma_j) * 0.5;
    let fa = Factored::exact(avg)?;
    let fi = Factored::exact(sigma_i)?;
    let fj = Factored::exact(sigma_j)?;
    let diff = &p_i.mean - &p_j.mean;
    Ok(0.125 * fa.mahalanobis_sq(&diff) + 0.5 * (fa.log_det() - 0.5 * (fi.log_det() + fj.log_det())))
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::Eigen)?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen);
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Squared 2-Wasserstein distance.
pub fn wasserstein2_sq(p_i: &GaussianNd, p_j: &GaussianNd) -> Result<f64> {
    check_dims(p_i, p_j)?;
    let sigma_i = condition_covariance(&p_i.cov)?;
    let sigma_j = condition_covariance(&p_j.cov)?;
    let root_i = sqrtm_psd(&sigma_i)?;
    let cross = sqrtm_psd(&(&root_i * &sigma_j * &root_i))?;
    let diff = &p_i.mean - &p_j.mean;
    Ok(diff.norm_squared() + (sigma_i + sigma_j - cross * 2.0).trace())
}

/// Information gain `D(posterior ‖ prior)` under `criterion`.
pub fn divergence(criterion: &Criterion, posterior: &GaussianNd, prior: &GaussianNd) -> Result<f64> {
    match *criterion {
        Criterion::Kl => kl_div(posterior, prior),
        Criterion::Renyi(alpha) => renyi_div(posterior, prior, alpha),
        Criterion::Fisher => fisher_dist(posterior, prior),
        Criterion::Bhattacharyya => bhattacharyya_dist(posterior, prior),
        Criterion::Wasserstein2 => wasserstein2_sq(posterior, prior),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn iso(mean: &[f64], var: f64) -> GaussianNd {
        let d = mean.len();
        GaussianNd::new(
            DVector::from_column_slice(mean),
            DMatrix::identity(d, d) * var,
        )
        .unwrap()
    }

    fn e1() -> [f64; 4] {
        [1.0, 0.0, 0.0, 0.0]
    }

    fn zero() -> [f64; 4] {
        [0.0; 4]
    }

    /// Random SPD 4×4 with eigenvalues in [0.2, 3].
    fn spd_strategy() -> impl Strategy<Value = GaussianNd> {
        (
            prop::collection::vec(-1.0..1.0f64, 16),
            prop::collection::vec(0.2..3.0f64, 4),
            prop::collection::vec(-1.0..1.0f64, 4),
        )
            .prop_map(|(a, eig, mean)| {
                let q = DMatrix::from_column_slice(4, 4, &a).qr().q();
                let cov = &q * DMatrix::from_diagonal(&DVector::from_vec(eig)) * q.transpose();
                GaussianNd::new(DVector::from_vec(mean), (&cov + cov.transpose()) * 0.5).unwrap()
            })
    }

    #[test]
    fn identical_distributions_are_zero() {
        let p = iso(&[0.3, -1.0, 2.0, 0.1], 0.7);
        for c in Criterion::all(0.3) {
            assert!(divergence(&c, &p, &p).unwrap().abs() < 1e-10, "{c}");
        }
        assert!(renyi_div(&p, &p, 2.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn kl_closed_form_values() {
        let kl = kl_div(&iso(&e1(), 1.0), &iso(&zero(), 1.0)).unwrap();
        assert!((kl - 0.5).abs() < 1e-12);
        let kl = kl_div(&iso(&zero(), 2.0), &iso(&zero(), 1.0)).unwrap();
        assert!((kl - (2.0 - 2.0 * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn renyi_half_shifted_mean() {
        let r = renyi_div(&iso(&e1(), 1.0), &iso(&zero(), 1.0), 0.5).unwrap();
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn renyi_rejects_bad_alpha() {
        let p = iso(&zero(), 1.0);
        assert!(matches!(renyi_div(&p, &p, 1.0), Err(Error::RenyiAlphaOne)));
        assert!(matches!(renyi_div(&p, &p, 0.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(renyi_div(&p, &p, -2.0), Err(Error::InvalidAlpha(_))));
        assert!(Criterion::parse_with_alpha("renyi", 1.0).is_err());
    }

    #[test]
    fn renyi_rejects_indefinite_mixture() {
        // alpha Σj + (1 - alpha) Σi = 3·0.1 I - 2·1 I < 0
        let p = iso(&zero(), 1.0);
        let q = iso(&zero(), 0.1);
        assert!(matches!(renyi_div(&p, &q, 3.0), Err(Error::NotSpd)));
    }

    #[test]
    fn fisher_values() {
        let f = fisher_dist(&iso(&e1(), 1.0), &iso(&zero(), 1.0)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let f = fisher_dist(&iso(&zero(), 2.0), &iso(&zero(), 1.0)).unwrap();
        assert!((f - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bhattacharyya_values() {
        let b = bhattacharyya_dist(&iso(&e1(), 1.0), &iso(&zero(), 1.0)).unwrap();
        assert!((b - 0.125).abs() < 1e-12);
        let b = bhattacharyya_dist(&iso(&zero(), 2.0), &iso(&zero(), 1.0)).unwrap();
        assert!((b - (2.0 * 1.5f64.ln() - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_values() {
        let v = [0.3, -0.4, 1.2, 0.0];
        let w = wasserstein2_sq(&iso(&v, 0.5), &iso(&zero(), 0.5)).unwrap();
        let expected: f64 = v.iter().map(|x| x * x).sum();
        assert!((w - expected).abs() < 1e-12);
        let w = wasserstein2_sq(&iso(&zero(), 4.0), &iso(&zero(), 1.0)).unwrap();
        assert!((w - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dispatch_and_argument_order() {
        let p = GaussianNd::new(
            DVector::from_vec(vec![0.1, 0.2, -0.3, 0.5]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 2.0, 0.3])),
        )
        .unwrap();
        let q = iso(&zero(), 1.3);
        assert_eq!(
            divergence(&Criterion::Renyi(0.3), &p, &q).unwrap(),
            renyi_div(&p, &q, 0.3).unwrap()
        );
        for c in [Criterion::Kl, Criterion::Renyi(0.3), Criterion::Fisher] {
            let a = divergence(&c, &p, &q).unwrap();
            let b = divergence(&c, &q, &p).unwrap();
            assert!((a - b).abs() > 1e-6, "{c} unexpectedly symmetric");
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = iso(&[0.0, 0.0], 1.0);
        let q = iso(&zero(), 1.0);
        assert!(matches!(kl_div(&p, &q), Err(Error::DimensionMismatch(2, 4))));
        assert!(GaussianNd::new(DVector::zeros(3), DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn singular_covariance_is_conditioned() {
        let mut cov = DMatrix::identity(4, 4);
        cov[(3, 3)] = 0.0;
        let p = GaussianNd::new(DVector::zeros(4), cov).unwrap();
        let q = iso(&zero(), 1.0);
        let cond = condition_covariance(&p.cov).unwrap();
        assert!((cond.symmetric_eigenvalues().min() - MIN_EIGENVALUE).abs() < 1e-15);
        for c in Criterion::all(0.3) {
            assert!(divergence(&c, &p, &q).unwrap().is_finite(), "{c}");
        }
        let mut bad = DMatrix::identity(4, 4);
        bad[(0, 0)] = f64::NAN;
        assert!(condition_covariance(&bad).is_err());
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::all(0.3) {
            assert_eq!(Criterion::parse_with_alpha(c.name(), 0.3).unwrap(), c);
        }
        assert!("entropy".parse::<Criterion>().is_err());
    }

    /// (posterior, prior) pairs with posterior covariance ⪯ prior covariance,
    /// the shape every information-gain evaluation has.
    fn contraction_pair() -> impl Strategy<Value = (GaussianNd, GaussianNd)> {
        (
            spd_strategy(),
            prop::collection::vec(-1.0..1.0f64, 16),
            prop::collection::vec(0.05..1.0f64, 4),
            prop::collection::vec(-1.0..1.0f64, 4),
        )
            .prop_map(|(prior, a, shrink, shift)| {
                let root = sqrtm_psd(&prior.cov).unwrap();
                let q = DMatrix::from_column_slice(4, 4, &a).qr().q();
                let c = &q * DMatrix::from_diagonal(&DVector::from_vec(shrink)) * q.transpose();
                let cov = &root * c * &root;
                let post = GaussianNd::new(
                    &prior.mean + DVector::from_vec(shift),
                    (&cov + cov.transpose()) * 0.5,
                )
                .unwrap();
                (post, prior)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn all_measures_non_negative(p in spd_strategy(), q in spd_strategy()) {
            for c in Criterion::all(0.3) {
                prop_assert!(divergence(&c, &p, &q).unwrap() >= -1e-10, "{}", c);
            }
        }

        #[test]
        fn symmetric_measures(p in spd_strategy(), q in spd_strategy()) {
            let b = bhattacharyya_dist(&p, &q).unwrap() - bhattacharyya_dist(&q, &p).unwrap();
            let w = wasserstein2_sq(&p, &q).unwrap() - wasserstein2_sq(&q, &p).unwrap();
            prop_assert!(b.abs() < 1e-10);
            prop_assert!(w.abs() < 1e-10);
        }

        #[test]
        fn renyi_approaches_kl((p, q) in contraction_pair()) {
            let kl = kl_div(&p, &q).unwrap();
            let r = renyi_div(&p, &q, 0.999).unwrap();
            prop_assert!((r - kl).abs() < 1e-3 * (1.0 + kl));
        }
    }
}

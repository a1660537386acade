//! Estimating the mean of a conditionally Gaussian observation `Y = theta + xi`,
//! where `xi | G ~ N_p(0, D(G))` for a conditioning sigma-algebra `G`.
//!
//! The estimators compared here:
//!
//! * least squares: `Y` itself, with risk `E tr D(G)`;
//! * norm shrinkage: `(1 - c/||Y||) Y`, which dominates least squares for
//!   every `p >= 2` once `c = (p-1) lambda_star gamma_p`;
//! * the classical James-Stein comparator `(1 - c/||Y||^2) Y`.
//!
//! Risk comparisons run on common random numbers: both estimators (and every
//! grid point of `theta`) see the same noise draw per trial, which makes the
//! tiny guaranteed margin `-c^2` resolvable at 1e5..1e6 trials.

use crate::error::{Error, Result};
use crate::mc::{self, RiskReport, Stats};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Where the per-trial covariance comes from.
#[derive(Clone)]
pub enum CovSource {
    /// A fixed positive-definite matrix, factorized once.
    Fixed(DMatrix<f64>),
    /// A sampler drawing a fresh covariance realization per trial.
    Random(Arc<dyn Fn(&mut ChaCha8Rng) -> DMatrix<f64> + Send + Sync>),
}

impl std::fmt::Debug for CovSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CovSource::Fixed(m) => write!(f, "CovSource::Fixed({}x{})", m.nrows(), m.ncols()),
            CovSource::Random(_) => write!(f, "CovSource::Random(..)"),
        }
    }
}

/// Observation model `Y = theta + xi` with conditionally Gaussian noise.
#[derive(Debug, Clone)]
pub struct CondGaussModel {
    pub theta: DVector<f64>,
    pub cov_source: CovSource,
}

impl CondGaussModel {
    pub fn new(theta: DVector<f64>, cov_source: CovSource) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::Domain(format!(
                "dimension p must be >= 2, got {}",
                theta.len()
            )));
        }
        if let CovSource::Fixed(m) = &cov_source {
            if m.nrows() != theta.len() || m.ncols() != theta.len() {
                return Err(Error::Domain(format!(
                    "covariance is {}x{}, theta has length {}",
                    m.nrows(),
                    m.ncols(),
                    theta.len()
                )));
            }
            if Cholesky::new(m.clone()).is_none() {
                return Err(Error::NotPositiveDefinite(
                    "fixed covariance failed Cholesky".into(),
                ));
            }
        }
        Ok(Self { theta, cov_source })
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }
}

/// Shrinkage configuration: the constant `c` together with the compact-set
/// and eigenvalue data that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageConfig {
    pub c: f64,
    pub d: f64,
    pub lambda_star: f64,
    pub a_star: f64,
    pub gamma_p: f64,
}

impl ShrinkageConfig {
    /// Builds the configuration with the risk-optimal constant
    /// `c = (p-1) lambda_star gamma_p`.
    pub fn optimal(
        p: usize,
        d: f64,
        lambda_star: f64,
        a_star: f64,
        gamma_p: f64,
    ) -> Result<Self> {
        Ok(Self {
            c: optimal_shrink_constant(p, lambda_star, gamma_p)?,
            d,
            lambda_star,
            a_star,
            gamma_p,
        })
    }
}

/// The norm-shrinkage estimate `(1 - c/||y||) y`.
///
/// The factor is kept as written even when `||y|| < c` makes it negative; no
/// positive-part modification. At `||y|| = 0` (a null event) the zero vector
/// is returned.
pub fn shrink_estimate(y: &DVector<f64>, c: f64) -> DVector<f64> {
    let norm = y.norm();
    if norm == 0.0 {
        return DVector::zeros(y.len());
    }
    y * (1.0 - c / norm)
}

/// The James-Stein estimate `(1 - c/||y||^2) y`; zero vector at `||y|| = 0`.
pub fn james_stein_estimate(y: &DVector<f64>, c: f64) -> DVector<f64> {
    let sq = y.norm_squared();
    if sq == 0.0 {
        return DVector::zeros(y.len());
    }
    y * (1.0 - c / sq)
}

/// Default James-Stein constant `p - 2` for the identity-covariance comparator.
pub fn james_stein_default_c(p: usize) -> f64 {
    (p as f64 - 2.0).max(0.0)
}

/// Least squares estimate: the observation itself.
pub fn ls_estimate(y: &DVector<f64>) -> DVector<f64> {
    y.clone()
}

/// The risk-optimal shrinkage constant `c = (p-1) lambda_star gamma_p`.
pub fn optimal_shrink_constant(p: usize, lambda_star: f64, gamma_p: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("dimension p must be >= 2, got {p}")));
    }
    if !(lambda_star > 0.0) {
        return Err(Error::Domain(format!(
            "lambda_star must be > 0, got {lambda_star}"
        )));
    }
    if !(gamma_p > 0.0) {
        return Err(Error::Domain(format!("gamma_p must be > 0, got {gamma_p}")));
    }
    Ok((p as f64 - 1.0) * lambda_star * gamma_p)
}

/// Guaranteed upper bound on the risk difference: `-[(p-1) lambda_star gamma_p]^2`.
pub fn risk_difference_bound(p: usize, lambda_star: f64, gamma_p: f64) -> Result<f64> {
    let c = optimal_shrink_constant(p, lambda_star, gamma_p)?;
    Ok(-c * c)
}

/// Estimator selector for risk runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ls,
    Shrink { c: f64 },
    JamesStein { c: f64 },
}

impl Estimator {
    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        match *self {
            Estimator::Ls => ls_estimate(y),
            Estimator::Shrink { c } => shrink_estimate(y, c),
            Estimator::JamesStein { c } => james_stein_estimate(y, c),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Estimator::Ls => "ls".into(),
            Estimator::Shrink { c } => format!("shrink(c={c:.6})"),
            Estimator::JamesStein { c } => format!("james_stein(c={c:.6})"),
        }
    }
}

fn standard_normal_vector(p: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(p, |_, _| StandardNormal.sample(rng))
}

/// Draws one observation: a covariance realization `D`, then `Y = theta + L z`
/// with `L` the Cholesky factor of `D`. Returns the realized covariance
/// alongside the observation.
pub fn sample_observation(
    model: &CondGaussModel,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (chol, d) = realize_covariance(model, rng)?;
    let z = standard_normal_vector(model.p(), rng);
    let y = &model.theta + chol.l() * z;
    Ok((y, d))
}

fn realize_covariance(
    model: &CondGaussModel,
    rng: &mut ChaCha8Rng,
) -> Result<(Cholesky<f64, Dyn>, DMatrix<f64>)> {
    let d = match &model.cov_source {
        CovSource::Fixed(m) => m.clone(),
        CovSource::Random(sampler) => sampler(rng),
    };
    let chol = Cholesky::new(d.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("sampled covariance failed Cholesky".into())
    })?;
    Ok((chol, d))
}

/// Draws the noise `xi = L z` only (the part of the observation that does not
/// depend on `theta`). One draw per trial serves every grid point.
fn sample_noise(model: &CondGaussModel, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    let (chol, _) = realize_covariance(model, rng)?;
    let z = standard_normal_vector(model.p(), rng);
    Ok(chol.l() * z)
}

/// Monte Carlo quadratic risk of `estimator` under `model`.
///
/// Deterministic for a given `(seed, trials)` pair regardless of thread
/// count; per-trial generators are derived from the trial index.
pub fn mc_risk(
    estimator: Estimator,
    model: &CondGaussModel,
    trials: u64,
    seed: u64,
) -> Result<RiskReport> {
    if trials < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 trials for a meaningful risk estimate, got {trials}"
        )));
    }
    let stats = mc::accumulate(
        seed,
        trials,
        Stats::default,
        |acc, _trial, rng| {
            let (y, _) = sample_observation(model, rng).expect("covariance factorization");
            let err = estimator.apply(&y) - &model.theta;
            acc.push(err.norm_squared());
        },
        Stats::merge,
    );
    Ok(RiskReport::from_stats(&estimator.name(), &stats, None, seed))
}

/// Risk comparison at one grid point.
#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub theta: DVector<f64>,
    pub risk_shrink: RiskReport,
    pub risk_ls: RiskReport,
    /// Empirical risk difference (shrink minus least squares).
    pub delta: f64,
    /// Three-sigma half-width of the paired difference.
    pub delta_half_width: f64,
}

/// Sweeps a grid of parameter points and estimates the risk difference
/// `Delta(theta) = R(shrink) - R(ls)` at each, using common random numbers:
/// one noise draw per trial is shared by both estimators and all grid points.
///
/// Returns the worst (largest) empirical difference together with the
/// per-point reports.
pub fn sup_delta_over_grid(
    model_family: &CondGaussModel,
    config: &ShrinkageConfig,
    theta_grid: &[DVector<f64>],
    trials: u64,
    seed: u64,
) -> Result<(f64, Vec<DeltaReport>)> {
    if trials < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    if theta_grid.is_empty() {
        return Err(Error::Precondition("theta grid is empty".into()));
    }
    for theta in theta_grid {
        if theta.len() != model_family.p() {
            return Err(Error::Domain(format!(
                "grid point of length {} in a dimension-{} model",
                theta.len(),
                model_family.p()
            )));
        }
        if theta.norm() > config.d + 1e-12 {
            return Err(Error::Domain(format!(
                "grid point with norm {} lies outside the ball of radius {}",
                theta.norm(),
                config.d
            )));
        }
    }
    let c = config.c;
    let per_point = paired_delta_sweep(
        theta_grid,
        c,
        trials,
        seed,
        |rng| sample_noise(model_family, rng).expect("covariance factorization"),
    );
    Ok(finalize_delta_reports(theta_grid, per_point, c, seed))
}

/// Accumulators per grid point: shrink risk, ls risk, paired difference.
pub(crate) fn paired_delta_sweep<F>(
    theta_grid: &[DVector<f64>],
    c: f64,
    trials: u64,
    seed: u64,
    noise: F,
) -> Vec<[Stats; 3]>
where
    F: Fn(&mut ChaCha8Rng) -> DVector<f64> + Sync,
{
    let k = theta_grid.len();
    mc::accumulate(
        seed,
        trials,
        || vec![[Stats::default(); 3]; k],
        |acc, _trial, rng| {
            let xi = noise(rng);
            let ls_sq = xi.norm_squared();
            for (g, theta) in theta_grid.iter().enumerate() {
                let y = theta + &xi;
                let shrink_sq = (shrink_estimate(&y, c) - theta).norm_squared();
                acc[g][0].push(shrink_sq);
                acc[g][1].push(ls_sq);
                acc[g][2].push(shrink_sq - ls_sq);
            }
        },
        |mut a, b| {
            for (sa, sb) in a.iter_mut().zip(b) {
                for (x, y) in sa.iter_mut().zip(sb) {
                    *x = x.merge(y);
                }
            }
            a
        },
    )
}

pub(crate) fn finalize_delta_reports(
    theta_grid: &[DVector<f64>],
    per_point: Vec<[Stats; 3]>,
    c: f64,
    seed: u64,
) -> (f64, Vec<DeltaReport>) {
    let mut worst = f64::NEG_INFINITY;
    let mut reports = Vec::with_capacity(theta_grid.len());
    for (theta, stats) in theta_grid.iter().zip(per_point) {
        let delta = stats[2].mean();
        worst = worst.max(delta);
        reports.push(DeltaReport {
            theta: theta.clone(),
            risk_shrink: RiskReport::from_stats(
                &Estimator::Shrink { c }.name(),
                &stats[0],
                None,
                seed,
            ),
            risk_ls: RiskReport::from_stats("ls", &stats[1], None, seed),
            delta,
            delta_half_width: stats[2].half_width3(),
        });
    }
    (worst, reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, SETUP_STREAM};
    use crate::special::{expected_inverse_norm, risk_at_origin};

    fn identity_model(p: usize, theta: DVector<f64>) -> CondGaussModel {
        CondGaussModel::new(theta, CovSource::Fixed(DMatrix::identity(p, p))).unwrap()
    }

    #[test]
    fn shrink_estimate_examples() {
        let y = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(shrink_estimate(&y, 0.0), y);
        let s = shrink_estimate(&y, 1.0);
        assert!((s[0] - 2.4).abs() < 1e-14 && (s[1] - 3.2).abs() < 1e-14);
        let z = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(shrink_estimate(&z, 2.5), z);
    }

    #[test]
    fn shrink_factor_may_go_negative() {
        let y = DVector::from_vec(vec![0.3, 0.4]);
        let s = shrink_estimate(&y, 1.0);
        // ||y|| = 0.5 < c = 1, so the estimate flips sign instead of clipping.
        assert!(s[0] < 0.0 && s[1] < 0.0);
    }

    #[test]
    fn james_stein_examples() {
        let y = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(james_stein_estimate(&y, 0.0), y);
        let s = james_stein_estimate(&y, 5.0);
        assert!((s[0] - 2.4).abs() < 1e-14 && (s[1] - 3.2).abs() < 1e-14);
        assert_eq!(
            james_stein_estimate(&DVector::zeros(2), 1.0),
            DVector::zeros(2)
        );
        assert_eq!(james_stein_default_c(5), 3.0);
        assert_eq!(james_stein_default_c(2), 0.0);
    }

    #[test]
    fn ls_is_identity() {
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(ls_estimate(&y), y);
    }

    #[test]
    fn optimal_constant_and_bound() {
        assert!((optimal_shrink_constant(2, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((optimal_shrink_constant(5, 0.5, 0.2).unwrap() - 0.4).abs() < 1e-15);
        let c = optimal_shrink_constant(2, 1.0, 0.3).unwrap();
        let b = risk_difference_bound(2, 1.0, 0.3).unwrap();
        assert!((b + c * c).abs() < 1e-15);
        assert!((b + 0.09).abs() < 1e-15);
        assert!(b < 0.0);
        assert!(optimal_shrink_constant(1, 1.0, 0.3).is_err());
        assert!(optimal_shrink_constant(3, -1.0, 0.3).is_err());
        assert!(risk_difference_bound(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn sample_observation_chi_square_mean() {
        let p = 4;
        let model = identity_model(p, DVector::zeros(p));
        let mut stats = Stats::default();
        for trial in 0..100_000u64 {
            let mut rng = substream(11, trial);
            let (y, _) = sample_observation(&model, &mut rng).unwrap();
            stats.push(y.norm_squared());
        }
        // E||Y||^2 = p, Var = 2p
        assert!((stats.mean() - p as f64).abs() < stats.half_width3());
    }

    #[test]
    fn sample_observation_unbiased() {
        let p = 3;
        let theta = DVector::from_element(p, 1.0);
        let model = identity_model(p, theta.clone());
        let mut mean = DVector::zeros(p);
        let trials = 40_000u64;
        for trial in 0..trials {
            let mut rng = substream(12, trial);
            let (y, _) = sample_observation(&model, &mut rng).unwrap();
            mean += y;
        }
        mean /= trials as f64;
        for j in 0..p {
            assert!((mean[j] - theta[j]).abs() < 3.0 / (trials as f64).sqrt() + 1e-3);
        }
    }

    #[test]
    fn fixed_covariance_eigen_floor() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.8, 1.2]));
        let model =
            CondGaussModel::new(DVector::zeros(3), CovSource::Fixed(d.clone())).unwrap();
        let (_, realized) = sample_observation(&model, &mut substream(1, SETUP_STREAM)).unwrap();
        let min_eig = realized
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= 0.5 - 1e-12);
    }

    #[test]
    fn rejects_non_spd_covariance() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CondGaussModel::new(DVector::zeros(2), CovSource::Fixed(bad)).is_err());
    }

    #[test]
    fn mc_risk_of_ls_is_trace() {
        let p = 5;
        let model = identity_model(p, DVector::zeros(p));
        let report = mc_risk(Estimator::Ls, &model, 100_000, 7).unwrap();
        assert!((report.empirical_risk - p as f64).abs() < report.half_width);

        // Arbitrary theta, non-identity D: risk = tr D.
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.5, 2.0]));
        let model2 = CondGaussModel::new(
            DVector::from_vec(vec![0.3, -0.7, 1.1]),
            CovSource::Fixed(d),
        )
        .unwrap();
        let report2 = mc_risk(Estimator::Ls, &model2, 100_000, 8).unwrap();
        assert!((report2.empirical_risk - 4.0).abs() < report2.half_width);
    }

    #[test]
    fn mc_risk_requires_enough_trials() {
        let model = identity_model(2, DVector::zeros(2));
        assert!(mc_risk(Estimator::Ls, &model, 10, 1).is_err());
    }

    #[test]
    fn james_stein_risk_at_origin_is_two() {
        let p = 5;
        let model = identity_model(p, DVector::zeros(p));
        let report = mc_risk(
            Estimator::JamesStein {
                c: james_stein_default_c(p),
            },
            &model,
            200_000,
            21,
        )
        .unwrap();
        assert!(
            (report.empirical_risk - 2.0).abs() < report.half_width,
            "JS risk {} +- {}",
            report.empirical_risk,
            report.half_width
        );
    }

    #[test]
    fn shrink_risk_at_origin_matches_closed_form() {
        let p = 5;
        let model = identity_model(p, DVector::zeros(p));
        let c = (p as f64 - 1.0) * expected_inverse_norm(p).unwrap();
        let report = mc_risk(Estimator::Shrink { c }, &model, 200_000, 22).unwrap();
        let want = risk_at_origin(p).unwrap();
        assert!(
            (report.empirical_risk - want).abs() < report.half_width,
            "risk {} +- {} vs r_p {}",
            report.empirical_risk,
            report.half_width,
            want
        );
    }

    #[test]
    fn mc_risk_identical_across_thread_counts() {
        let model = identity_model(3, DVector::from_vec(vec![0.5, 0.0, -0.5]));
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| mc_risk(Estimator::Shrink { c: 0.4 }, &model, 50_000, 99).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn point_mass_sampler_matches_fixed() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let fixed = CondGaussModel::new(DVector::zeros(2), CovSource::Fixed(d.clone())).unwrap();
        let sampled = CondGaussModel::new(
            DVector::zeros(2),
            CovSource::Random(Arc::new(move |_rng: &mut ChaCha8Rng| d.clone())),
        )
        .unwrap();
        let a = mc_risk(Estimator::Ls, &fixed, 50_000, 3).unwrap();
        let b = mc_risk(Estimator::Ls, &sampled, 50_000, 3).unwrap();
        // Point-mass sampler draws nothing from the stream, so the runs agree
        // exactly, not just statistically.
        assert_eq!(a.empirical_risk, b.empirical_risk);
    }

    #[test]
    fn delta_at_origin_is_rp_minus_p() {
        let p = 5;
        let model = identity_model(p, DVector::zeros(p));
        let c = (p as f64 - 1.0) * expected_inverse_norm(p).unwrap();
        let config = ShrinkageConfig {
            c,
            d: 1.0,
            lambda_star: 1.0,
            a_star: 1.0,
            gamma_p: expected_inverse_norm(p).unwrap(),
        };
        let grid = vec![DVector::zeros(p)];
        let (worst, reports) = sup_delta_over_grid(&model, &config, &grid, 200_000, 5).unwrap();
        let want = risk_at_origin(p).unwrap() - p as f64;
        assert!(want < 0.0);
        assert!(
            (worst - want).abs() < reports[0].delta_half_width,
            "delta {} vs expected {}",
            worst,
            want
        );
    }

    #[test]
    fn sup_delta_rejects_bad_grid() {
        let model = identity_model(2, DVector::zeros(2));
        let config = ShrinkageConfig {
            c: 0.1,
            d: 1.0,
            lambda_star: 1.0,
            a_star: 1.0,
            gamma_p: 0.1,
        };
        // zero trials
        assert!(sup_delta_over_grid(&model, &config, &[DVector::zeros(2)], 0, 1).is_err());
        // grid point outside the ball
        let far = DVector::from_vec(vec![2.0, 0.0]);
        assert!(sup_delta_over_grid(&model, &config, &[far], 2000, 1).is_err());
        // empty grid
        assert!(sup_delta_over_grid(&model, &config, &[], 2000, 1).is_err());
    }
}

//! Continuous-time regression `dy_t = sum_j theta_j phi_j(t) dt + d xi_t`
//! observed on `[0, n]`, with the pulse-type noise of [`crate::oulevy`].
//!
//! The least squares estimate `theta_hat_j = n^{-1} \int_0^n phi_j dy` splits
//! into `theta_j + n^{-1} I_n(phi_j)` by orthonormality of the basis over
//! integer horizons, so the observation path itself is never materialized:
//! the deterministic part is exact and the stochastic part is the simulated
//! integral vector. Shrinking the estimate by `c = rho1^2 (p-1) gamma_p / n`
//! lowers its quadratic risk uniformly over the parameter ball.

use crate::condgauss::{self, shrink_estimate, DeltaReport};
use crate::error::{Error, Result};
use crate::oulevy::{integrate_basis_path, stochastic_integral, NoiseParams, SimulatedPath, TrigBasis};
use crate::special::{gamma_p_quadrature, GammaPInputs};
use nalgebra::DVector;

/// A complete experiment description for the regression risk comparison.
#[derive(Debug, Clone)]
pub struct RegressionExperiment {
    /// Base parameter point; must lie in the ball of radius `d`.
    pub theta: DVector<f64>,
    pub basis: TrigBasis,
    pub noise: NoiseParams,
    /// Number of observation periods (integer horizon).
    pub n: u32,
    /// Radius of the parameter ball.
    pub d: f64,
    pub trials: u64,
    pub seed: u64,
    /// Simulation grid step per unit time.
    pub step: f64,
}

impl RegressionExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.basis.p() < 2 {
            return Err(Error::Domain(format!(
                "dimension p must be >= 2, got {}",
                self.basis.p()
            )));
        }
        if self.theta.len() != self.basis.p() {
            return Err(Error::Domain(format!(
                "theta has length {}, basis has {} functions",
                self.theta.len(),
                self.basis.p()
            )));
        }
        if self.n == 0 {
            return Err(Error::Domain("horizon n must be >= 1".into()));
        }
        if !(self.d > 0.0) {
            return Err(Error::Domain(format!("radius d must be > 0, got {}", self.d)));
        }
        if self.theta.norm() > self.d + 1e-12 {
            return Err(Error::Domain(format!(
                "theta with norm {} lies outside the ball of radius {}",
                self.theta.norm(),
                self.d
            )));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.basis.p()
    }
}

/// Which eigenvalue bound feeds `gamma_p` for the improved estimator.
///
/// The estimate error is `n^{-1/2} zeta(n)`, whose covariance is the
/// conditional covariance scaled by `1/n`; its expected maximal eigenvalue is
/// bounded by `3 p rho* / n`, so the scaled variant is the default. The
/// unscaled variant (`3 p rho*`) is kept selectable for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaVariant {
    ScaledByHorizon,
    Unscaled,
}

impl GammaVariant {
    pub fn a_star(&self, p: usize, rho_star: f64, n: u32) -> f64 {
        let raw = 3.0 * p as f64 * rho_star;
        match self {
            GammaVariant::ScaledByHorizon => raw / n as f64,
            GammaVariant::Unscaled => raw,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GammaVariant::ScaledByHorizon => "scaled_by_horizon",
            GammaVariant::Unscaled => "unscaled",
        }
    }
}

/// `gamma_p` for the experiment: radius `d` of the parameter ball, eigenvalue
/// bound from the chosen variant.
pub fn experiment_gamma_p(exp: &RegressionExperiment, variant: GammaVariant) -> Result<f64> {
    let a_star = variant.a_star(exp.p(), exp.noise.rho_star(), exp.n);
    gamma_p_quadrature(&GammaPInputs::new(exp.p(), exp.d, a_star)?)
}

/// Least squares estimate from a stored path:
/// `theta_hat_j = theta_j + n^{-1} I_n(phi_j)`.
pub fn lse(
    path: &SimulatedPath,
    basis: &TrigBasis,
    theta: &DVector<f64>,
    n: u32,
) -> DVector<f64> {
    let scale = 1.0 / n as f64;
    DVector::from_fn(basis.p(), |j, _| {
        theta[j] + scale * stochastic_integral(path, |t| basis.value(j, t))
    })
}

/// Shrinkage constant of the improved estimator: `rho1^2 (p-1) gamma_p / n`.
pub fn improved_shrink_constant(p: usize, n: u32, rho1: f64, gamma_p: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("dimension p must be >= 2, got {p}")));
    }
    if n == 0 {
        return Err(Error::Domain("horizon n must be >= 1".into()));
    }
    if !(rho1 > 0.0) {
        return Err(Error::Domain(format!("rho1 must be > 0, got {rho1}")));
    }
    Ok(rho1 * rho1 * (p as f64 - 1.0) * gamma_p / n as f64)
}

/// The improved estimator: shrink the least squares estimate by
/// `c = rho1^2 (p-1) gamma_p / n`.
pub fn improved_estimate(
    theta_hat: &DVector<f64>,
    p: usize,
    n: u32,
    rho1: f64,
    gamma_p: f64,
) -> Result<DVector<f64>> {
    let c = improved_shrink_constant(p, n, rho1, gamma_p)?;
    Ok(shrink_estimate(theta_hat, c))
}

/// Guaranteed risk-difference bound `-[rho1^2 (p-1) gamma_p / n]^2`.
pub fn improved_risk_bound(p: usize, n: u32, rho1: f64, gamma_p: f64) -> Result<f64> {
    let c = improved_shrink_constant(p, n, rho1, gamma_p)?;
    Ok(-c * c)
}

/// Outcome of the regression risk sweep.
#[derive(Debug, Clone)]
pub struct RegressionSweep {
    pub reports: Vec<DeltaReport>,
    pub worst_delta: f64,
    pub gamma_p: f64,
    pub shrink_constant: f64,
    pub risk_bound: f64,
    pub variant: GammaVariant,
}

/// Risk comparison of least squares versus the improved estimator over a grid
/// of parameter points, with common random numbers: each trial simulates one
/// noise integral vector that serves every grid point and both estimators.
pub fn mc_domination_sweep(
    exp: &RegressionExperiment,
    theta_grid: &[DVector<f64>],
    variant: GammaVariant,
) -> Result<RegressionSweep> {
    exp.validate()?;
    if exp.trials < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 trials, got {}",
            exp.trials
        )));
    }
    if theta_grid.is_empty() {
        return Err(Error::Precondition("theta grid is empty".into()));
    }
    for point in theta_grid {
        if point.len() != exp.p() {
            return Err(Error::Domain("grid point dimension mismatch".into()));
        }
        if point.norm() > exp.d + 1e-12 {
            return Err(Error::Domain(format!(
                "grid point with norm {} lies outside the ball of radius {}",
                point.norm(),
                exp.d
            )));
        }
    }
    let gamma_p = experiment_gamma_p(exp, variant)?;
    let c = improved_shrink_constant(exp.p(), exp.n, exp.noise.rho1, gamma_p)?;
    let p = exp.p();
    let basis = exp.basis;
    let noise = exp.noise;
    let n = exp.n;
    let step = exp.step;
    let per_point = condgauss::paired_delta_sweep(theta_grid, c, exp.trials, exp.seed, |rng| {
        let mut out = vec![0.0; p];
        integrate_basis_path(&noise, &basis, n, step, rng, None, &mut out)
            .expect("path simulation");
        let scale = 1.0 / n as f64;
        DVector::from_iterator(p, out.iter().map(|v| v * scale))
    });
    let (worst_delta, reports) =
        condgauss::finalize_delta_reports(theta_grid, per_point, c, exp.seed);
    Ok(RegressionSweep {
        reports,
        worst_delta,
        gamma_p,
        shrink_constant: c,
        risk_bound: -c * c,
        variant,
    })
}

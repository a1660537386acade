//! Improved (shrinkage) parameter estimation for regression models whose
//! noise is a pulse-type Ornstein-Uhlenbeck process: a Brownian component
//! plus compound-Poisson jumps with Gaussian marks.
//!
//! The crate covers four layers:
//!
//! * [`special`] — Gamma function, the Gaussian reciprocal integral, and the
//!   shrinkage constant `gamma_p` (closed form and quadrature).
//! * [`condgauss`] — estimation of the mean of a conditionally Gaussian
//!   vector: least squares, norm shrinkage, the James-Stein comparator, and
//!   Monte Carlo risk comparison with common random numbers.
//! * [`oulevy`] — simulation of the noise process, stochastic integrals
//!   against it, and the conditional covariance of the integral vector given
//!   the jump times, together with its eigenvalue checks.
//! * [`regression`] / [`ar1`] — the continuous-time regression and discrete
//!   AR(1) front ends that plug the noise models into the shrinkage theory.
//!
//! All Monte Carlo entry points take an explicit seed and produce results
//! that are bitwise independent of worker-thread count.

pub mod ar1;
pub mod condgauss;
pub mod error;
pub mod mc;
pub mod oulevy;
pub mod quad;
pub mod regression;
pub mod rng;
pub mod special;

pub use error::{Error, Result};

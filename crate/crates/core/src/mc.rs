//! Deterministic parallel Monte Carlo accumulation.
//!
//! Trials are grouped into fixed-size blocks. Each block is accumulated
//! sequentially in trial order, blocks may run on any number of worker
//! threads, and block results are merged in block order. The reduction tree
//! therefore never depends on thread count and results are bitwise
//! reproducible.

use crate::rng::substream;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Trials per scheduling block. Fixed: changing it changes summation order.
const BLOCK: u64 = 4096;

/// Runs `trials` independent trials and merges per-block accumulators in a
/// fixed order.
///
/// `step` receives the trial index and that trial's dedicated generator.
pub fn accumulate<A, I, S, M>(seed: u64, trials: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64, &mut ChaCha8Rng) + Sync,
    M: Fn(A, A) -> A,
{
    let blocks = trials.div_ceil(BLOCK);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(trials);
            let mut acc = init();
            for trial in lo..hi {
                let mut rng = substream(seed, trial);
                step(&mut acc, trial, &mut rng);
            }
            acc
        })
        .collect();
    partials.into_iter().fold(init(), |a, b| merge(a, b))
}

/// Running sum / sum-of-squares with an exact, order-fixed merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: Stats) -> Stats {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Sample variance of the observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Three standard errors of the mean.
    pub fn half_width3(&self) -> f64 {
        3.0 * (self.variance() / self.n as f64).sqrt()
    }
}

/// Empirical quadratic risk of an estimator with a Monte Carlo error bar.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub estimator_name: String,
    pub empirical_risk: f64,
    /// Three-sigma confidence half-width of the risk estimate.
    pub half_width: f64,
    pub trials: u64,
    pub theoretical_bound: Option<f64>,
    pub seed: u64,
}

impl RiskReport {
    pub fn from_stats(name: &str, stats: &Stats, bound: Option<f64>, seed: u64) -> Self {
        RiskReport {
            estimator_name: name.to_string(),
            empirical_risk: stats.mean(),
            half_width: stats.half_width3(),
            trials: stats.n,
            theoretical_bound: bound,
            seed,
        }
    }
}

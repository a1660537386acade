//! The pulse-type noise process and its second-order structure.
//!
//! The noise solves `d xi_t = a xi_t dt + d u_t` with `a <= 0`, where
//! `u = rho1 w + rho2 z` mixes a standard Brownian motion with a compound
//! Poisson process whose marks are standard normal. Conditionally on the jump
//! times, the vector of normalized stochastic integrals of the basis
//! functions is Gaussian with mean zero; this module computes its covariance
//! both by simulation and in closed quadrature form, and verifies the
//! eigenvalue floor and the expected spectral bound that the shrinkage theory
//! relies on.
//!
//! Simulation uses exact transitions: between grid points the
//! Ornstein-Uhlenbeck step is sampled from its true Gaussian law, and jumps
//! are inserted at their exact times. Only the left-point evaluation of the
//! integrand carries an `O(h)` discretization bias.

use crate::error::{Error, Result};
use crate::mc::{self, Stats};
use crate::quad::adaptive_simpson;
use crate::rng::substream;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use std::f64::consts::PI;

/// Parameters of the pulse-type Ornstein-Uhlenbeck noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Mean-reversion coefficient `a <= 0` in `d xi = a xi dt + du`.
    pub mean_reversion: f64,
    /// Scale of the Brownian component; must be positive.
    pub rho1: f64,
    /// Scale of the jump component; nonnegative.
    pub rho2: f64,
    /// Poisson intensity of the jump times; positive.
    pub lambda: f64,
}

impl NoiseParams {
    pub fn new(mean_reversion: f64, rho1: f64, rho2: f64, lambda: f64) -> Result<Self> {
        if mean_reversion > 0.0 {
            return Err(Error::Domain(format!(
                "mean reversion must be <= 0, got {mean_reversion}"
            )));
        }
        if !(rho1 > 0.0) {
            return Err(Error::Domain(format!("rho1 must be > 0, got {rho1}")));
        }
        if !(rho2 >= 0.0) {
            return Err(Error::Domain(format!("rho2 must be >= 0, got {rho2}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(Self {
            mean_reversion,
            rho1,
            rho2,
            lambda,
        })
    }

    /// Total second-moment rate `rho* = rho1^2 + lambda rho2^2`.
    pub fn rho_star(&self) -> f64 {
        self.rho1 * self.rho1 + self.lambda * self.rho2 * self.rho2
    }
}

/// The trigonometric basis: `phi_1 = 1`, `phi_{2k} = sqrt(2) cos(2 pi k t)`,
/// `phi_{2k+1} = sqrt(2) sin(2 pi k t)`. One-periodic and orthonormal on
/// `[0, 1]`, hence `\int_0^n phi_i phi_j = n delta_ij` over integer horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigBasis {
    p: usize,
}

impl TrigBasis {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Domain("basis needs at least one function".into()));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Value of the `j`-th basis function (0-based) at time `t`.
    pub fn value(&self, j: usize, t: f64) -> f64 {
        debug_assert!(j < self.p);
        if j == 0 {
            return 1.0;
        }
        let k = ((j + 1) / 2) as f64;
        let arg = 2.0 * PI * k * t;
        if j % 2 == 1 {
            2f64.sqrt() * arg.cos()
        } else {
            2f64.sqrt() * arg.sin()
        }
    }

    /// Evaluates all basis functions at `t` into `out`.
    pub fn values_into(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.p);
        out[0] = 1.0;
        let mut j = 1;
        let mut k = 1u32;
        while j < self.p {
            let (s, c) = (2.0 * PI * k as f64 * t).sin_cos();
            out[j] = 2f64.sqrt() * c;
            if j + 1 < self.p {
                out[j + 1] = 2f64.sqrt() * s;
            }
            j += 2;
            k += 1;
        }
    }

    /// Highest harmonic index used by the basis.
    fn max_harmonic(&self) -> usize {
        self.p / 2
    }
}

/// Jump times and marks of the compound Poisson component on `[0, n]`.
///
/// The record is the realization of the conditioning information: the jump
/// *times* generate the conditioning sigma-algebra, while the marks stay
/// random under it (their conditional second moment is one). Oracles that
/// condition on a record keep its times and redraw the marks.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub times: Vec<f64>,
    pub marks: Vec<f64>,
}

impl JumpRecord {
    pub fn new(times: Vec<f64>, marks: Vec<f64>) -> Result<Self> {
        if times.len() != marks.len() {
            return Err(Error::Domain(format!(
                "{} jump times but {} marks",
                times.len(),
                marks.len()
            )));
        }
        if times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Domain("jump times must be nonnegative".into()));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("jump times must be ascending".into()));
        }
        Ok(Self { times, marks })
    }

    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            marks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same jump times, freshly drawn standard-normal marks.
    pub fn resample_marks(&self, rng: &mut ChaCha8Rng) -> JumpRecord {
        JumpRecord {
            times: self.times.clone(),
            marks: (0..self.times.len())
                .map(|_| StandardNormal.sample(rng))
                .collect(),
        }
    }
}

/// Draws a jump configuration on `[0, n]`: a Poisson(`lambda n`) count, that
/// many sorted uniform times, then standard-normal marks.
pub fn sample_jumps(params: &NoiseParams, n: u32, rng: &mut ChaCha8Rng) -> JumpRecord {
    let mean = params.lambda * n as f64;
    let count = Poisson::new(mean).map_or(0, |p| p.sample(rng) as usize);
    let mut times: Vec<f64> = (0..count).map(|_| rng.gen::<f64>() * n as f64).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let marks = (0..count).map(|_| StandardNormal.sample(rng)).collect();
    JumpRecord { times, marks }
}

/// A discretized trajectory of the noise.
///
/// The grid contains 0, `n`, every jump time, and a uniform fill of step `h`.
/// At a node that is a jump time, `xi` stores the pre-jump value; the jump
/// belongs to the increment of the *following* cell. The left-point integral
/// sum then weights each jump by the integrand value at exactly the jump time.
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub grid: Vec<f64>,
    pub xi: Vec<f64>,
    /// Increments of the driving process `u` over grid cells
    /// (`len = grid.len() - 1`).
    pub u_increments: Vec<f64>,
    pub jumps: JumpRecord,
}

/// Per-cell stepping plan shared by the stored and streaming simulations.
struct PathPlan {
    /// Left node time of each cell.
    left_times: Vec<f64>,
    /// Cell widths; uniform cells snap to exactly `h`.
    widths: Vec<f64>,
    /// Jump size applied at the start of each cell.
    jump_in: Vec<f64>,
}

impl PathPlan {
    fn build(params: &NoiseParams, n: u32, h: f64, jumps: &JumpRecord) -> Result<PathPlan> {
        if n == 0 {
            return Err(Error::Precondition("horizon n must be >= 1".into()));
        }
        if !(h > 0.0 && h <= 1e-2) {
            return Err(Error::Precondition(format!(
                "grid step must lie in (0, 1e-2], got {h}"
            )));
        }
        let horizon = n as f64;
        let mut nodes: Vec<(f64, f64)> =
            Vec::with_capacity((horizon / h) as usize + jumps.len() + 2);
        let mut k = 0u64;
        loop {
            let t = k as f64 * h;
            if t >= horizon {
                break;
            }
            nodes.push((t, 0.0));
            k += 1;
        }
        nodes.push((horizon, 0.0));
        for (t, y) in jumps.times.iter().zip(&jumps.marks) {
            if *t > horizon {
                continue;
            }
            let size = params.rho2 * y;
            match nodes.binary_search_by(|probe| probe.0.partial_cmp(t).unwrap()) {
                Ok(idx) => nodes[idx].1 += size,
                Err(idx) => nodes.insert(idx, (*t, size)),
            }
        }
        let cells = nodes.len() - 1;
        let mut left_times = Vec::with_capacity(cells);
        let mut widths = Vec::with_capacity(cells);
        let mut jump_in = Vec::with_capacity(cells);
        for c in 0..cells {
            let w = nodes[c + 1].0 - nodes[c].0;
            left_times.push(nodes[c].0);
            widths.push(if (w - h).abs() < 1e-9 * h { h } else { w });
            jump_in.push(nodes[c].1);
        }
        Ok(PathPlan {
            left_times,
            widths,
            jump_in,
        })
    }
}

/// Exact-transition constants for one cell width.
#[derive(Clone, Copy)]
struct CellConsts {
    decay: f64,
    /// Standard deviation of the unscaled OU innovation.
    innov_sd: f64,
    /// Regression coefficient of the Brownian increment on the innovation.
    w_coef: f64,
    /// Conditional standard deviation of the Brownian increment.
    w_sd: f64,
}

impl CellConsts {
    fn new(a: f64, delta: f64) -> CellConsts {
        if a == 0.0 {
            return CellConsts {
                decay: 1.0,
                innov_sd: delta.sqrt(),
                w_coef: 1.0,
                w_sd: 0.0,
            };
        }
        let decay = (a * delta).exp();
        let var = (decay * decay - 1.0) / (2.0 * a);
        let cov = (decay - 1.0) / a;
        CellConsts {
            decay,
            innov_sd: var.sqrt(),
            w_coef: cov / var,
            w_sd: (delta - cov * cov / var).max(0.0).sqrt(),
        }
    }
}

/// Advances the exact-transition recursion over every cell of `plan`.
///
/// The sink sees `(left_time, xi_increment)` per cell. When `u_out` is given,
/// a Brownian increment consistent with the innovation is drawn as well and
/// the `u` increment pushed there.
fn drive_cells<S: FnMut(f64, f64)>(
    params: &NoiseParams,
    plan: &PathPlan,
    rng: &mut ChaCha8Rng,
    mut u_out: Option<&mut Vec<f64>>,
    mut sink: S,
) {
    let a = params.mean_reversion;
    let uniform_width = plan.widths.first().copied().unwrap_or(1e-3);
    let uniform = CellConsts::new(a, uniform_width);
    let mut xi = 0.0;
    for c in 0..plan.widths.len() {
        let width = plan.widths[c];
        let consts = if width == uniform_width {
            uniform
        } else {
            CellConsts::new(a, width)
        };
        let start = xi + plan.jump_in[c];
        let z1: f64 = StandardNormal.sample(rng);
        let innov = consts.innov_sd * z1;
        let next = consts.decay * start + params.rho1 * innov;
        if let Some(u) = u_out.as_deref_mut() {
            let z2: f64 = StandardNormal.sample(rng);
            let dw = consts.w_coef * innov + consts.w_sd * z2;
            u.push(params.rho1 * dw + plan.jump_in[c]);
        }
        sink(plan.left_times[c], next - xi);
        xi = next;
    }
}

/// Simulates the noise on `[0, n]` with grid step `h`.
///
/// A supplied `JumpRecord` is reused verbatim (times and marks); otherwise a
/// fresh configuration is drawn first. `xi_0 = 0`.
pub fn simulate_path(
    params: &NoiseParams,
    n: u32,
    h: f64,
    rng: &mut ChaCha8Rng,
    jumps: Option<&JumpRecord>,
) -> Result<SimulatedPath> {
    let jumps = match jumps {
        Some(j) => j.clone(),
        None => sample_jumps(params, n, rng),
    };
    let plan = PathPlan::build(params, n, h, &jumps)?;
    let cells = plan.widths.len();
    let mut grid = Vec::with_capacity(cells + 1);
    grid.extend_from_slice(&plan.left_times);
    grid.push(n as f64);
    let mut xi = Vec::with_capacity(cells + 1);
    xi.push(0.0);
    let mut u_increments = Vec::with_capacity(cells);
    let mut acc = 0.0;
    drive_cells(params, &plan, rng, Some(&mut u_increments), |_, dxi| {
        acc += dxi;
        xi.push(acc);
    });
    Ok(SimulatedPath {
        grid,
        xi,
        u_increments,
        jumps,
    })
}

/// Left-point Ito sum `sum_k f(t_k) (xi_{k+1} - xi_k)` over the stored grid.
pub fn stochastic_integral<F: Fn(f64) -> f64>(path: &SimulatedPath, f: F) -> f64 {
    let mut acc = 0.0;
    for k in 0..path.xi.len() - 1 {
        acc += f(path.grid[k]) * (path.xi[k + 1] - path.xi[k]);
    }
    acc
}

/// Streaming variant for Monte Carlo sweeps: accumulates the left-point
/// integrals of every basis function in one pass, without storing the path.
///
/// Draw order per path: jump configuration (if not supplied), then one
/// innovation per cell.
pub fn integrate_basis_path(
    params: &NoiseParams,
    basis: &TrigBasis,
    n: u32,
    h: f64,
    rng: &mut ChaCha8Rng,
    jumps: Option<&JumpRecord>,
    out: &mut [f64],
) -> Result<()> {
    debug_assert_eq!(out.len(), basis.p());
    let owned;
    let jumps = match jumps {
        Some(j) => j,
        None => {
            owned = sample_jumps(params, n, rng);
            &owned
        }
    };
    let plan = PathPlan::build(params, n, h, jumps)?;
    out.fill(0.0);
    let mut phis = vec![0.0; basis.p()];
    drive_cells(params, &plan, rng, None, |t, dxi| {
        basis.values_into(t, &mut phis);
        for (o, phi) in out.iter_mut().zip(&phis) {
            *o += phi * dxi;
        }
    });
    Ok(())
}

/// The exponential kernel
/// `eps_f(t) = a \int_0^t e^{a(t-v)} f(v) (1 + e^{2av}) dv` for `a <= 0`.
pub fn epsilon_kernel<F: Fn(f64) -> f64>(f: F, a: f64, t: f64) -> f64 {
    if a == 0.0 || t == 0.0 {
        return 0.0;
    }
    let tol = 1e-8 / a.abs().max(1.0);
    a * adaptive_simpson(
        |v| (a * (t - v)).exp() * f(v) * (1.0 + (2.0 * a * v).exp()),
        0.0,
        t,
        tol,
    )
}

/// The bilinear transform
/// `tau_{f,g}(t) = 1/2 \int_0^t (2 f g + f eps_g + eps_f g) ds`.
///
/// At `a = 0` the kernel terms vanish and this reduces to `\int_0^t f g`.
pub fn tau_transform<F, G>(f: F, g: G, a: f64, t: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if a == 0.0 {
        return adaptive_simpson(|s| f(s) * g(s), 0.0, t, 1e-9);
    }
    adaptive_simpson(
        |s| {
            f(s) * g(s)
                + 0.5 * (f(s) * epsilon_kernel(&g, a, s) + epsilon_kernel(&f, a, s) * g(s))
        },
        0.0,
        t,
        1e-7,
    )
}

/// The post-jump response kernel
/// `L_f(x, z) = a e^{ax} ( f(z) + a \int_0^x e^{av} f(v+z) dv )`:
/// how a jump at time `z` echoes through the mean reversion `x` time units
/// later.
pub fn jump_response<F: Fn(f64) -> f64>(f: F, a: f64, x: f64, z: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let inner = if x == 0.0 {
        0.0
    } else {
        let tol = 1e-8 / (a * a).max(1.0);
        adaptive_simpson(|v| (a * v).exp() * f(v + z), 0.0, x, tol)
    };
    a * (a * x).exp() * (f(z) + a * inner)
}

/// Unconditional second moment of stochastic integrals:
/// `E I_t(f) I_t(g) = rho* tau_{f,g}(t)`.
pub fn second_moment<F, G>(f: F, g: G, params: &NoiseParams, t: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    params.rho_star() * tau_transform(f, g, params.mean_reversion, t)
}

/// Conditional covariance of the normalized integral vector
/// `zeta_j(n) = n^{-1/2} I_n(phi_j)` given the jump times.
#[derive(Debug, Clone)]
pub struct ConditionalCovariance {
    pub matrix: DMatrix<f64>,
    pub n: u32,
    pub basis: TrigBasis,
    pub jumps: JumpRecord,
}

impl ConditionalCovariance {
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.matrix
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Entry `(i, j)` of the conditional covariance:
///
/// ```text
/// v_ij(n) = rho1^2/n  \int_0^n phi_i phi_j
///         + rho1^2/2n \int_0^n (phi_i eps_{phi_j} + phi_j eps_{phi_i})
///         + rho2^2/n  sum_l phi_i(T_l) phi_j(T_l)            [T_l <= n]
///         + rho2^2/n  sum_l \int_0^n (phi_i(t) L_{phi_j}(t-T_l, T_l)
///                            + phi_j(t) L_{phi_i}(t-T_l, T_l)) [T_l <= t] dt
/// ```
///
/// All integrals are quadratures to absolute tolerance better than 1e-7: the
/// horizon is split at jump times (the last integrand switches on there),
/// each piece uses composite Simpson, and the inner exponential integrals
/// advance by per-cell Simpson panels so the whole evaluation is one sweep
/// over the grid.
pub fn conditional_covariance(
    basis: &TrigBasis,
    params: &NoiseParams,
    jumps: &JumpRecord,
    n: u32,
) -> ConditionalCovariance {
    let p = basis.p();
    let horizon = n as f64;
    let a = params.mean_reversion;
    let npairs = p * (p + 1) / 2;

    // Step from the composite-Simpson error budget, tightened for higher
    // harmonics where the integrand oscillates faster.
    let k_max = basis.max_harmonic().max(1);
    let step = if k_max <= 2 { 1e-3 } else { 2e-3 / k_max as f64 };

    // Segment boundaries: 0, jump times inside (0, n), n.
    let mut bounds = vec![0.0];
    for t in &jumps.times {
        if *t > 0.0 && *t < horizon {
            bounds.push(*t);
        }
    }
    bounds.push(horizon);

    let active_times: Vec<f64> = jumps
        .times
        .iter()
        .copied()
        .filter(|t| *t <= horizon)
        .collect();

    // Running state along the sweep.
    let mut eps = vec![0.0; p]; // eps_{phi_j} at the current node
    let mut phi_prev = vec![0.0; p];
    let mut phi_mid = vec![0.0; p];
    let mut phi_now = vec![0.0; p];
    let mut bigm = vec![0.0; p]; // sum_l L_{phi_j}(t - T_l, T_l) over active jumps
    let mut decay_since: Vec<f64> = Vec::new(); // e^{a (t - T_l)} per active jump
    let mut inner: Vec<f64> = Vec::new(); // K_{j,l} = \int_0^{t-T_l} e^{av} phi_j(v+T_l) dv, laid out [l*p + j]
    let mut next_jump = 0usize;

    let mut acc_plain = vec![0.0; npairs]; // \int phi_i phi_j
    let mut acc_eps = vec![0.0; npairs]; // \int (phi_i eps_j + phi_j eps_i)
    let mut acc_jump = vec![0.0; npairs]; // \int (phi_i M_j + phi_j M_i)

    let mut seg_plain = vec![0.0; npairs];
    let mut seg_eps = vec![0.0; npairs];
    let mut seg_jump = vec![0.0; npairs];

    for seg in bounds.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        if s1 <= s0 {
            continue;
        }
        // Jumps whose time has arrived become active; their inner integral
        // starts from zero at exactly T_l.
        while next_jump < active_times.len() && active_times[next_jump] <= s0 {
            decay_since.push((a * (s0 - active_times[next_jump])).exp());
            inner.extend(std::iter::repeat(0.0).take(p));
            next_jump += 1;
        }

        let m = (((s1 - s0) / step).ceil() as usize)
            .max(2)
            .next_multiple_of(2);
        let delta = (s1 - s0) / m as f64;
        let ea = (a * delta).exp();
        let eah = (a * delta * 0.5).exp();
        let e2a = (2.0 * a * delta).exp();
        let mut q = (2.0 * a * s0).exp(); // e^{2 a t} tracked along the sweep

        seg_plain.fill(0.0);
        seg_eps.fill(0.0);
        seg_jump.fill(0.0);

        basis.values_into(s0, &mut phi_prev);
        for node in 0..=m {
            if node > 0 {
                let t = s0 + node as f64 * delta;
                // Advance the recursions over the cell [t - delta, t].
                basis.values_into(t - 0.5 * delta, &mut phi_mid);
                basis.values_into(t, &mut phi_now);
                let q_mid = q * ea;
                let q_end = q * e2a;
                for j in 0..p {
                    // eps(t) = e^{a delta} eps(t-delta)
                    //        + a \int_0^delta e^{a(delta-u)} phi(t-delta+u)(1+e^{2a(t-delta+u)}) du
                    let g0 = ea * phi_prev[j] * (1.0 + q);
                    let gm = eah * phi_mid[j] * (1.0 + q_mid);
                    let g1 = phi_now[j] * (1.0 + q_end);
                    eps[j] = ea * eps[j] + a * delta / 6.0 * (g0 + 4.0 * gm + g1);
                }
                // Inner-integral panel shared by every active jump:
                // P_j = \int_0^delta e^{au} phi_j(t-delta+u) du, and
                // K_{j,l} += e^{a(t-delta-T_l)} P_j.
                for (l, w) in decay_since.iter_mut().enumerate() {
                    let scale = *w;
                    let row = &mut inner[l * p..(l + 1) * p];
                    for j in 0..p {
                        let panel = delta / 6.0
                            * (phi_prev[j] + 4.0 * eah * phi_mid[j] + ea * phi_now[j]);
                        row[j] += scale * panel;
                    }
                    *w = scale * ea;
                }
                q = q_end;
                phi_prev.copy_from_slice(&phi_now);
            }
            // M_j(t) = sum_l a e^{a(t-T_l)} (phi_j(T_l) + a K_{j,l}(t)).
            bigm.fill(0.0);
            for l in 0..decay_since.len() {
                let w = decay_since[l];
                let tl = active_times[l];
                let row = &inner[l * p..(l + 1) * p];
                for j in 0..p {
                    bigm[j] += a * w * (basis.value(j, tl) + a * row[j]);
                }
            }
            let weight = if node == 0 || node == m {
                1.0
            } else if node % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let mut pair = 0;
            for i in 0..p {
                for j in i..p {
                    seg_plain[pair] += weight * phi_prev[i] * phi_prev[j];
                    seg_eps[pair] += weight * (phi_prev[i] * eps[j] + phi_prev[j] * eps[i]);
                    seg_jump[pair] += weight * (phi_prev[i] * bigm[j] + phi_prev[j] * bigm[i]);
                    pair += 1;
                }
            }
        }
        let scale = delta / 3.0;
        for pair in 0..npairs {
            acc_plain[pair] += scale * seg_plain[pair];
            acc_eps[pair] += scale * seg_eps[pair];
            acc_jump[pair] += scale * seg_jump[pair];
        }
    }

    // Pointwise jump term: sum over T_l <= n of phi_i(T_l) phi_j(T_l).
    let mut point = vec![0.0; npairs];
    for tl in &active_times {
        let mut pair = 0;
        for i in 0..p {
            for j in i..p {
                point[pair] += basis.value(i, *tl) * basis.value(j, *tl);
                pair += 1;
            }
        }
    }

    let r1 = params.rho1 * params.rho1;
    let r2 = params.rho2 * params.rho2;
    let mut matrix = DMatrix::zeros(p, p);
    let mut pair = 0;
    for i in 0..p {
        for j in i..p {
            let v = r1 / horizon * acc_plain[pair]
                + r1 / (2.0 * horizon) * acc_eps[pair]
                + r2 / horizon * point[pair]
                + r2 / horizon * acc_jump[pair];
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
            pair += 1;
        }
    }
    ConditionalCovariance {
        matrix,
        n,
        basis: *basis,
        jumps: jumps.clone(),
    }
}

/// Result of the conditional-variance floor check: the smallest eigenvalue of
/// the conditional covariance must not drop below `rho1^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceFloorCheck {
    pub min_eigenvalue: f64,
    pub floor: f64,
    pub pass: bool,
}

/// Checks `lambda_min(V_n) >= rho1^2 - 1e-6` by a symmetric eigensolve.
///
/// On failure the offending jump configuration is available from the
/// covariance value itself (`cov.jumps`).
pub fn check_variance_floor(
    cov: &ConditionalCovariance,
    params: &NoiseParams,
) -> VarianceFloorCheck {
    let floor = params.rho1 * params.rho1;
    let min_eigenvalue = cov.min_eigenvalue();
    VarianceFloorCheck {
        min_eigenvalue,
        floor,
        pass: min_eigenvalue >= floor - 1e-6,
    }
}

/// Result of the expected-spectral-bound check:
/// `E lambda_max(V_n) <= 3 p rho*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBoundCheck {
    pub mean_lambda_max: f64,
    pub half_width: f64,
    pub bound: f64,
    pub samples: u64,
    pub pass: bool,
}

/// Averages `lambda_max` of the conditional covariance over sampled jump
/// configurations and tests the mean against `3 p rho*` with a three-sigma
/// allowance.
pub fn check_spectral_bound(
    basis: &TrigBasis,
    params: &NoiseParams,
    n: u32,
    samples: u64,
    seed: u64,
) -> SpectralBoundCheck {
    let stats = mc::accumulate(
        seed,
        samples,
        Stats::default,
        |acc, _i, rng| {
            let jumps = sample_jumps(params, n, rng);
            let cov = conditional_covariance(basis, params, &jumps, n);
            acc.push(cov.max_eigenvalue());
        },
        Stats::merge,
    );
    let bound = 3.0 * basis.p() as f64 * params.rho_star();
    let mean = stats.mean();
    let half_width = stats.half_width3();
    SpectralBoundCheck {
        mean_lambda_max: mean,
        half_width,
        bound,
        samples,
        pass: mean - half_width <= bound,
    }
}

/// Min-eigenvalue sweep over freshly sampled jump configurations; returns one
/// check per configuration.
pub fn variance_floor_sweep(
    basis: &TrigBasis,
    params: &NoiseParams,
    n: u32,
    samples: u64,
    seed: u64,
) -> Vec<VarianceFloorCheck> {
    (0..samples)
        .map(|i| {
            let mut rng = substream(seed, i);
            let jumps = sample_jumps(params, n, &mut rng);
            let cov = conditional_covariance(basis, params, &jumps, n);
            check_variance_floor(&cov, params)
        })
        .collect()
}

//! Adaptive and composite quadrature used throughout the crate.
//!
//! The workhorse is adaptive Simpson with an absolute tolerance. Integrands
//! here are smooth (Gaussian tails, decaying exponentials, trigonometric
//! polynomials), so Simpson converges quickly once the initial panels break
//! any period alignment.

/// Maximum recursion depth for the adaptive scheme.
const MAX_DEPTH: u32 = 48;

/// Number of initial panels. Odd so that 1-periodic integrands over integer
/// ranges do not alias against the sample points.
const SEED_PANELS: usize = 9;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let refined = left + right;
    let err = refined - whole;
    if depth >= MAX_DEPTH || err.abs() <= 15.0 * tol {
        return refined + err / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let step = (b - a) / SEED_PANELS as f64;
    let panel_tol = tol / SEED_PANELS as f64;
    let mut total = 0.0;
    for k in 0..SEED_PANELS {
        let x0 = a + k as f64 * step;
        let x1 = if k + 1 == SEED_PANELS {
            b
        } else {
            a + (k + 1) as f64 * step
        };
        let xm = 0.5 * (x0 + x1);
        let f0 = f(x0);
        let fm = f(xm);
        let f1 = f(x1);
        let whole = simpson(f0, fm, f1, x1 - x0);
        total += adapt(&f, x0, x1, f0, fm, f1, whole, panel_tol, 0);
    }
    total
}

/// Composite Simpson over a uniform grid with `panels` intervals.
///
/// `panels` is rounded up to the next even number. Used where the caller
/// controls smoothness and picks the step from an error budget.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_periodic() {
        // \int_0^1 2 cos^2(2 pi t) dt = 1, \int_0^1 2 cos sin = 0
        let v = adaptive_simpson(|t| 2.0 * (2.0 * PI * t).cos().powi(2), 0.0, 1.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
        let w = adaptive_simpson(
            |t| 2.0 * (2.0 * PI * t).cos() * (2.0 * PI * t).sin(),
            0.0,
            1.0,
            1e-12,
        );
        assert!(w.abs() < 1e-10);
    }

    #[test]
    fn gaussian_tail() {
        // \int_0^9 exp(-r^2/2) dr ~ sqrt(pi/2)
        let v = adaptive_simpson(|r| (-0.5 * r * r).exp(), 0.0, 9.0, 1e-12);
        assert!((v - (PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn composite_matches_adaptive() {
        let f = |t: f64| (2.0 * PI * t).cos() * (-0.3 * t).exp();
        let a = composite_simpson(f, 0.0, 5.0, 5000);
        let b = adaptive_simpson(f, 0.0, 5.0, 1e-12);
        assert!((a - b).abs() < 1e-9);
    }
}

//! Gauss-Legendre quadrature helpers.
//!
//! Everything here is real-line plumbing: fixed-order Gauss-Legendre
//! panels, an adaptive bisection driver, and panel layouts for
//! oscillatory Fourier integrals and slowly decaying half-line integrals.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Cached 16-point rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Single 16-point panel on [a, b].
pub fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (x, w) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// Complex-valued single panel on [a, b].
pub fn panel_c<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Complex64 {
    let (x, w) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        acc += f(mid + half * xi) * *wi;
    }
    acc * half
}

/// Adaptive bisection with 16-point panels; accepts a panel when its value
/// agrees with the sum over its two halves.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = panel(f, a, b);
    let mut total: f64 = 0.0;
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut evaluations = 0usize;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(f, lo, mid);
        let right = panel(f, mid, hi);
        evaluations += 32;
        let fine = left + right;
        let err = (fine - coarse).abs();
        let scale = fine.abs().max(total.abs());
        if err <= abs_tol.max(rel_tol * scale) || depth >= 48 {
            if depth >= 48 && err > 1e3 * abs_tol.max(rel_tol * scale) {
                return Err(LabError::QuadratureFailure(format!(
                    "bisection depth exhausted on [{lo}, {hi}] with error {err:e}"
                )));
            }
            total += fine;
        } else {
            if evaluations > 20_000_000 {
                return Err(LabError::QuadratureFailure(format!(
                    "evaluation budget exhausted on [{a}, {b}]"
                )));
            }
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive integration on [a, b] with interior breakpoints.
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive(f, w[0], w[1], rel_tol, abs_tol)?;
    }
    Ok(total)
}

/// Integral over [0, upper] using geometrically growing panels
/// [0, 1], [1, 2], [2, 4], ... scaled by `unit`. Suited to smooth, slowly
/// decaying integrands such as power-law tails.
pub fn geometric_panels<F: FnMut(f64) -> f64>(f: &mut F, unit: f64, upper: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = unit.min(upper);
    while lo < upper {
        // two sub-panels per octave keep the rule accurate on power laws
        let mid = 0.5 * (lo + hi);
        total += panel(f, lo, mid) + panel(f, mid, hi);
        lo = hi;
        hi = (2.0 * hi).min(upper);
    }
    total
}

/// Complex integral over [start, +inf) by geometric panels, stopping once
/// a panel contributes less than `abs_tol`.
pub fn half_line_c<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    unit: f64,
    abs_tol: f64,
    max_octaves: usize,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = 0.0;
    let mut hi = unit;
    let mut quiet = 0;
    for _ in 0..max_octaves {
        let mid = 0.5 * (lo + hi);
        let q1 = 0.5 * (lo + mid);
        let q3 = 0.5 * (mid + hi);
        let contrib =
            panel_c(f, lo, q1) + panel_c(f, q1, mid) + panel_c(f, mid, q3) + panel_c(f, q3, hi);
        total += contrib;
        if contrib.norm() < abs_tol {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(LabError::QuadratureFailure(format!(
        "half-line integral did not settle after {max_octaves} octaves (last total {total})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 30 monomial
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let mut f = |x: f64| 1.0 / (1e-4 + x * x);
        let v = adaptive(&mut f, -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn geometric_panels_power_law() {
        let mut f = |t: f64| (1.0 + t).powi(-3);
        let v = geometric_panels(&mut f, 1.0, 1e8);
        assert!((v - 0.5).abs() < 1e-10);
    }
}

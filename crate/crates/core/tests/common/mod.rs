#![allow(dead_code)]
//! Independent reference implementations used only by tests.

pub mod devices;

use std::f64::consts::PI;

use resloss::Complex64;

/// e⁻ˣ·I₀(x) = (1/π)∫₀^π e^{x(cos θ − 1)} dθ by the periodic trapezoid rule,
/// which converges geometrically for this analytic integrand.
pub fn i0e_integral(x: f64) -> f64 {
    let n = 4000;
    let h = PI / n as f64;
    let mut sum = 0.5 * (1.0 + (-2.0 * x).exp());
    for k in 1..n {
        let theta = k as f64 * h;
        sum += (x * (theta.cos() - 1.0)).exp();
    }
    sum * h / PI
}

/// I₀ by its power series summed to convergence (positive terms, no cancellation).
pub fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 1.0f64);
    while term > 1e-18 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// eˣ·K₀(x) = ∫₀^∞ e^{−x(cosh t − 1)} dt, trapezoid on a truncated range.
pub fn k0e_integral(x: f64) -> f64 {
    // integrand below e^-745 beyond t_max
    let t_max = (1.0 + 745.0 / x).acosh();
    let n = 200_000;
    let h = t_max / n as f64;
    let mut sum = 0.5;
    for k in 1..=n {
        let t = k as f64 * h;
        sum += (-x * (t.cosh() - 1.0)).exp();
    }
    sum * h
}

/// Ψ(z) from the series Ψ(z) = −γ + Σₙ (1/(n+1) − 1/(n+z)) truncated at N
/// with an Euler–Maclaurin tail. Slow but independent of the library path.
pub fn digamma_series(z: Complex64) -> Complex64 {
    let gamma = 0.577_215_664_901_532_9;
    let n = 20_000usize;
    let mut acc = Complex64::new(-gamma, 0.0);
    for k in 0..n {
        let kf = k as f64;
        acc += 1.0 / (kf + 1.0) - 1.0 / (kf + z);
    }
    // tail Σ_{k≥N} [1/(k+1) − 1/(k+z)] via Euler–Maclaurin on f(k) = 1/(k+1) − 1/(k+z)
    let nf = n as f64;
    let a = Complex64::new(nf + 1.0, 0.0);
    let b = nf + z;
    let integral = (b / a).ln();
    let f = a.inv() - b.inv();
    let df = -(a * a).inv() + (b * b).inv();
    let d3f = -6.0 * (a * a * a * a).inv() + 6.0 * (b * b * b * b).inv();
    acc + integral + 0.5 * f - df / 12.0 + d3f / 720.0
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

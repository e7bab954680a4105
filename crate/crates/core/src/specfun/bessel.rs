use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::EULER_GAMMA;

/// Above this argument I₀ switches from the power series to the asymptotic
/// expansion. At x = 20 the smallest asymptotic term is ~e⁻⁴⁰.
const I0_CROSSOVER: f64 = 20.0;

/// Below this argument K₀ uses its logarithmic power series; above it the
/// Steed/Temme continued fraction.
const K0_CROSSOVER: f64 = 2.0;

fn check_arg(func: &'static str, x: f64, allow_zero: bool) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::domain(func, format!("non-finite argument {x}")));
    }
    if x < 0.0 || (!allow_zero && x == 0.0) {
        return Err(Error::domain(func, format!("argument {x} outside domain")));
    }
    Ok(())
}

/// Σ (x²/4)ᵏ/(k!)², summed until terms stop contributing.
fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// √(2πx)·e⁻ˣ·I₀(x) by its large-argument expansion.
fn i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponentially scaled I₀: e⁻ˣ·I₀(x), finite for every x ≥ 0.
pub fn bessel_i0e(x: f64) -> Result<f64> {
    check_arg("bessel_i0e", x, true)?;
    if x <= I0_CROSSOVER {
        Ok(i0_series(x) * (-x).exp())
    } else {
        Ok(i0_asymptotic_scaled(x) / (2.0 * PI * x).sqrt())
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_arg("bessel_i0", x, true)?;
    let v = if x <= I0_CROSSOVER {
        i0_series(x)
    } else {
        // split e^x to postpone overflow to the true limit near x ≈ 713.98
        let half = (0.5 * x).exp();
        i0_asymptotic_scaled(x) / (2.0 * PI * x).sqrt() * half * half
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { func: "bessel_i0", x })
    }
}

/// K₀ for 0 < x ≤ 2: −(ln(x/2) + γ)·I₀(x) + Σ Hₖ (x²/4)ᵏ/(k!)².
fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        harmonic += 1.0 / k;
        let add = term * harmonic;
        tail += add;
        if add < 1e-17 * tail.abs().max(1e-300) {
            break;
        }
        k += 1.0;
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0_series(x) + tail
}

/// eˣ·K₀(x) for x ≥ 2 via Steed's continued fraction (Temme's CF2, ν = 0).
fn k0_cf2_scaled(x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() / s
}

/// Exponentially scaled K₀: eˣ·K₀(x).
pub fn bessel_k0e(x: f64) -> Result<f64> {
    check_arg("bessel_k0e", x, false)?;
    if x <= K0_CROSSOVER {
        Ok(k0_series(x) * x.exp())
    } else {
        Ok(k0_cf2_scaled(x))
    }
}

/// Modified Bessel function of the second kind, order zero. Logarithmically
/// singular at 0, so `x` must be strictly positive.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_arg("bessel_k0", x, false)?;
    if x <= K0_CROSSOVER {
        Ok(k0_series(x))
    } else {
        Ok(k0_cf2_scaled(x) * (-x).exp())
    }
}

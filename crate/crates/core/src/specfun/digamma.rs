use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shift threshold for the recurrence. With |z| ≥ 16 the first omitted term of
/// the asymptotic series (B₁₆/(16 z¹⁶)) is below 4e-20 relative to ln z.
const SHIFT_THRESHOLD: f64 = 16.0;

/// B₂ₖ/(2k) for k = 1..7 (B₂ through B₁₄).
const ASYMPTOTIC: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// Digamma function Ψ(z) for complex `z`.
///
/// The argument is moved to `Re(z) ≥ 16` with Ψ(z) = Ψ(z+1) − 1/z and the
/// Stirling-type series ln z − 1/(2z) − Σ B₂ₖ/(2k z²ᵏ) is summed through B₁₄.
/// Arguments with negative real part go through the reflection formula first.
/// Real inputs give an exactly real result.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain("digamma", format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::domain(
            "digamma",
            format!("pole at non-positive integer z = {}", z.re),
        ));
    }
    if z.re < 0.0 {
        // Ψ(z) = Ψ(1 − z) − π cot(πz)
        let reflected = shifted_asymptotic(Complex64::new(1.0, 0.0) - z);
        return Ok(real_if(z, reflected - PI * cot_pi(z)));
    }
    Ok(real_if(z, shifted_asymptotic(z)))
}

fn real_if(z: Complex64, w: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(w.re, 0.0)
    } else {
        w
    }
}

fn shifted_asymptotic(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < SHIFT_THRESHOLD {
        acc -= z.inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    // Horner over 1/z²
    let mut series = Complex64::new(0.0, 0.0);
    for c in ASYMPTOTIC.iter().rev() {
        series = (series + c) * inv2;
    }
    acc + z.ln() - 0.5 * inv - series
}

/// cot(πz) without overflow for large |Im z|.
fn cot_pi(z: Complex64) -> Complex64 {
    let a = 2.0 * PI * z.re;
    let b = 2.0 * PI * z.im;
    if b.abs() > 40.0 {
        // cot → ∓i as Im z → ±∞
        return Complex64::new(0.0, -b.signum());
    }
    let denom = b.cosh() - a.cos();
    Complex64::new(a.sin() / denom, -b.sinh() / denom)
}

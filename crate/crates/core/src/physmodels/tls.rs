use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physmodels::constants::{H, K_B};
use crate::physmodels::{ensure_finite, TlsLossParams, TwoToneParams};
use crate::specfun::digamma;

/// Internal loss 1/Q_i under single-tone drive with n̄ photons.
///
/// 1/Q_i = (1/Q_TLS)·tanh(h f_r / 2k_B T) / √(1 + (n̄/n_c)^φ) + 1/Q_r
pub fn tls_power_loss(p: &TlsLossParams, n_bar: f64) -> Result<f64> {
    p.validate()?;
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::domain("tls_power_loss", format!("photon number {n_bar}")));
    }
    let thermal = (H * p.f_r / (2.0 * K_B * p.temperature)).tanh();
    let saturation = (1.0 + (n_bar / p.n_c).powf(p.phi)).sqrt();
    Ok(p.inv_q_tls * thermal / saturation + p.inv_q_r)
}

/// Resonance shift (Hz) induced by a strong pump detuned by `delta` Hz from
/// the resonance and populating the resonator with `n_bar` photons.
///
/// With R = Ω₀√n̄ and s = √(1 + R²/2Δ²):
///
/// δf_r = (3√2/8)·f_r·tanh(h f_r/k_B T)/Q_TLS · (Δ/R)·(s − 1)/(s + 1)
///
/// Δ and Ω₀ enter only through their ratio, so the angular factor 2π cancels.
/// The form below uses (s − 1)/(s + 1) = (R²/2Δ²)/(s + 1)², which is exactly
/// odd in Δ and free of cancellation at large detuning. The shift vanishes at
/// Δ = 0 and as |Δ| → ∞, and peaks at Δ = ±R/√6 where s = 2, giving
/// |δf_r| = f_r·tanh(h f_r/k_B T)/(8√3·Q_TLS).
pub fn two_tone_shift(p: &TwoToneParams, delta: f64, n_bar: f64) -> Result<f64> {
    ensure_finite("two_tone_shift", &[("delta", delta), ("n_bar", n_bar)])?;
    p.validate()?;
    if n_bar < 0.0 {
        return Err(Error::domain("two_tone_shift", format!("photon number {n_bar}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let thermal = (H * p.f_r / (K_B * p.temperature)).tanh();
    let prefactor = 3.0 * SQRT_2 / 8.0 * p.f_r * thermal * p.inv_q_tls;
    let rabi = p.omega0_over_2pi * n_bar.sqrt();
    let ratio = rabi / delta;
    let s = (1.0 + 0.5 * ratio * ratio).sqrt();
    Ok(prefactor * rabi / (2.0 * delta * (s + 1.0) * (s + 1.0)))
}

/// Pump detunings (Hz) of the minimum and maximum of [`two_tone_shift`]:
/// ∓Ω₀√n̄/√6.
pub fn two_tone_extrema(p: &TwoToneParams, n_bar: f64) -> Result<(f64, f64)> {
    p.validate()?;
    if !(n_bar.is_finite() && n_bar > 0.0) {
        return Err(Error::domain("two_tone_extrema", format!("photon number {n_bar}")));
    }
    let x = p.omega0_over_2pi * n_bar.sqrt() / 6f64.sqrt();
    Ok((-x, x))
}

/// Thermal TLS shift (Hz) relative to T = 0:
///
/// δf_r(T) = f_r/(π Q_TLS) · Re[Ψ(1/2 − x/j) − ln x],  x = h f_r/(2π k_B T)
pub fn thermal_tls_shift(f_r: f64, inv_q_tls: f64, t: f64) -> Result<f64> {
    ensure_finite("thermal_tls_shift", &[("f_r", f_r), ("inv_q_tls", inv_q_tls), ("t", t)])?;
    if t <= 0.0 {
        return Err(Error::domain("thermal_tls_shift", format!("temperature {t} K")));
    }
    if f_r <= 0.0 {
        return Err(Error::domain("thermal_tls_shift", format!("frequency {f_r} Hz")));
    }
    let x = H * f_r / (2.0 * PI * K_B * t);
    let j = Complex64::new(0.0, 1.0);
    let psi = digamma(Complex64::new(0.5, 0.0) - x / j)?;
    Ok(f_r * inv_q_tls / PI * (psi.re - x.ln()))
}

/// TLS density of a sample relative to a reference, from (1/Q_TLS, Ω₀/2π)
/// pairs: N₀/N₀ʳᵉᶠ = Q_TLSʳᵉᶠ·(Ω₀ʳᵉᶠ)² / (Q_TLS·Ω₀²), using 1/Q_TLS ∝ d²N₀.
pub fn relative_tls_density(reference: (f64, f64), sample: (f64, f64)) -> Result<f64> {
    for (name, v) in [
        ("reference inv_q_tls", reference.0),
        ("reference omega0", reference.1),
        ("sample inv_q_tls", sample.0),
        ("sample omega0", sample.1),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain("relative_tls_density", format!("{name} = {v}")));
        }
    }
    Ok(sample.0 / reference.0 * (reference.1 / sample.1).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss_params() -> TlsLossParams {
        TlsLossParams {
            inv_q_tls: 2e-5,
            n_c: 10.0,
            phi: 1.0,
            inv_q_r: 2e-6,
            f_r: 5e9,
            temperature: 0.01,
        }
    }

    fn tone() -> TwoToneParams {
        TwoToneParams {
            f_r: 4.8e9,
            inv_q_tls: 2e-5,
            omega0_over_2pi: 16.2e3,
            temperature: 0.01,
            heating_eta: 0.0,
        }
    }

    #[test]
    fn power_loss_limits() {
        let p = loss_params();
        let zero = tls_power_loss(&p, 0.0).unwrap();
        let expect = p.inv_q_tls + p.inv_q_r;
        assert!((zero - expect).abs() / expect < 1e-9);

        let sat = tls_power_loss(&p, 1e12 * p.n_c).unwrap();
        assert!((sat - p.inv_q_r).abs() / p.inv_q_r < 1e-5);

        let cold = TlsLossParams { temperature: 1e-4, ..p };
        let at_nc = tls_power_loss(&cold, cold.n_c).unwrap();
        let expect = cold.inv_q_tls / 2f64.sqrt() + cold.inv_q_r;
        assert!((at_nc - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn power_loss_rejects_bad_input() {
        let p = loss_params();
        assert!(tls_power_loss(&p, -1.0).is_err());
        assert!(tls_power_loss(&p, f64::NAN).is_err());
        assert!(tls_power_loss(&TlsLossParams { temperature: 0.0, ..p }, 1.0).is_err());
    }

    #[test]
    fn two_tone_is_odd_and_vanishes_at_limits() {
        let p = tone();
        for delta in [1.0, 3e3, 1e5, 2.5e6] {
            let a = two_tone_shift(&p, delta, 1e4).unwrap();
            let b = two_tone_shift(&p, -delta, 1e4).unwrap();
            assert_eq!(a, -b);
        }
        assert_eq!(two_tone_shift(&p, 0.0, 1e4).unwrap(), 0.0);
        let peak = two_tone_shift(&p, 16.2e3 * 100.0 / 6f64.sqrt(), 1e4).unwrap();
        assert!(two_tone_shift(&p, 1e-3, 1e4).unwrap().abs() < 1e-6 * peak);
        assert!(two_tone_shift(&p, 1e13, 1e4).unwrap().abs() < 1e-6 * peak);
        assert_eq!(two_tone_shift(&p, 1e3, 0.0).unwrap(), 0.0);
        assert!(two_tone_shift(&p, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn two_tone_peak_value() {
        let p = tone();
        let n_bar = 2.3e5;
        let (lo, hi) = two_tone_extrema(&p, n_bar).unwrap();
        let thermal = (H * p.f_r / (K_B * p.temperature)).tanh();
        let expect = p.f_r * thermal * p.inv_q_tls / (8.0 * 3f64.sqrt());
        let at = two_tone_shift(&p, hi, n_bar).unwrap();
        assert!((at - expect).abs() / expect < 1e-12);
        assert!(two_tone_shift(&p, lo, n_bar).unwrap() < 0.0);
    }

    #[test]
    fn extrema_cancel_sqrt6_and_scale() {
        let p = tone();
        let (lo, hi) = two_tone_extrema(&p, 6.0).unwrap();
        assert!((hi - 16.2e3).abs() < 1e-9 && (lo + 16.2e3).abs() < 1e-9);
        let (_, hi4) = two_tone_extrema(&p, 24.0).unwrap();
        assert!((hi4 - 2.0 * hi).abs() < 1e-9);
        assert!(two_tone_extrema(&p, 0.0).is_err());
    }

    #[test]
    fn thermal_shift_limits() {
        let f = 5e9;
        let q = 2e-5;
        let scale = f * q / PI;
        assert!(thermal_tls_shift(f, q, 1e-6).unwrap().abs() < 1e-6 * scale);
        // high temperature: positive and increasing
        let t1 = thermal_tls_shift(f, q, 2.0).unwrap();
        let t2 = thermal_tls_shift(f, q, 3.0).unwrap();
        assert!(t1 > 0.0 && t2 > t1);
        assert!(thermal_tls_shift(f, q, 0.0).is_err());
        assert!(thermal_tls_shift(f, q, -1.0).is_err());
    }

    #[test]
    fn thermal_shift_mid_range_matches_oracle() {
        // x = 1: Re Ψ(1/2 + i) from a 40-digit reference.
        let f = 5e9;
        let t = H * f / (2.0 * PI * K_B);
        let got = thermal_tls_shift(f, 1.0, t).unwrap() * PI / f;
        let expect = -0.051_761_650_994_412_543;
        assert!((got - expect).abs() < 1e-12, "{got}");
    }

    #[test]
    fn density_ratio() {
        assert_eq!(relative_tls_density((2e-5, 16e3), (2e-5, 16e3)).unwrap(), 1.0);
        let quarter = relative_tls_density((2e-5, 16e3), (2e-5, 32e3)).unwrap();
        assert!((quarter - 0.25).abs() < 1e-15);
        assert!(relative_tls_density((0.0, 16e3), (2e-5, 16e3)).is_err());
        assert!(relative_tls_density((2e-5, 16e3), (2e-5, -1.0)).is_err());
    }
}

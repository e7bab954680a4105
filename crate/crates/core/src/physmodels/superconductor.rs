use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physmodels::constants::{HBAR, K_B, MU_0};
use crate::physmodels::{thermal_tls_shift, SuperconductorParams};
use crate::specfun::{bessel_i0e, bessel_k0e};

/// Temperature standing in for T = 0 in the kinetic-inductance term (K).
/// All measurements share this base temperature.
pub const REFERENCE_TEMPERATURE: f64 = 0.010;

/// The large-gap forms need Δ₀ ≫ ħω and Δ₀ ≫ k_B T; "≫" means this factor.
const REGIME_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimeWarning {
    /// Δ₀ ≤ 5·max(ħω, k_B T): the analytic Mattis-Bardeen forms are unreliable.
    GapNotLarge { delta0_over_max: f64 },
}

/// A value computed outside or inside the validity regime of its model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded<T> {
    pub value: T,
    pub warning: Option<RegimeWarning>,
}

impl<T> Guarded<T> {
    fn map<U>(self, f: impl FnOnce(T) -> U) -> Guarded<U> {
        Guarded { value: f(self.value), warning: self.warning }
    }
}

fn check(sc: &SuperconductorParams, omega: f64, t: f64) -> Result<Option<RegimeWarning>> {
    sc.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain("mattis_bardeen", format!("temperature {t} K")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::domain("mattis_bardeen", format!("angular frequency {omega}")));
    }
    let scale = (HBAR * omega).max(K_B * t);
    let ratio = sc.delta0 / scale;
    if ratio > REGIME_FACTOR {
        Ok(None)
    } else {
        log::warn!("large-gap regime violated: delta0 / max(hbar w, kT) = {ratio:.3}");
        Ok(Some(RegimeWarning::GapNotLarge { delta0_over_max: ratio }))
    }
}

/// σ₁/σ_n = (4Δ₀/ħω)·e^{−Δ₀/k_BT}·sinh(ξ)·K₀(ξ), ξ = ħω/2k_BT.
///
/// Evaluated as (2Δ₀/ħω)·e^{−Δ₀/k_BT}·(1 − e^{−2ξ})·eᶓK₀(ξ) so that neither
/// sinh nor the Boltzmann factor over/underflows at low temperature.
pub fn mb_sigma1(sc: &SuperconductorParams, omega: f64, t: f64) -> Result<Guarded<f64>> {
    let warning = check(sc, omega, t)?;
    let hw = HBAR * omega;
    let xi = hw / (2.0 * K_B * t);
    let boltzmann = (-sc.delta0 / (K_B * t)).exp();
    let value = if boltzmann == 0.0 {
        0.0
    } else {
        2.0 * sc.delta0 / hw * boltzmann * (-(-2.0 * xi).exp_m1()) * bessel_k0e(xi)?
    };
    Ok(Guarded { value, warning })
}

/// σ₂/σ_n = (πΔ₀/ħω)·(1 − √(2πk_BT/Δ₀)·e^{−Δ₀/k_BT} − 2e^{−Δ₀/k_BT}·e^{−ξ}I₀(ξ)).
pub fn mb_sigma2(sc: &SuperconductorParams, omega: f64, t: f64) -> Result<Guarded<f64>> {
    let warning = check(sc, omega, t)?;
    let hw = HBAR * omega;
    let xi = hw / (2.0 * K_B * t);
    let boltzmann = (-sc.delta0 / (K_B * t)).exp();
    let correction = if boltzmann == 0.0 {
        0.0
    } else {
        (2.0 * PI * K_B * t / sc.delta0).sqrt() * boltzmann + 2.0 * boltzmann * bessel_i0e(xi)?
    };
    Ok(Guarded { value: PI * sc.delta0 / hw * (1.0 - correction), warning })
}

/// Dirty-limit surface impedance Z_S = R_S + jX_S (Ω):
///
/// Z_S = jμ₀ω / √((ω l_el/(σ_n v_F λ₀²))·σ_n·(σ₂/σ_n + jσ₁/σ_n))
///
/// The principal square root keeps R_S ≥ 0 for σ₁, σ₂ ≥ 0.
pub fn surface_impedance(
    sc: &SuperconductorParams,
    omega: f64,
    t: f64,
) -> Result<Guarded<Complex64>> {
    let s1 = mb_sigma1(sc, omega, t)?;
    let s2 = mb_sigma2(sc, omega, t)?;
    let k = omega * sc.l_el / (sc.sigma_n * sc.v_f * sc.lambda0 * sc.lambda0);
    let conductivity = Complex64::new(s2.value, s1.value) * (k * sc.sigma_n);
    let z = Complex64::new(0.0, MU_0 * omega) / conductivity.sqrt();
    if !(z.re.is_finite() && z.im.is_finite()) || z.re < 0.0 {
        return Err(Error::domain(
            "surface_impedance",
            format!("unphysical branch Z_S = {z} (sigma1 = {}, sigma2 = {})", s1.value, s2.value),
        ));
    }
    Ok(Guarded { value: z, warning: s1.warning.or(s2.warning) })
}

/// Resonance shift (Hz) from TLS plus quasiparticles:
///
/// δf_r(T) = thermal_tls_shift(T) − (α f_r/2)·(X_S(T) − X_S(T₀))/X_S(T₀)
///
/// with T₀ = [`REFERENCE_TEMPERATURE`] standing in for zero temperature.
pub fn total_thermal_shift(
    f_r: f64,
    inv_q_tls: f64,
    sc: &SuperconductorParams,
    t: f64,
) -> Result<Guarded<f64>> {
    let tls = thermal_tls_shift(f_r, inv_q_tls, t)?;
    let omega = 2.0 * PI * f_r;
    let x_t = surface_impedance(sc, omega, t)?;
    if sc.alpha == 0.0 {
        return Ok(x_t.map(|_| tls));
    }
    let x_0 = surface_impedance(sc, omega, REFERENCE_TEMPERATURE)?;
    let kinetic = 0.5 * sc.alpha * f_r * (x_t.value.im - x_0.value.im) / x_0.value.im;
    Ok(x_t.map(|_| tls - kinetic))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb() -> SuperconductorParams {
        SuperconductorParams::niobium_reference(0.05)
    }

    const OMEGA: f64 = 2.0 * PI * 5e9;

    #[test]
    fn sigma1_vanishes_when_cold_and_is_non_negative() {
        let sc = nb();
        assert_eq!(mb_sigma1(&sc, OMEGA, 1e-3).unwrap().value, 0.0);
        for t in [0.05, 0.3, 1.0, 1.5, 2.5] {
            assert!(mb_sigma1(&sc, OMEGA, t).unwrap().value >= 0.0);
        }
    }

    #[test]
    fn sigma_values_at_nb_point() {
        // mpmath composition of the analytic forms at T_c = 9.04 K, 5 GHz, 1.5 K
        let sc = nb();
        let s1 = mb_sigma1(&sc, OMEGA, 1.5).unwrap();
        assert!(s1.warning.is_none());
        assert!((s1.value - 1.361_214_578_165_632_5e-3).abs() / 1.3612e-3 < 1e-9);
        let s2 = mb_sigma2(&sc, OMEGA, 1.5).unwrap();
        assert!((s2.value - 208.759_702_298_308_94).abs() / 208.76 < 1e-12);
    }

    #[test]
    fn sigma2_cold_limit_is_exact() {
        let sc = nb();
        let s2 = mb_sigma2(&sc, OMEGA, 1e-3).unwrap().value;
        assert_eq!(s2, PI * sc.delta0 / (HBAR * OMEGA));
    }

    #[test]
    fn sigma2_decreases_with_temperature() {
        let sc = nb();
        let mut prev = f64::INFINITY;
        for i in 0..=80 {
            let t = sc.t_c * (0.1 + 0.4 * i as f64 / 80.0);
            let v = mb_sigma2(&sc, OMEGA, t).unwrap().value;
            assert!(v < prev, "not decreasing at T = {t}");
            prev = v;
        }
        for t in [0.1, 1.0, 2.0, 0.3 * sc.t_c] {
            let s1 = mb_sigma1(&sc, OMEGA, t).unwrap().value;
            let s2 = mb_sigma2(&sc, OMEGA, t).unwrap().value;
            assert!(s2 > s1);
        }
    }

    #[test]
    fn regime_guard_warns() {
        let sc = nb();
        let hot = mb_sigma1(&sc, OMEGA, 0.5 * sc.t_c).unwrap();
        assert!(matches!(hot.warning, Some(RegimeWarning::GapNotLarge { .. })));
        assert!(mb_sigma1(&sc, OMEGA, 0.0).is_err());
        assert!(mb_sigma2(&sc, OMEGA, -1.0).is_err());
    }

    #[test]
    fn impedance_branch_and_lossless_limit() {
        let sc = nb();
        let cold = surface_impedance(&sc, OMEGA, 0.01).unwrap().value;
        assert!(cold.im > 0.0);
        assert!(cold.re / cold.im < 1e-12);
        for t in [0.01, 0.5, 1.0, 2.0, 3.0] {
            let z = surface_impedance(&sc, OMEGA, t).unwrap().value;
            assert!(z.re >= 0.0 && z.im > 0.0);
        }
    }

    #[test]
    fn fractional_reactance_change_is_prefactor_free() {
        let sc = nb();
        let scaled = SuperconductorParams { sigma_n: sc.sigma_n * 10.0, l_el: sc.l_el * 3.0, ..sc };
        let ratio = |p: &SuperconductorParams| {
            let x0 = surface_impedance(p, OMEGA, REFERENCE_TEMPERATURE).unwrap().value.im;
            let xt = surface_impedance(p, OMEGA, 2.0).unwrap().value.im;
            (xt - x0) / x0
        };
        let a = ratio(&sc);
        let b = ratio(&scaled);
        assert!(a != 0.0);
        assert!((a - b).abs() / a.abs() < 1e-12);
    }

    #[test]
    fn total_shift_reduces_to_tls_term() {
        let f = 4.8e9;
        let q = 2e-5;
        let no_kinetic = nb_alpha(0.0);
        for t in [0.05, 0.5, 2.0] {
            let a = total_thermal_shift(f, q, &no_kinetic, t).unwrap().value;
            assert_eq!(a, thermal_tls_shift(f, q, t).unwrap());
        }
        let at_ref = total_thermal_shift(f, q, &nb(), REFERENCE_TEMPERATURE).unwrap().value;
        assert_eq!(at_ref, thermal_tls_shift(f, q, REFERENCE_TEMPERATURE).unwrap());
    }

    #[test]
    fn total_shift_turns_over() {
        // TLS rise at low T, quasiparticle red shift at high T.
        let f = 4.8e9;
        let sc = nb_alpha(0.05);
        let ts: Vec<f64> = (1..=60).map(|i| 0.05 * i as f64).collect();
        let shift: Vec<f64> =
            ts.iter().map(|&t| total_thermal_shift(f, 2e-5, &sc, t).unwrap().value).collect();
        let (imax, _) = shift
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!(imax > 0 && imax < shift.len() - 1, "no interior maximum");
        assert!(shift[shift.len() - 1] < shift[imax]);
        assert!(shift[imax] > thermal_tls_shift(f, 2e-5, 0.3).unwrap());
    }

    fn nb_alpha(alpha: f64) -> SuperconductorParams {
        SuperconductorParams { alpha, ..nb() }
    }
}

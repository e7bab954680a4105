use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physmodels::constants::K_B;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

/// State of the single-tone power-saturation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsLossParams {
    /// 1/Q_TLS
    pub inv_q_tls: f64,
    /// Critical photon number.
    pub n_c: f64,
    /// Saturation exponent φ; 1 for non-interacting TLS in a uniform field.
    pub phi: f64,
    /// Power-independent residual loss 1/Q_r.
    pub inv_q_r: f64,
    /// Resonance frequency (Hz).
    pub f_r: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl TlsLossParams {
    pub fn validate(&self) -> Result<()> {
        non_negative("inv_q_tls", self.inv_q_tls)?;
        non_negative("inv_q_r", self.inv_q_r)?;
        positive("n_c", self.n_c)?;
        positive("phi", self.phi)?;
        if self.phi > 2.0 {
            return Err(Error::invalid(format!("phi must be <= 2, got {}", self.phi)));
        }
        positive("f_r", self.f_r)?;
        positive("temperature", self.temperature)
    }
}

/// State of the two-tone (pump-detuned) shift model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoToneParams {
    pub f_r: f64,
    pub inv_q_tls: f64,
    /// Average single-photon Rabi frequency Ω₀/2π (Hz).
    pub omega0_over_2pi: f64,
    pub temperature: f64,
    /// Effective heating (K per photon); the local temperature is T + η·n̄.
    pub heating_eta: f64,
}

impl TwoToneParams {
    pub fn validate(&self) -> Result<()> {
        positive("f_r", self.f_r)?;
        non_negative("inv_q_tls", self.inv_q_tls)?;
        positive("omega0_over_2pi", self.omega0_over_2pi)?;
        positive("temperature", self.temperature)?;
        non_negative("heating_eta", self.heating_eta)
    }
}

/// Cavity-mediated coupling of a planar resonator to two symmetric ports.
/// All rates are cyclic (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySystemParams {
    /// Cavity TE101 frequency.
    pub f_c: f64,
    /// Bare resonator frequency.
    pub f_r: f64,
    /// Cavity–resonator coupling g/2π.
    pub g_over_2pi: f64,
    /// Port coupling κ_A = κ_B = κ.
    pub kappa_over_2pi: f64,
    /// Resonator internal loss rate γ_r/2π.
    pub gamma_r_over_2pi: f64,
    /// Cavity internal loss rate γ_c/2π. Treated as negligible in S21.
    #[serde(default)]
    pub gamma_c_over_2pi: f64,
}

impl CavitySystemParams {
    pub fn validate(&self) -> Result<()> {
        positive("f_c", self.f_c)?;
        positive("f_r", self.f_r)?;
        non_negative("g_over_2pi", self.g_over_2pi)?;
        non_negative("kappa_over_2pi", self.kappa_over_2pi)?;
        non_negative("gamma_r_over_2pi", self.gamma_r_over_2pi)?;
        non_negative("gamma_c_over_2pi", self.gamma_c_over_2pi)?;
        if self.f_c == self.f_r {
            return Err(Error::invalid("cavity and resonator frequencies coincide"));
        }
        Ok(())
    }

    /// Validation plus |f_r − f_c| ≥ 10·g, required by the dispersive approximation.
    pub fn validate_dispersive(&self) -> Result<()> {
        self.validate()?;
        let detuning = (self.f_r - self.f_c).abs();
        if detuning < 10.0 * self.g_over_2pi {
            return Err(Error::invalid(format!(
                "not dispersive: |f_r - f_c| = {detuning} Hz < 10 g = {} Hz",
                10.0 * self.g_over_2pi
            )));
        }
        Ok(())
    }
}

/// Input-line attenuation and single-photon field strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// G_in in dB (≤ 0).
    pub gain_in_db: f64,
    /// Electric field at n̄ = 1 (V/m).
    pub field_at_one_photon: f64,
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_in_db.is_finite() && self.gain_in_db <= 0.0) {
            return Err(Error::invalid(format!(
                "gain_in_db must be <= 0, got {}",
                self.gain_in_db
            )));
        }
        positive("field_at_one_photon", self.field_at_one_photon)
    }
}

/// Film parameters for the large-gap Mattis-Bardeen forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperconductorParams {
    /// Critical temperature (K).
    pub t_c: f64,
    /// Zero-temperature gap Δ₀ (J).
    pub delta0: f64,
    /// Kinetic inductance fraction.
    pub alpha: f64,
    /// Electron mean free path (m).
    pub l_el: f64,
    /// Fermi velocity (m/s).
    pub v_f: f64,
    /// London penetration depth (m).
    pub lambda0: f64,
    /// Normal-state conductivity (S/m).
    pub sigma_n: f64,
    #[serde(default)]
    pub xi_gl: Option<f64>,
    #[serde(default)]
    pub xi_bcs: Option<f64>,
}

/// Weak-coupling BCS ratio Δ₀/(k_B T_c).
pub const BCS_GAP_RATIO: f64 = 1.764;

impl SuperconductorParams {
    /// Film with Δ₀ = 1.764·k_B·T_c and the given transport constants.
    pub fn with_bcs_gap(
        t_c: f64,
        alpha: f64,
        l_el: f64,
        v_f: f64,
        lambda0: f64,
        sigma_n: f64,
    ) -> Self {
        Self {
            t_c,
            delta0: BCS_GAP_RATIO * K_B * t_c,
            alpha,
            l_el,
            v_f,
            lambda0,
            sigma_n,
            xi_gl: None,
            xi_bcs: None,
        }
    }

    /// Niobium reference film: T_c = 9.04 K, l_el = 4.84 nm, ξ(0) = 11.6 nm,
    /// ξ₀ = 38 nm. Fermi velocity, penetration depth and normal conductivity
    /// are typical literature values for sputtered Nb.
    pub fn niobium_reference(alpha: f64) -> Self {
        Self {
            xi_gl: Some(11.6e-9),
            xi_bcs: Some(38e-9),
            ..Self::with_bcs_gap(9.04, alpha, 4.84e-9, 1.37e6, 39e-9, 6.7e6)
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("t_c", self.t_c)?;
        positive("delta0", self.delta0)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        positive("l_el", self.l_el)?;
        positive("v_f", self.v_f)?;
        positive("lambda0", self.lambda0)?;
        positive("sigma_n", self.sigma_n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_are_enforced() {
        let good = TlsLossParams {
            inv_q_tls: 2e-5,
            n_c: 10.0,
            phi: 0.44,
            inv_q_r: 2e-6,
            f_r: 5e9,
            temperature: 0.01,
        };
        assert!(good.validate().is_ok());
        assert!(TlsLossParams { phi: 2.5, ..good }.validate().is_err());
        assert!(TlsLossParams { n_c: 0.0, ..good }.validate().is_err());
        assert!(TlsLossParams { inv_q_r: -1.0, ..good }.validate().is_err());

        let cav = CavitySystemParams {
            f_c: 8e9,
            f_r: 5e9,
            g_over_2pi: 30e6,
            kappa_over_2pi: 1e6,
            gamma_r_over_2pi: 1e4,
            gamma_c_over_2pi: 0.0,
        };
        assert!(cav.validate_dispersive().is_ok());
        let close = CavitySystemParams { f_r: 7.9e9, ..cav };
        assert!(close.validate().is_ok());
        assert!(close.validate_dispersive().is_err());
        assert!(CavitySystemParams { f_r: 8e9, ..cav }.validate().is_err());

        let cal = CalibrationParams { gain_in_db: 3.0, field_at_one_photon: 0.1 };
        assert!(cal.validate().is_err());
    }

    #[test]
    fn bcs_gap_default() {
        let sc = SuperconductorParams::niobium_reference(0.05);
        assert!((sc.delta0 / (K_B * 9.04) - 1.764).abs() < 1e-12);
        assert!(sc.validate().is_ok());
        assert!(SuperconductorParams { alpha: 1.5, ..sc }.validate().is_err());
    }
}

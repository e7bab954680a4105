use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physmodels::constants::{E_CHARGE, HBAR};
use crate::physmodels::{ensure_finite, CalibrationParams, CavitySystemParams};

/// Input attenuation of the VNA probe line (dB).
pub const VNA_LINE_GAIN_DB: f64 = -94.0;
/// Input attenuation of the pump line (dB).
pub const PUMP_LINE_GAIN_DB: f64 = -44.0;

/// Measured cavity couplings g/2π (Hz) of the six resonator designs.
const TABLE2_COUPLINGS: [(&str, f64); 6] = [
    ("Res 1", 55e6),
    ("Res 2", 30e6),
    ("Res 3", 25e6),
    ("Res 4", 45e6),
    ("Res 5", 35e6),
    ("Res 6", 40e6),
];

/// g/2π (Hz) for a resonator design name such as `"Res 2"` (also accepts `"res2"`).
pub fn table2_coupling_hz(name: &str) -> Option<f64> {
    let key: String = name.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    TABLE2_COUPLINGS
        .iter()
        .find(|(n, _)| n.replace(' ', "").to_lowercase() == key)
        .map(|&(_, g)| g)
}

struct Angular {
    omega_c: f64,
    omega_r: f64,
    g: f64,
    kappa: f64,
    gamma_r: f64,
}

impl From<&CavitySystemParams> for Angular {
    fn from(c: &CavitySystemParams) -> Self {
        Angular {
            omega_c: 2.0 * PI * c.f_c,
            omega_r: 2.0 * PI * c.f_r,
            g: 2.0 * PI * c.g_over_2pi,
            kappa: 2.0 * PI * c.kappa_over_2pi,
            gamma_r: 2.0 * PI * c.gamma_r_over_2pi,
        }
    }
}

/// Transmission through the cavity-coupled resonator at angular frequency
/// `omega`, with symmetric port coupling κ and negligible cavity wall loss:
///
/// S21 = κ/(κ − iΔ_c) · (1 + g²/((κ − iΔ_c)(γ_r/2 − iΔ_r) + g²))
pub fn s21_full(cav: &CavitySystemParams, omega: f64) -> Result<Complex64> {
    cav.validate()?;
    ensure_finite("s21_full", &[("omega", omega)])?;
    if cav.kappa_over_2pi <= 0.0 {
        return Err(Error::invalid("kappa_over_2pi must be > 0"));
    }
    let a = Angular::from(cav);
    let i = Complex64::i();
    let cavity = a.kappa - i * (omega - a.omega_c);
    let resonator = 0.5 * a.gamma_r - i * (omega - a.omega_r);
    let g2 = a.g * a.g;
    Ok(a.kappa / cavity * (1.0 + g2 / (cavity * resonator + g2)))
}

/// Effective port coupling seen by the resonator, κ_eff = g²κ/(ω_r − ω_c)² (rad/s).
pub fn kappa_eff(cav: &CavitySystemParams) -> Result<f64> {
    cav.validate_dispersive()?;
    let a = Angular::from(cav);
    let d = a.omega_r - a.omega_c;
    Ok(a.g * a.g * a.kappa / (d * d))
}

/// Dispersive pull of the resonator, f̃_r − f_r = (g/2π)²/(f_r − f_c) (Hz).
pub fn dispersive_shift_hz(cav: &CavitySystemParams) -> Result<f64> {
    cav.validate_dispersive()?;
    Ok(cav.g_over_2pi * cav.g_over_2pi / (cav.f_r - cav.f_c))
}

/// Dispersive approximation of [`s21_full`]: a cavity background plus a
/// Lorentzian resonator term centred on the dressed frequency
/// ω̃_r = ω_r + g²/(ω_r − ω_c) with full width 2κ_eff + γ_r,
///
/// S21 ≈ iκ/Δ_c − iκ_eff/(ω − ω̃_r + i(2κ_eff + γ_r)/2).
///
/// The overall sign follows the exact expression so the two can be compared
/// as complex numbers; the literature form with the opposite sign differs by
/// a constant phase of π only.
pub fn s21_approx(cav: &CavitySystemParams, omega: f64) -> Result<Complex64> {
    ensure_finite("s21_approx", &[("omega", omega)])?;
    let k_eff = kappa_eff(cav)?;
    let a = Angular::from(cav);
    let dressed = a.omega_r + a.g * a.g / (a.omega_r - a.omega_c);
    let i = Complex64::i();
    let background = i * a.kappa / (omega - a.omega_c);
    let lorentz = -i * k_eff / (omega - dressed + 0.5 * i * (2.0 * k_eff + a.gamma_r));
    Ok(background + lorentz)
}

/// Mean resonator photon number for a source power `p_source_dbm` at angular
/// drive frequency `omega`:
///
/// n̄ = P_in/(ħω_r) · 4κ_eff/((2κ_eff + γ_r)² + 4(ω − ω_r)²),
/// P_in = 10^{(P_dBm + G_in − 30)/10} W.
///
/// Absolute values inherit the uncertainty of the line attenuation and of
/// κ_eff; ratios between points of one sweep are unaffected.
pub fn photon_number(
    cav: &CavitySystemParams,
    cal: &CalibrationParams,
    p_source_dbm: f64,
    omega: f64,
) -> Result<f64> {
    cal.validate()?;
    ensure_finite("photon_number", &[("p_source_dbm", p_source_dbm), ("omega", omega)])?;
    let k_eff = kappa_eff(cav)?;
    let a = Angular::from(cav);
    let p_in = 10f64.powf((p_source_dbm + cal.gain_in_db - 30.0) / 10.0);
    let width = 2.0 * k_eff + a.gamma_r;
    let detuning = omega - a.omega_r;
    Ok(p_in / (HBAR * a.omega_r) * 4.0 * k_eff / (width * width + 4.0 * detuning * detuning))
}

/// Average TLS dipole moment over the elementary charge, d/e = ħΩ₀/(E·e),
/// in metres. `omega0_over_2pi` is the single-photon Rabi frequency in Hz and
/// `field` the single-photon field strength in V/m.
pub fn dipole_moment(omega0_over_2pi: f64, field: f64) -> Result<f64> {
    ensure_finite("dipole_moment", &[("omega0_over_2pi", omega0_over_2pi), ("field", field)])?;
    if field <= 0.0 {
        return Err(Error::domain("dipole_moment", format!("field {field} V/m must be > 0")));
    }
    if omega0_over_2pi < 0.0 {
        return Err(Error::domain("dipole_moment", "negative Rabi frequency"));
    }
    Ok(HBAR * 2.0 * PI * omega0_over_2pi / (field * E_CHARGE))
}

//! Closed-form forward models for TLS-limited resonators.
//!
//! Public parameters carry cyclic frequencies in Hz. Wherever a rate enters a
//! formula in angular units the conversion happens inside the function.

mod cavity;
pub mod constants;
mod params;
mod superconductor;
mod tls;

pub use cavity::{
    dipole_moment, dispersive_shift_hz, kappa_eff, photon_number, s21_approx, s21_full,
    table2_coupling_hz, PUMP_LINE_GAIN_DB, VNA_LINE_GAIN_DB,
};
pub use params::{
    CalibrationParams, CavitySystemParams, SuperconductorParams, TlsLossParams, TwoToneParams,
};
pub use superconductor::{
    mb_sigma1, mb_sigma2, surface_impedance, total_thermal_shift, Guarded, RegimeWarning,
    REFERENCE_TEMPERATURE,
};
pub use tls::{
    relative_tls_density, thermal_tls_shift, tls_power_loss, two_tone_extrema, two_tone_shift,
};

pub(crate) fn ensure_finite(func: &'static str, values: &[(&str, f64)]) -> crate::Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(crate::Error::domain(func, format!("{name} is not finite ({v})")));
        }
    }
    Ok(())
}

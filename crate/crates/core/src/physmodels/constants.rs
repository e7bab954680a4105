//! CODATA 2018 values (SI).

use std::f64::consts::PI;

/// Planck constant (J·s), exact.
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = H / (2.0 * PI);
/// Boltzmann constant (J/K), exact.
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permeability (H/m).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Elementary charge (C), exact.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

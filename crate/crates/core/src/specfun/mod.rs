//! Special-function kernels: complex digamma and the zeroth-order modified
//! Bessel functions of real positive argument.

mod bessel;
mod digamma;

pub use bessel::{bessel_i0, bessel_i0e, bessel_k0, bessel_k0e};
pub use digamma::digamma;

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

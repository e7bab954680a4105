//! Loss analysis for superconducting microwave resonators limited by
//! two-level-system (TLS) defects.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: complex digamma and the modified Bessel functions I₀, K₀.
//! * [`physmodels`]: closed-form forward models (power saturation, two-tone
//!   hole burning, thermal shifts, Mattis-Bardeen surface impedance,
//!   cavity-coupled transmission, photon-number and dipole calibration).
//! * [`tlsbath`]: a microscopic TLS-ensemble simulator used as an oracle for
//!   the closed forms.
//! * [`fitcore`]: bounded Levenberg-Marquardt least squares.
//! * [`pipelines`]: trace, power, pump and temperature fit drivers together
//!   with matching synthetic-data generators.
//! * [`dataio`]: trace CSV, sweep manifests and JSON fit reports.

pub mod dataio;
pub mod error;
pub mod fitcore;
pub mod physmodels;
pub mod pipelines;
pub mod specfun;
pub mod tlsbath;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version embedded in fit reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

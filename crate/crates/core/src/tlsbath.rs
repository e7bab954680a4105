//! Microscopic TLS-ensemble oracle.
//!
//! Each defect contributes (Ω₀ⱼ²/4)·⟨σ_z⟩ⱼ/(fⱼ − f_r + iΓ₂ⱼ) to the complex
//! resonance shift. Summing over a sampled ensemble under a pump drive gives
//! an independent route to the power-saturation and two-tone closed forms.
//!
//! Units: every rate (Γ₁, Γ₂, Ω₀ⱼ/2π, detunings) is a cyclic frequency in Hz.
//! The shift sum and the Bloch steady state are homogeneous in the rates, so
//! evaluating them with cyclic values gives the same result as converting
//! everything to rad/s and back; the shift comes out in Hz.
//!
//! Loss convention: the imaginary part of the shift is a half-width, so the
//! added inverse quality factor is 2·Im(δf)/f_r, positive for thermal or
//! partially saturated populations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physmodels::constants::{H, K_B};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsDefect {
    /// Transition frequency (Hz).
    pub f_j: f64,
    /// Energy relaxation rate Γ₁ (Hz).
    pub gamma1: f64,
    /// Decoherence rate Γ₂ (Hz).
    pub gamma2: f64,
    /// Coupling to the resonator Ω₀ⱼ/2π (Hz).
    pub omega0j_over_2pi: f64,
}

impl TlsDefect {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_j.is_finite() && self.f_j > 0.0) {
            return Err(Error::invalid(format!("TLS frequency {} must be > 0", self.f_j)));
        }
        if !(self.gamma1 > 0.0 && self.gamma2.is_finite() && self.gamma2 >= 0.5 * self.gamma1) {
            return Err(Error::invalid(format!(
                "Bloch constraint violated: gamma2 = {}, gamma1 = {}",
                self.gamma2, self.gamma1
            )));
        }
        if !(self.omega0j_over_2pi.is_finite() && self.omega0j_over_2pi >= 0.0) {
            return Err(Error::invalid("coupling must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Log-uniform distribution on [lo, hi]; lo == hi gives a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogUniform {
    pub lo: f64,
    pub hi: f64,
}

impl LogUniform {
    pub fn fixed(v: f64) -> Self {
        LogUniform { lo: v, hi: v }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.hi >= self.lo) {
            return Err(Error::invalid(format!(
                "{name}: log-uniform range [{}, {}] must be positive and ordered",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        if self.lo == self.hi {
            return self.lo;
        }
        (self.lo.ln() + u * (self.hi / self.lo).ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingDist {
    Fixed { value: f64 },
    LogUniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gamma1Rule {
    /// Γ₁ = 2Γ₂·u with u uniform in (0, 1].
    UniformFraction,
    /// Γ₁ = 2Γ₂·fraction.
    Fraction { fraction: f64 },
    /// Γ₁ log-uniform, capped at 2Γ₂.
    LogUniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_defects: usize,
    pub band_center: f64,
    pub band_halfwidth: f64,
    pub omega0_dist: CouplingDist,
    pub gamma2_dist: LogUniform,
    pub gamma1_rule: Gamma1Rule,
    pub seed: u64,
    pub temperature: f64,
}

impl EnsembleConfig {
    /// Uniform band around `band_center` with fixed coupling, Γ₂ log-uniform
    /// over four decades from 1 kHz and Γ₁ = 2Γ₂·u.
    pub fn standard(n_defects: usize, band_center: f64, band_halfwidth: f64, seed: u64) -> Self {
        EnsembleConfig {
            n_defects,
            band_center,
            band_halfwidth,
            omega0_dist: CouplingDist::Fixed { value: 20e3 },
            gamma2_dist: LogUniform { lo: 1e3, hi: 1e7 },
            gamma1_rule: Gamma1Rule::UniformFraction,
            seed,
            temperature: 0.010,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.band_halfwidth.is_finite() && self.band_halfwidth > 0.0) {
            return Err(Error::invalid("band_halfwidth must be > 0"));
        }
        if !(self.band_center.is_finite() && self.band_center - self.band_halfwidth > 0.0) {
            return Err(Error::invalid("band must lie at positive frequencies"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be > 0"));
        }
        self.gamma2_dist.validate("gamma2_dist")?;
        match self.omega0_dist {
            CouplingDist::Fixed { value } if value > 0.0 && value.is_finite() => {}
            CouplingDist::LogUniform { lo, hi } => LogUniform { lo, hi }.validate("omega0_dist")?,
            _ => return Err(Error::invalid("omega0_dist must be positive")),
        }
        match self.gamma1_rule {
            Gamma1Rule::UniformFraction => {}
            Gamma1Rule::Fraction { fraction } if fraction > 0.0 && fraction <= 1.0 => {}
            Gamma1Rule::LogUniform { lo, hi } => LogUniform { lo, hi }.validate("gamma1_rule")?,
            _ => return Err(Error::invalid("gamma1 fraction must lie in (0, 1]")),
        }
        Ok(())
    }
}

/// Pump tone; the probe is weak and never saturates the bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub pump_frequency: f64,
    pub pump_photons: f64,
    #[serde(default = "weak")]
    pub weak_probe: bool,
}

fn weak() -> bool {
    true
}

impl DriveSpec {
    pub fn undriven() -> Self {
        DriveSpec { pump_frequency: 1.0, pump_photons: 0.0, weak_probe: true }
    }

    pub fn pump(pump_frequency: f64, pump_photons: f64) -> Self {
        DriveSpec { pump_frequency, pump_photons, weak_probe: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.pump_photons.is_finite() && self.pump_photons >= 0.0) {
            return Err(Error::invalid("pump_photons must be >= 0"));
        }
        if !self.pump_frequency.is_finite() {
            return Err(Error::invalid("pump_frequency must be finite"));
        }
        Ok(())
    }
}

/// Draws `n_defects` defects with transition frequencies uniform over the band.
/// Identical configurations give bit-identical ensembles.
pub fn sample_ensemble(cfg: &EnsembleConfig) -> Result<Vec<TlsDefect>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lo = cfg.band_center - cfg.band_halfwidth;
    let width = 2.0 * cfg.band_halfwidth;
    let mut out = Vec::with_capacity(cfg.n_defects);
    for _ in 0..cfg.n_defects {
        let f_j = lo + width * rng.random::<f64>();
        let gamma2 = cfg.gamma2_dist.sample(&mut rng);
        let gamma1 = match cfg.gamma1_rule {
            // 1 − U[0,1) lies in (0, 1]
            Gamma1Rule::UniformFraction => 2.0 * gamma2 * (1.0 - rng.random::<f64>()),
            Gamma1Rule::Fraction { fraction } => 2.0 * gamma2 * fraction,
            Gamma1Rule::LogUniform { lo, hi } => {
                LogUniform { lo, hi }.sample(&mut rng).min(2.0 * gamma2)
            }
        };
        let omega0j_over_2pi = match cfg.omega0_dist {
            CouplingDist::Fixed { value } => value,
            CouplingDist::LogUniform { lo, hi } => LogUniform { lo, hi }.sample(&mut rng),
        };
        out.push(TlsDefect { f_j, gamma1, gamma2, omega0j_over_2pi });
    }
    Ok(out)
}

/// Bloch steady-state population inversion under the pump:
///
/// ⟨σ_z⟩ = −tanh(h fⱼ/2k_BT)·(1 + δ²/Γ₂²)/(1 + δ²/Γ₂² + Ω_R²/(Γ₁Γ₂))
///
/// with δ = fⱼ − f_pump and Ω_R = (Ω₀ⱼ/2π)·√n̄.
pub fn steady_state_sigma_z(d: &TlsDefect, drive: &DriveSpec, temperature: f64) -> Result<f64> {
    d.validate()?;
    drive.validate()?;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature must be > 0"));
    }
    Ok(sigma_z(d, drive, thermal_factor(d.f_j, temperature)))
}

fn thermal_factor(f: f64, temperature: f64) -> f64 {
    (H * f / (2.0 * K_B * temperature)).tanh()
}

fn sigma_z(d: &TlsDefect, drive: &DriveSpec, thermal: f64) -> f64 {
    let detuning = (d.f_j - drive.pump_frequency) / d.gamma2;
    let lorentz = 1.0 + detuning * detuning;
    let saturation =
        d.omega0j_over_2pi * d.omega0j_over_2pi * drive.pump_photons / (d.gamma1 * d.gamma2);
    -thermal * (lorentz / (lorentz + saturation))
}

/// Complex resonance shift (Hz) of the resonator at `f_r`, summed in a fixed
/// order over the ensemble. Real part: frequency shift. Imaginary part:
/// added half-width.
pub fn ensemble_shift(
    ensemble: &[TlsDefect],
    f_r: f64,
    drive: &DriveSpec,
    temperature: f64,
) -> Result<Complex64> {
    drive.validate()?;
    let thermal = thermal_factors(ensemble, temperature)?;
    Ok(shift_sum(ensemble, &thermal, f_r, drive))
}

fn thermal_factors(ensemble: &[TlsDefect], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature must be > 0"));
    }
    Ok(ensemble.iter().map(|d| thermal_factor(d.f_j, temperature)).collect())
}

fn shift_sum(ensemble: &[TlsDefect], thermal: &[f64], f_r: f64, drive: &DriveSpec) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (d, &th) in ensemble.iter().zip(thermal) {
        let weight = 0.25 * d.omega0j_over_2pi * d.omega0j_over_2pi * sigma_z(d, drive, th);
        acc += weight / Complex64::new(d.f_j - f_r, d.gamma2);
    }
    acc
}

fn real_shift_sum(ensemble: &[TlsDefect], thermal: &[f64], f_r: f64, drive: &DriveSpec) -> f64 {
    let mut acc = 0.0;
    for (d, &th) in ensemble.iter().zip(thermal) {
        let x = d.f_j - f_r;
        let weight = 0.25 * d.omega0j_over_2pi * d.omega0j_over_2pi * sigma_z(d, drive, th);
        acc += weight * x / (x * x + d.gamma2 * d.gamma2);
    }
    acc
}

/// Added inverse quality factor 2·Im(δf)/f_r for an on-resonance pump at each
/// photon number of `n_bar_grid`.
pub fn ensemble_power_curve(
    ensemble: &[TlsDefect],
    f_r: f64,
    n_bar_grid: &[f64],
    temperature: f64,
) -> Result<Vec<(f64, f64)>> {
    let thermal = thermal_factors(ensemble, temperature)?;
    n_bar_grid
        .iter()
        .map(|&n| {
            let drive = DriveSpec::pump(f_r, n);
            drive.validate()?;
            Ok((n, 2.0 * shift_sum(ensemble, &thermal, f_r, &drive).im / f_r))
        })
        .collect()
}

/// Pump-induced real frequency shift versus pump detuning Δ = f_pump − f_r,
/// relative to the undriven ensemble.
pub fn ensemble_pump_sweep(
    ensemble: &[TlsDefect],
    f_r: f64,
    delta_grid: &[f64],
    n_bar: f64,
    temperature: f64,
) -> Result<Vec<(f64, f64)>> {
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let max_delta = delta_grid.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let max_rabi = ensemble
        .iter()
        .map(|d| d.omega0j_over_2pi * n_bar.sqrt() * (d.gamma2 / d.gamma1).sqrt())
        .fold(0.0f64, f64::max);
    let (lo, hi) = ensemble
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d.f_j), hi.max(d.f_j)));
    let margin = max_delta + 5.0 * max_rabi;
    if f_r - margin < lo || f_r + margin > hi {
        return Err(Error::invalid(format!(
            "TLS band [{lo}, {hi}] Hz does not cover f_r ± {margin} Hz"
        )));
    }
    DriveSpec::pump(f_r, n_bar).validate()?;
    let thermal = thermal_factors(ensemble, temperature)?;
    let baseline = shift_sum(ensemble, &thermal, f_r, &DriveSpec::undriven()).re;
    Ok(delta_grid
        .iter()
        .map(|&delta| {
            let shift = real_shift_sum(ensemble, &thermal, f_r, &DriveSpec::pump(f_r + delta, n_bar));
            (delta, shift - baseline)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect() -> TlsDefect {
        TlsDefect { f_j: 5e9 + 3e4, gamma1: 1e3, gamma2: 2e3, omega0j_over_2pi: 2e4 }
    }

    #[test]
    fn zero_defects_give_empty_ensemble() {
        let cfg = EnsembleConfig::standard(0, 5e9, 1e7, 1);
        assert!(sample_ensemble(&cfg).unwrap().is_empty());
        let shift = ensemble_shift(&[], 5e9, &DriveSpec::undriven(), 0.01).unwrap();
        assert_eq!(shift, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn invalid_band_is_rejected() {
        let mut cfg = EnsembleConfig::standard(10, 5e9, 1e7, 1);
        cfg.band_halfwidth = 0.0;
        assert!(sample_ensemble(&cfg).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = EnsembleConfig::standard(1000, 5e9, 1e7, 99);
        let a = sample_ensemble(&cfg).unwrap();
        let b = sample_ensemble(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|d| d.validate().is_ok()));
        let c = sample_ensemble(&EnsembleConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn population_limits() {
        let d = defect();
        let t = 0.01;
        let thermal = -(H * d.f_j / (2.0 * K_B * t)).tanh();
        let z0 = steady_state_sigma_z(&d, &DriveSpec::undriven(), t).unwrap();
        assert_eq!(z0, thermal);
        let strong = steady_state_sigma_z(&d, &DriveSpec::pump(d.f_j, 1e12), t).unwrap();
        assert!(strong.abs() < 1e-6);
        let far = steady_state_sigma_z(&d, &DriveSpec::pump(d.f_j + 1e12, 1e4), t).unwrap();
        assert!((far - thermal).abs() < 1e-6);
        for n in [0.0, 1.0, 1e3, 1e9] {
            let z = steady_state_sigma_z(&d, &DriveSpec::pump(d.f_j + 1e3, n), t).unwrap();
            assert!((-1.0..=0.0).contains(&z));
        }
    }

    #[test]
    fn single_thermal_defect_shift() {
        let d = defect();
        let f_r = 5e9;
        let t = 0.05;
        let got = ensemble_shift(&[d], f_r, &DriveSpec::undriven(), t).unwrap();
        let x = d.f_j - f_r;
        let th = (H * d.f_j / (2.0 * K_B * t)).tanh();
        let want = Complex64::new(x, -d.gamma2) * (0.25 * d.omega0j_over_2pi.powi(2) * -th)
            / (x * x + d.gamma2 * d.gamma2);
        assert!((got - want).norm() / want.norm() < 1e-14);
        assert!(got.im > 0.0);
    }

    #[test]
    fn saturated_defect_contributes_nothing() {
        let d = TlsDefect { gamma1: 1e-12, ..defect() };
        let drive = DriveSpec::pump(d.f_j, 1e30);
        let shift = ensemble_shift(&[d], 5e9, &drive, 0.01).unwrap();
        assert!(shift.norm() < 1e-20);
    }

    #[test]
    fn shift_is_additive() {
        let a = sample_ensemble(&EnsembleConfig::standard(300, 5e9, 1e7, 1)).unwrap();
        let b = sample_ensemble(&EnsembleConfig::standard(200, 5e9, 1e7, 2)).unwrap();
        let joined: Vec<_> = a.iter().chain(&b).copied().collect();
        let drive = DriveSpec::pump(5e9 + 1e5, 1e4);
        let sa = ensemble_shift(&a, 5e9, &drive, 0.01).unwrap();
        let sb = ensemble_shift(&b, 5e9, &drive, 0.01).unwrap();
        let sj = ensemble_shift(&joined, 5e9, &drive, 0.01).unwrap();
        assert!((sj - (sa + sb)).norm() <= 1e-12 * sj.norm());
    }

    #[test]
    fn zero_pump_sweep_is_flat() {
        let e = sample_ensemble(&EnsembleConfig::standard(500, 5e9, 1e8, 3)).unwrap();
        let sweep = ensemble_pump_sweep(&e, 5e9, &[-1e6, 0.0, 1e6], 0.0, 0.01).unwrap();
        assert!(sweep.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn pump_sweep_requires_band_coverage() {
        let e = sample_ensemble(&EnsembleConfig::standard(500, 5e9, 1e6, 3)).unwrap();
        assert!(ensemble_pump_sweep(&e, 5e9, &[-5e6, 5e6], 10.0, 0.01).is_err());
    }

    #[test]
    fn power_curve_is_monotone_and_positive() {
        let e = sample_ensemble(&EnsembleConfig::standard(2000, 5e9, 1e8, 5)).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| 10f64.powf(-2.0 + 0.4 * i as f64)).collect();
        let curve = ensemble_power_curve(&e, 5e9, &grid, 0.01).unwrap();
        assert!(curve.iter().all(|(_, l)| *l >= 0.0));
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
    }
}

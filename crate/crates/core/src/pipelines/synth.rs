use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    pump::photon_number_at, ComplexTrace, DeviceIdentity, Extracted, PumpSetup, SweepData,
    SweepEntry, SweepKind, SweepManifest, TraceBackground, TraceMetadata,
};
use crate::error::{Error, Result};
use crate::physmodels::constants::HBAR;
use crate::physmodels::{
    dispersive_shift_hz, kappa_eff, s21_approx, thermal_tls_shift, tls_power_loss,
    total_thermal_shift, two_tone_shift, CalibrationParams, CavitySystemParams,
    SuperconductorParams, TlsLossParams, TwoToneParams, PUMP_LINE_GAIN_DB,
};

/// Samples `background` times the dispersive transmission on `n_points` spanning `span` Hz around the
/// dressed resonance, plus complex Gaussian noise. The per-quadrature σ is
/// |S_off|/√(2·10^{snr/10}) with |S_off| the cavity background level at the
/// resonance; an infinite SNR gives exact model samples. The cavity term
/// comes from `cav`, so the cavity fields of `background` are not used.
pub fn synth_trace(
    cav: &CavitySystemParams,
    background: &TraceBackground,
    noise_snr_db: f64,
    n_points: usize,
    span: f64,
    seed: u64,
) -> Result<ComplexTrace> {
    cav.validate_dispersive()?;
    background.validate()?;
    if n_points < 2 {
        return Err(Error::invalid("n_points must be >= 2"));
    }
    if noise_snr_db.is_nan() {
        return Err(Error::invalid("SNR must not be NaN"));
    }
    let kappa_tot = 2.0 * kappa_eff(cav)? / (2.0 * PI) + cav.gamma_r_over_2pi;
    if !(span.is_finite() && span >= 10.0 * kappa_tot) {
        return Err(Error::invalid(format!(
            "span {span} Hz must cover at least 10 linewidths ({} Hz)",
            10.0 * kappa_tot
        )));
    }
    let centre = cav.f_r + dispersive_shift_hz(cav)?;
    let off_level = background.amplitude_scale * cav.kappa_over_2pi / (centre - cav.f_c).abs();
    let sigma = if noise_snr_db == f64::INFINITY {
        0.0
    } else {
        off_level / (2.0 * 10f64.powf(noise_snr_db / 10.0)).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frequencies = Vec::with_capacity(n_points);
    let mut s21 = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let f = centre - 0.5 * span + span * k as f64 / (n_points - 1) as f64;
        let gain = Complex64::from_polar(
            background.amplitude_scale,
            background.phase_offset - 2.0 * PI * f * background.electrical_delay,
        );
        let clean = gain * s21_approx(cav, 2.0 * PI * f)?;
        let nr: f64 = rng.sample(StandardNormal);
        let ni: f64 = rng.sample(StandardNormal);
        frequencies.push(f);
        s21.push(clean + Complex64::new(sigma * nr, sigma * ni));
    }
    ComplexTrace::new(frequencies, s21, TraceMetadata::default())
}

/// Device shared by every synthetic sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDevice {
    pub identity: DeviceIdentity,
    pub calibration: CalibrationParams,
    /// Dressed (measured) resonance frequency at low power and temperature (Hz).
    pub f_r: f64,
    pub temperature: f64,
}

impl SynthDevice {
    /// Res-2-like device: 4.8 GHz resonance under an 8 GHz, 1 MHz cavity,
    /// −94 dB input line, 0.1 V/m single-photon field, 10 mK bath.
    pub fn reference() -> Self {
        SynthDevice {
            identity: DeviceIdentity {
                resonator: "Res 2".into(),
                g_over_2pi: None,
                cavity_freq: 8e9,
                cavity_kappa: 1e6,
            },
            calibration: CalibrationParams { gain_in_db: -94.0, field_at_one_photon: 0.1 },
            f_r: 4.8e9,
            temperature: 0.010,
        }
    }

    /// Cavity system whose dressed resonance sits at `self.f_r`, with
    /// internal loss rate `gamma_r` (Hz).
    pub fn cavity(&self, gamma_r: f64) -> Result<CavitySystemParams> {
        let g = self.identity.coupling()?;
        let cav = CavitySystemParams {
            f_c: self.identity.cavity_freq,
            f_r: bare_frequency(self.f_r, self.identity.cavity_freq, g),
            g_over_2pi: g,
            kappa_over_2pi: self.identity.cavity_kappa,
            gamma_r_over_2pi: gamma_r,
            gamma_c_over_2pi: 0.0,
        };
        cav.validate_dispersive()?;
        Ok(cav)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTruth {
    pub device: SynthDevice,
    pub inv_q_tls: f64,
    pub n_c: f64,
    pub phi: f64,
    pub inv_q_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpTruth {
    pub device: SynthDevice,
    pub inv_q_tls: f64,
    pub omega0_over_2pi: f64,
    pub heating_eta: f64,
    /// Unpumped internal loss rate γ_r/2π (Hz).
    pub gamma_r: f64,
    pub pump_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureTruth {
    pub device: SynthDevice,
    pub inv_q_tls: f64,
    pub superconductor: SuperconductorParams,
    /// Internal loss rate γ_r/2π used for synthetic traces (Hz).
    pub gamma_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepTruth {
    Power(PowerTruth),
    Pump(PumpTruth),
    Temperature(TemperatureTruth),
}

impl SweepTruth {
    pub fn kind(&self) -> SweepKind {
        match self {
            SweepTruth::Power(_) => SweepKind::Power,
            SweepTruth::Pump(_) => SweepKind::Pump,
            SweepTruth::Temperature(_) => SweepKind::Temperature,
        }
    }

    fn device(&self) -> &SynthDevice {
        match self {
            SweepTruth::Power(t) => &t.device,
            SweepTruth::Pump(t) => &t.device,
            SweepTruth::Temperature(t) => &t.device,
        }
    }

    pub fn values(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            SweepTruth::Power(t) => vec![
                ("inv_q_tls", t.inv_q_tls),
                ("n_c", t.n_c),
                ("phi", t.phi),
                ("inv_q_r", t.inv_q_r),
            ],
            SweepTruth::Pump(t) => vec![
                ("inv_q_tls", t.inv_q_tls),
                ("omega0_over_2pi", t.omega0_over_2pi),
                ("heating_eta", t.heating_eta),
            ],
            SweepTruth::Temperature(t) => {
                vec![("inv_q_tls", t.inv_q_tls), ("alpha", t.superconductor.alpha)]
            }
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Control grid of a synthetic sweep: photon numbers (power), pump
/// detunings in Hz (pump) or temperatures in K (temperature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid(pub Vec<f64>);

impl SweepGrid {
    pub fn log(lo: f64, hi: f64, n: usize) -> Self {
        let (a, b) = (lo.ln(), hi.ln());
        SweepGrid((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
    }

    pub fn linear(lo: f64, hi: f64, n: usize) -> Self {
        SweepGrid((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    /// Default grid for `kind` with `n` points: photon numbers 1e-2..1e6,
    /// detunings ±2 MHz, or temperatures 10 mK..1.5 K.
    pub fn reference(kind: SweepKind, n: usize) -> Self {
        match kind {
            SweepKind::Power => SweepGrid::log(1e-2, 1e6, n),
            SweepKind::Pump => SweepGrid::linear(-2e6, 2e6, n),
            SweepKind::Temperature => SweepGrid::log(0.010, 1.5, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Emit full traces instead of pre-extracted resonances.
    pub traces: bool,
    pub snr_db: f64,
    pub trace_points: usize,
    /// Trace span in linewidths.
    pub span_linewidths: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { traces: false, snr_db: 40.0, trace_points: 401, span_linewidths: 16.0 }
    }
}

/// Generates a sweep from the forward model of the matching pipeline.
///
/// `noise` is relative: a fraction of the internal loss rate per point for
/// power sweeps, and a fraction of the largest noiseless shift for pump and
/// temperature sweeps. With `opts.traces` the per-point resonances are
/// encoded in synthetic traces at `opts.snr_db` instead, and `noise` is not
/// used.
pub fn synth_sweep(
    truth: &SweepTruth,
    grid: &SweepGrid,
    noise: f64,
    seed: u64,
    opts: &SynthOptions,
) -> Result<SweepManifest> {
    if grid.0.len() < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::invalid("noise must be >= 0"));
    }
    let dev = truth.device();
    let g = dev.identity.coupling()?;
    let cav_at = |f_dressed: f64, gamma_r: f64| -> Result<CavitySystemParams> {
        let c = CavitySystemParams {
            f_c: dev.identity.cavity_freq,
            f_r: bare_frequency(f_dressed, dev.identity.cavity_freq, g),
            g_over_2pi: g,
            kappa_over_2pi: dev.identity.cavity_kappa,
            gamma_r_over_2pi: gamma_r,
            gamma_c_over_2pi: 0.0,
        };
        c.validate_dispersive()?;
        Ok(c)
    };
    // photon numbers in the fit pipelines use the measured frequency as ω_r
    let measured_cav = |f_meas: f64, gamma_r: f64| CavitySystemParams {
        f_r: f_meas,
        ..cav_at(f_meas, gamma_r).expect("validated")
    };
    cav_at(dev.f_r, 1.0)?;
    let k_eff = kappa_eff(&measured_cav(dev.f_r, 1.0))? / (2.0 * PI);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<(f64, f64, f64, TraceMetadata)> = Vec::new(); // control, f_r, gamma_r, meta
    let mut extracted: Vec<Extracted> = Vec::new();
    let meta = |power: Option<f64>, temp: f64| TraceMetadata {
        power_dbm: power,
        temperature_k: Some(temp),
        resonator: Some(dev.identity.resonator.clone()),
        ..TraceMetadata::default()
    };
    let mut pump_setup = None;
    let mut superconductor = None;

    match truth {
        SweepTruth::Power(t) => {
            let loss = TlsLossParams {
                inv_q_tls: t.inv_q_tls,
                n_c: t.n_c,
                phi: t.phi,
                inv_q_r: t.inv_q_r,
                f_r: dev.f_r,
                temperature: dev.temperature,
            };
            loss.validate()?;
            for &n_bar in &grid.0 {
                if !(n_bar > 0.0) {
                    return Err(Error::invalid("photon numbers must be > 0"));
                }
                let inv_q = tls_power_loss(&loss, n_bar)?;
                let gamma = dev.f_r * inv_q;
                let cav = measured_cav(dev.f_r, gamma);
                let p_dbm = source_power_for(&cav, &dev.calibration, n_bar)?;
                let eps: f64 = rng.sample(StandardNormal);
                let gamma_obs = gamma * (1.0 + noise * eps);
                extracted.push(Extracted {
                    f_r: dev.f_r,
                    kappa_tot: Some(2.0 * k_eff + gamma_obs),
                    f_r_stderr: None,
                    kappa_tot_stderr: Some(noise * gamma).filter(|s| *s > 0.0),
                });
                points.push((p_dbm, dev.f_r, gamma, meta(Some(p_dbm), dev.temperature)));
            }
        }
        SweepTruth::Pump(t) => {
            let params = TwoToneParams {
                f_r: dev.f_r,
                inv_q_tls: t.inv_q_tls,
                omega0_over_2pi: t.omega0_over_2pi,
                temperature: dev.temperature,
                heating_eta: t.heating_eta,
            };
            params.validate()?;
            let cav = measured_cav(dev.f_r, t.gamma_r);
            let pump_cal = CalibrationParams { gain_in_db: PUMP_LINE_GAIN_DB, ..dev.calibration };
            let mut shifts = Vec::with_capacity(grid.0.len());
            for &delta in &grid.0 {
                let n_bar = photon_number_at(&cav, &pump_cal, t.pump_power_dbm, delta)?;
                let heat = if t.heating_eta > 0.0 {
                    thermal_tls_shift(dev.f_r, t.inv_q_tls, dev.temperature + t.heating_eta * n_bar)?
                        - thermal_tls_shift(dev.f_r, t.inv_q_tls, dev.temperature)?
                } else {
                    0.0
                };
                shifts.push(two_tone_shift(&params, delta, n_bar)? + heat);
            }
            let sigma = noise * shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            for (&delta, s) in grid.0.iter().zip(shifts) {
                let eps: f64 = rng.sample(StandardNormal);
                let f = dev.f_r + s + sigma * eps;
                extracted.push(Extracted {
                    f_r: f,
                    kappa_tot: None,
                    f_r_stderr: None,
                    kappa_tot_stderr: None,
                });
                let m = TraceMetadata {
                    pump_freq_hz: Some(dev.f_r + delta),
                    pump_power_dbm: Some(t.pump_power_dbm),
                    ..meta(None, dev.temperature)
                };
                points.push((delta, f, t.gamma_r, m));
            }
            pump_setup = Some(PumpSetup {
                power_dbm: t.pump_power_dbm,
                baseline_f_r: dev.f_r,
                baseline_kappa_tot: 2.0 * k_eff + t.gamma_r,
            });
        }
        SweepTruth::Temperature(t) => {
            t.superconductor.validate()?;
            let mut shifts = Vec::with_capacity(grid.0.len());
            for &temp in &grid.0 {
                shifts.push(total_thermal_shift(dev.f_r, t.inv_q_tls, &t.superconductor, temp)?.value);
            }
            let sigma = noise * shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            for (&temp, s) in grid.0.iter().zip(shifts) {
                let eps: f64 = rng.sample(StandardNormal);
                let f = dev.f_r + s + sigma * eps;
                extracted.push(Extracted {
                    f_r: f,
                    kappa_tot: None,
                    f_r_stderr: None,
                    kappa_tot_stderr: None,
                });
                points.push((temp, f, t.gamma_r, meta(None, temp)));
            }
            superconductor = Some(t.superconductor);
        }
    }

    let mut entries = Vec::with_capacity(points.len());
    for ((control, f_r, gamma_r, metadata), x) in points.into_iter().zip(extracted) {
        let data = if opts.traces {
            let cav = cav_at(f_r, gamma_r)?;
            let kappa_tot = 2.0 * k_eff + gamma_r;
            let trace_seed: u64 = rng.random();
            let mut trace = synth_trace(
                &cav,
                &TraceBackground::default(),
                opts.snr_db,
                opts.trace_points,
                opts.span_linewidths * kappa_tot,
                trace_seed,
            )?;
            trace.metadata = metadata;
            SweepData::Trace(trace)
        } else {
            SweepData::Extracted(x)
        };
        entries.push(SweepEntry { control, data, source: None });
    }
    let manifest = SweepManifest {
        kind: truth.kind(),
        device: dev.identity.clone(),
        calibration: dev.calibration,
        temperature: dev.temperature,
        pump: pump_setup,
        superconductor,
        entries,
        truth: Some(truth.values()),
    };
    manifest.validate()?;
    Ok(manifest)
}

/// Bare frequency whose dispersive pull lands on `f_dressed`.
fn bare_frequency(f_dressed: f64, f_c: f64, g: f64) -> f64 {
    let mut f = f_dressed;
    for _ in 0..50 {
        f = f_dressed - g * g / (f - f_c);
    }
    f
}

/// Source power (dBm) giving `n_bar` photons on resonance; inverse of `photon_number`.
fn source_power_for(cav: &CavitySystemParams, cal: &CalibrationParams, n_bar: f64) -> Result<f64> {
    let k = kappa_eff(cav)?;
    let omega_r = 2.0 * PI * cav.f_r;
    let width = 2.0 * k + 2.0 * PI * cav.gamma_r_over_2pi;
    let p_in = n_bar * HBAR * omega_r * width * width / (4.0 * k);
    Ok(10.0 * p_in.log10() + 30.0 - cal.gain_in_db)
}

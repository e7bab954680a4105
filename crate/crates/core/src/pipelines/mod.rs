//! Fit drivers for the four analyses (single trace, power sweep, pump sweep,
//! temperature sweep) and the synthetic generators that feed them.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitcore::{lm_fit, FitProblem, FitResult};
use crate::physmodels::{table2_coupling_hz, CalibrationParams, SuperconductorParams};

mod power;
mod pump;
mod synth;
mod temperature;
mod trace;

pub use power::{fit_power_curve, fit_power_sweep};
pub use pump::{fit_pump_sweep, pump_photon_numbers, HeatingMode};
pub use synth::{
    synth_sweep, synth_trace, PowerTruth, PumpTruth, SweepGrid, SweepTruth, SynthDevice,
    SynthOptions, TemperatureTruth,
};
pub use temperature::fit_temperature_sweep;
pub use trace::{estimate_trace_init, fit_trace, fit_trace_with, trace_model, TraceFit, TraceInit};

/// Minimum number of points for a trace fit.
pub const MIN_TRACE_POINTS: usize = 32;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub power_dbm: Option<f64>,
    pub temperature_k: Option<f64>,
    pub pump_freq_hz: Option<f64>,
    pub pump_power_dbm: Option<f64>,
    pub resonator: Option<String>,
}

/// Complex transmission on a strictly increasing frequency grid (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub frequencies: Vec<f64>,
    pub s21: Vec<Complex64>,
    pub metadata: TraceMetadata,
}

impl ComplexTrace {
    pub fn new(frequencies: Vec<f64>, s21: Vec<Complex64>, metadata: TraceMetadata) -> Result<Self> {
        let t = ComplexTrace { frequencies, s21, metadata };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.s21.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} S21 samples",
                self.frequencies.len(),
                self.s21.len()
            )));
        }
        if let Some(i) = self.frequencies.iter().position(|f| !f.is_finite())
            .or_else(|| self.s21.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())))
        {
            return Err(Error::invalid(format!("non-finite value at point {i}")));
        }
        if let Some(i) = self.frequencies.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("frequency grid not increasing at point {}", i + 1)));
        }
        Ok(())
    }
}

/// Nuisance factors of a measured trace:
/// amplitude_scale·e^{i(phase_offset − 2π f·electrical_delay)} multiplying
/// a cavity term iκ_c/(f − f_c) plus the resonator Lorentzian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceBackground {
    pub amplitude_scale: f64,
    /// rad
    pub phase_offset: f64,
    /// s
    pub electrical_delay: f64,
    /// Cavity port coupling κ_c/2π (Hz).
    pub cavity_term_kappa: f64,
    /// Cavity frequency f_c the cavity-term detuning is measured from (Hz).
    pub cavity_detuning_ref: f64,
}

impl Default for TraceBackground {
    fn default() -> Self {
        TraceBackground {
            amplitude_scale: 1.0,
            phase_offset: 0.0,
            electrical_delay: 0.0,
            cavity_term_kappa: 1e6,
            cavity_detuning_ref: 8e9,
        }
    }
}

impl TraceBackground {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_scale.is_finite() && self.amplitude_scale > 0.0) {
            return Err(Error::invalid("amplitude_scale must be > 0"));
        }
        if !(self.cavity_term_kappa.is_finite() && self.cavity_term_kappa > 0.0) {
            return Err(Error::invalid("cavity_term_kappa must be > 0"));
        }
        if !(self.phase_offset.is_finite()
            && self.electrical_delay.is_finite()
            && self.cavity_detuning_ref.is_finite())
        {
            return Err(Error::invalid("background parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Power,
    Pump,
    Temperature,
}

impl SweepKind {
    pub fn control_unit(self) -> &'static str {
        match self {
            SweepKind::Power => "dBm",
            SweepKind::Pump => "Hz",
            SweepKind::Temperature => "K",
        }
    }
}

/// Resonance parameters already extracted from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extracted {
    pub f_r: f64,
    pub kappa_tot: Option<f64>,
    pub f_r_stderr: Option<f64>,
    pub kappa_tot_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepData {
    Trace(ComplexTrace),
    Extracted(Extracted),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    /// Source power (dBm), pump detuning (Hz) or temperature (K).
    pub control: f64,
    pub data: SweepData,
    /// Trace file the entry was loaded from, if any.
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceIdentity {
    pub resonator: String,
    /// Explicit g/2π (Hz); falls back to the tabulated value for `resonator`.
    #[serde(default)]
    pub g_over_2pi: Option<f64>,
    pub cavity_freq: f64,
    pub cavity_kappa: f64,
}

impl DeviceIdentity {
    pub fn coupling(&self) -> Result<f64> {
        self.g_over_2pi.or_else(|| table2_coupling_hz(&self.resonator)).ok_or_else(|| {
            Error::invalid(format!("unknown resonator {:?}: g_over_2pi must be given", self.resonator))
        })
    }

    pub fn background(&self) -> TraceBackground {
        TraceBackground {
            cavity_term_kappa: self.cavity_kappa,
            cavity_detuning_ref: self.cavity_freq,
            ..TraceBackground::default()
        }
    }
}

/// Pump tone of a two-tone sweep and the unpumped reference resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSetup {
    pub power_dbm: f64,
    pub baseline_f_r: f64,
    pub baseline_kappa_tot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepManifest {
    pub kind: SweepKind,
    pub device: DeviceIdentity,
    pub calibration: CalibrationParams,
    /// Bath temperature (K); ignored by temperature sweeps.
    pub temperature: f64,
    pub pump: Option<PumpSetup>,
    pub superconductor: Option<SuperconductorParams>,
    pub entries: Vec<SweepEntry>,
    pub truth: Option<BTreeMap<String, f64>>,
}

impl SweepManifest {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid("sweep has no entries"));
        }
        self.calibration.validate()?;
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be > 0"));
        }
        if !(self.device.cavity_freq > 0.0 && self.device.cavity_kappa > 0.0) {
            return Err(Error::invalid("cavity frequency and coupling must be > 0"));
        }
        let c: Vec<f64> = self.entries.iter().map(|e| e.control).collect();
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite control value"));
        }
        let increasing = c.windows(2).all(|w| w[1] > w[0]);
        let decreasing = c.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid("control values must be strictly monotone"));
        }
        let names: Vec<&str> = self
            .entries
            .iter()
            .filter_map(|e| match &e.data {
                SweepData::Trace(t) => t.metadata.resonator.as_deref(),
                SweepData::Extracted(_) => None,
            })
            .collect();
        if let Some(other) = names.iter().find(|n| **n != self.device.resonator) {
            return Err(Error::invalid(format!(
                "trace for resonator {other:?} in a sweep of {:?}",
                self.device.resonator
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Trace,
    Power,
    Pump,
    Temperature,
}

/// Data and best-fit model on the fit's abscissa, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCurve {
    pub x_label: String,
    pub y_label: String,
    /// Draw the abscissa on a log scale.
    #[serde(default)]
    pub log_x: bool,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub model: Vec<f64>,
    /// Dense model evaluation for drawing a smooth line.
    pub model_x: Vec<f64>,
    pub model_y: Vec<f64>,
}

/// Outcome of one pipeline: fitted parameters in physical units plus
/// everything a report or plot needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineFit {
    pub kind: PipelineKind,
    pub names: Vec<String>,
    pub units: Vec<String>,
    pub fit: FitResult,
    pub warnings: Vec<String>,
    pub curve: FitCurve,
    /// Secondary quantities (for example Q_i) keyed by name.
    pub derived: BTreeMap<String, f64>,
}

impl PipelineFit {
    pub fn param(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.fit.params[i], self.fit.stderr[i]))
    }
}

/// How an internal coordinate q (starting at 1) maps to a physical parameter.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Coord {
    /// p = p₀ + scale·(q − 1)
    Affine(f64),
    /// p = p₀·e^{q − 1}, for strictly positive parameters spanning decades.
    Log,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub init: f64,
    pub lower: f64,
    pub upper: f64,
    pub coord: Coord,
    pub fixed: bool,
}

impl ParamSpec {
    pub fn new(name: &'static str, unit: &'static str, init: f64, coord: Coord) -> Self {
        ParamSpec {
            name,
            unit,
            init,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            coord,
            fixed: false,
        }
    }

    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn fixed(mut self, fixed: bool) -> Self {
        self.fixed = fixed;
        self
    }

    fn to_physical(&self, q: f64) -> f64 {
        match self.coord {
            Coord::Affine(s) => self.init + s * (q - 1.0),
            Coord::Log => self.init * (q - 1.0).exp(),
        }
    }

    fn to_internal(&self, p: f64) -> f64 {
        match self.coord {
            Coord::Affine(s) => 1.0 + (p - self.init) / s,
            Coord::Log if p <= 0.0 => f64::NEG_INFINITY,
            Coord::Log => 1.0 + (p / self.init).ln(),
        }
    }

    fn derivative(&self, q: f64) -> f64 {
        match self.coord {
            Coord::Affine(s) => s,
            Coord::Log => self.to_physical(q),
        }
    }
}

/// Default iteration budget of every pipeline fit.
pub const DEFAULT_MAX_ITERATIONS: usize = 500;

thread_local! {
    static ITERATION_LIMIT: std::cell::Cell<usize> = const { std::cell::Cell::new(DEFAULT_MAX_ITERATIONS) };
}

/// Runs `f` with the Levenberg-Marquardt iteration budget of every pipeline
/// fit on this thread set to `max_iterations`.
pub fn with_iteration_limit<R>(max_iterations: usize, f: impl FnOnce() -> R) -> R {
    let previous = ITERATION_LIMIT.with(|l| l.replace(max_iterations.max(1)));
    let out = f();
    ITERATION_LIMIT.with(|l| l.set(previous));
    out
}

/// Runs the optimizer on well-scaled internal coordinates and maps the result,
/// including the linearized covariance, back to physical units.
pub(crate) fn fit_scaled(
    specs: &[ParamSpec],
    residual: impl Fn(&[f64]) -> Vec<f64>,
    weights: Option<Vec<f64>>,
) -> Result<FitResult> {
    for s in specs {
        let ok = match s.coord {
            Coord::Affine(scale) => scale.is_finite() && scale > 0.0,
            Coord::Log => s.init > 0.0,
        };
        if !(ok && s.init.is_finite()) {
            return Err(Error::invalid(format!("bad starting point for {}: {}", s.name, s.init)));
        }
    }
    let physical = |q: &[f64]| -> Vec<f64> {
        specs.iter().zip(q).map(|(s, &q)| s.to_physical(q)).collect()
    };
    let internal_residual = |q: &[f64]| residual(&physical(q));
    let n = specs.len();
    let mut problem = FitProblem::new(internal_residual, vec![1.0; n])
        .with_bounds(
            specs.iter().map(|s| s.to_internal(s.lower)).collect(),
            specs.iter().map(|s| s.to_internal(s.upper)).collect(),
        )
        .with_fixed(specs.iter().map(|s| s.fixed).collect())
        .with_max_iterations(ITERATION_LIMIT.with(|l| l.get()));
    if let Some(w) = weights {
        problem = problem.with_weights(w);
    }
    let mut fit = lm_fit(&problem)?;
    let d: Vec<f64> = specs.iter().zip(&fit.params).map(|(s, &q)| s.derivative(q)).collect();
    fit.params = physical(&fit.params);
    for (e, di) in fit.stderr.iter_mut().zip(&d) {
        *e *= di.abs();
    }
    if let Some(cov) = fit.covariance.as_mut() {
        for (r, row) in cov.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v *= d[r] * d[c];
            }
        }
    }
    Ok(fit)
}

/// Residual vector that makes the optimizer reject a trial point.
pub(crate) fn rejected(m: usize) -> Vec<f64> {
    vec![f64::NAN; m]
}

pub(crate) fn names_units(specs: &[ParamSpec]) -> (Vec<String>, Vec<String>) {
    (
        specs.iter().map(|s| s.name.to_string()).collect(),
        specs.iter().map(|s| s.unit.to_string()).collect(),
    )
}

/// Flags parameters whose relative uncertainty exceeds one.
pub(crate) fn identifiability_warnings(specs: &[ParamSpec], fit: &FitResult) -> Vec<String> {
    let mut out = Vec::new();
    if fit.covariance.is_none() && fit.dof > 0 {
        out.push("covariance unavailable: parameters are not identifiable from these data".into());
    }
    for (i, s) in specs.iter().enumerate() {
        if s.fixed {
            continue;
        }
        let (p, e) = (fit.params[i], fit.stderr[i]);
        if e.is_finite() && p != 0.0 && e > p.abs() {
            out.push(format!("{} poorly constrained: {p:.4e} ± {e:.4e}", s.name));
        }
    }
    out
}

/// Per-entry resonance frequency and linewidth, fitting traces where needed.
pub(crate) struct EntryResonance {
    pub control: f64,
    pub f_r: f64,
    pub kappa_tot: Option<f64>,
    pub kappa_tot_stderr: Option<f64>,
}

pub(crate) fn resolve_entries(m: &SweepManifest) -> Result<(Vec<EntryResonance>, Vec<String>)> {
    let background = m.device.background();
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(m.entries.len());
    for (i, e) in m.entries.iter().enumerate() {
        let r = match &e.data {
            SweepData::Extracted(x) => EntryResonance {
                control: e.control,
                f_r: x.f_r,
                kappa_tot: x.kappa_tot,
                kappa_tot_stderr: x.kappa_tot_stderr,
            },
            SweepData::Trace(t) => {
                let tf = fit_trace_with(t, &background)?;
                if !tf.result.fit.converged {
                    warnings.push(format!("trace fit of entry {i} did not converge"));
                }
                let (f_r, _) = tf.result.param("f_r").expect("trace fit has f_r");
                let (k, k_err) = tf.result.param("kappa_tot").expect("trace fit has kappa_tot");
                EntryResonance {
                    control: e.control,
                    f_r,
                    kappa_tot: Some(k),
                    kappa_tot_stderr: Some(k_err).filter(|v| v.is_finite()),
                }
            }
        };
        if !(r.f_r.is_finite() && r.f_r > 0.0) {
            return Err(Error::invalid(format!("entry {i}: resonance frequency {}", r.f_r)));
        }
        out.push(r);
    }
    Ok((out, warnings))
}

/// Log-spaced points spanning the range of strictly positive `x`.
pub(crate) fn dense_log_grid(x: &[f64], n: usize) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Evenly spaced points spanning the range of `x`.
pub(crate) fn dense_grid(x: &[f64], n: usize) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

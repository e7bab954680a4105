use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    dense_grid, fit_scaled, identifiability_warnings, names_units, rejected, resolve_entries,
    Coord, FitCurve, ParamSpec, PipelineFit, PipelineKind, SweepKind, SweepManifest,
};
use crate::error::{Error, Result};
use crate::fitcore::FitResult;
use crate::physmodels::{
    kappa_eff, photon_number, thermal_tls_shift, two_tone_shift, CalibrationParams,
    CavitySystemParams, TwoToneParams, PUMP_LINE_GAIN_DB,
};

/// Treatment of pump heating, modelled as a bath temperature T₀ + η·n̄(Δ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeatingMode {
    /// η fixed at 0.
    #[default]
    Off,
    /// η fitted together with 1/Q_TLS and Ω₀.
    Joint,
    /// 1/Q_TLS and Ω₀ fitted without heating, then η fitted alone.
    TwoStage,
}

/// Resonator seen through the cavity, with γ_r set so that the loaded
/// linewidth equals `kappa_tot` (Hz).
pub(crate) fn device_cavity(m: &SweepManifest, f_r: f64, kappa_tot: f64) -> Result<CavitySystemParams> {
    let mut cav = CavitySystemParams {
        f_c: m.device.cavity_freq,
        f_r,
        g_over_2pi: m.device.coupling()?,
        kappa_over_2pi: m.device.cavity_kappa,
        gamma_r_over_2pi: 0.0,
        gamma_c_over_2pi: 0.0,
    };
    let k_eff = kappa_eff(&cav)? / (2.0 * PI);
    let gamma = kappa_tot - 2.0 * k_eff;
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!(
            "linewidth {kappa_tot} Hz is below the coupling-limited 2 kappa_eff = {} Hz",
            2.0 * k_eff
        )));
    }
    cav.gamma_r_over_2pi = gamma;
    Ok(cav)
}

/// Photon number from a tone detuned by `delta` Hz from the resonance.
pub(crate) fn photon_number_at(
    cav: &CavitySystemParams,
    cal: &CalibrationParams,
    p_dbm: f64,
    delta: f64,
) -> Result<f64> {
    photon_number(cav, cal, p_dbm, 2.0 * PI * (cav.f_r + delta))
}

/// Pump photon number at each entry's detuning, through the pump line.
pub fn pump_photon_numbers(m: &SweepManifest) -> Result<Vec<f64>> {
    let (cav, cal, p_dbm) = pump_context(m)?;
    m.entries.iter().map(|e| photon_number_at(&cav, &cal, p_dbm, e.control)).collect()
}

fn pump_context(m: &SweepManifest) -> Result<(CavitySystemParams, CalibrationParams, f64)> {
    let pump = m.pump.ok_or_else(|| Error::invalid("pump sweep needs a pump setup"))?;
    let cav = device_cavity(m, pump.baseline_f_r, pump.baseline_kappa_tot)?;
    let cal = CalibrationParams { gain_in_db: PUMP_LINE_GAIN_DB, ..m.calibration };
    Ok((cav, cal, pump.power_dbm))
}

struct PumpModel {
    f_r: f64,
    temperature: f64,
}

impl PumpModel {
    /// Shift per unit 1/Q_TLS; the model is linear in 1/Q_TLS.
    fn shape(&self, omega0: f64, eta: f64, delta: f64, n_bar: f64) -> Result<f64> {
        let p = TwoToneParams {
            f_r: self.f_r,
            inv_q_tls: 1.0,
            omega0_over_2pi: omega0,
            temperature: self.temperature,
            heating_eta: eta,
        };
        let mut s = two_tone_shift(&p, delta, n_bar)?;
        if eta > 0.0 {
            s += thermal_tls_shift(self.f_r, 1.0, self.temperature + eta * n_bar)?
                - thermal_tls_shift(self.f_r, 1.0, self.temperature)?;
        }
        Ok(s)
    }

    fn eval(&self, p: &[f64], delta: &[f64], n_bar: &[f64]) -> Option<Vec<f64>> {
        if !(p[0] >= 0.0 && p[1] > 0.0 && p[2] >= 0.0) {
            return None;
        }
        delta
            .iter()
            .zip(n_bar)
            .map(|(&d, &n)| self.shape(p[1], p[2], d, n).ok().map(|s| p[0] * s))
            .collect()
    }
}

/// Least-squares amplitude and residual sum for y ≈ a·s.
fn amplitude_fit(y: &[f64], s: &[f64]) -> (f64, f64) {
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if !(ss > 0.0) {
        return (0.0, y.iter().map(|v| v * v).sum());
    }
    let a = y.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / ss;
    (a, y.iter().zip(s).map(|(yi, si)| (yi - a * si).powi(2)).sum())
}

/// Fits the pump-detuned shift δf_r(Δ) = f_r(Δ) − f_r(unpumped) with
/// (1/Q_TLS, Ω₀/2π, η).
pub fn fit_pump_sweep(m: &SweepManifest, heating: HeatingMode) -> Result<PipelineFit> {
    m.validate()?;
    if m.kind != SweepKind::Pump {
        return Err(Error::invalid(format!("expected a pump sweep, got {:?}", m.kind)));
    }
    let pump = m.pump.ok_or_else(|| Error::invalid("pump sweep needs a pump setup"))?;
    let (resonances, mut warnings) = resolve_entries(m)?;
    let delta: Vec<f64> = resonances.iter().map(|r| r.control).collect();
    let y: Vec<f64> = resonances.iter().map(|r| r.f_r - pump.baseline_f_r).collect();
    let n_bar = pump_photon_numbers(m)?;
    if delta.len() < 4 {
        return Err(Error::invalid("pump sweep needs at least 4 points"));
    }
    let dmax = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let symmetric = delta
        .iter()
        .all(|d| delta.iter().any(|e| (d + e).abs() <= 1e-6 * dmax));
    if !symmetric {
        warnings.push("detuning grid is not symmetric about the resonance".into());
    }

    let model = PumpModel { f_r: pump.baseline_f_r, temperature: m.temperature };
    let n_max = n_bar.iter().copied().fold(0.0, f64::max);
    // coarse grid over Ω₀ (and η), amplitude solved linearly
    let omegas: Vec<f64> = (0..=100).map(|i| 10f64.powf(1.0 + 6.0 * i as f64 / 100.0)).collect();
    let eta_grid: Vec<f64> = std::iter::once(0.0)
        .chain((0..=24).map(|i| 10f64.powf(-3.0 + 3.5 * i as f64 / 24.0) / n_max))
        .collect();
    let etas = if heating == HeatingMode::Joint { eta_grid.clone() } else { vec![0.0] };
    let mut best = (f64::INFINITY, 1.0, 0.0, 0.0);
    for &om in &omegas {
        for &eta in &etas {
            let s: Option<Vec<f64>> =
                delta.iter().zip(&n_bar).map(|(&d, &n)| model.shape(om, eta, d, n).ok()).collect();
            let Some(s) = s else { continue };
            let (a, sse) = amplitude_fit(&y, &s);
            if a > 0.0 && sse < best.0 {
                best = (sse, om, eta, a);
            }
        }
    }
    let (_, om0, eta0, a0) = best;
    if !(a0 > 0.0) {
        return Err(Error::invalid(
            "pump sweep shows no two-tone shift: 1/Q_TLS and Omega0 are unidentifiable",
        ));
    }
    let eta_start = if eta0 > 0.0 { eta0 } else { 1e-3 / n_max };
    let specs = |eta_init: f64, free: [bool; 3], inv_q: f64, om: f64| {
        [
            ParamSpec::new("inv_q_tls", "1", inv_q, Coord::Log).fixed(!free[0]),
            ParamSpec::new("omega0_over_2pi", "Hz", om, Coord::Log).fixed(!free[1]),
            ParamSpec::new("heating_eta", "K", eta_init, Coord::Affine(eta_init.max(eta_start)))
                .bounded(0.0, f64::INFINITY)
                .fixed(!free[2]),
        ]
    };
    let npts = y.len();
    let residual = |p: &[f64]| match model.eval(p, &delta, &n_bar) {
        Some(v) => v.iter().zip(&y).map(|(a, b)| a - b).collect(),
        None => rejected(npts),
    };

    let (used, fit) = match heating {
        HeatingMode::Off => {
            let s = specs(0.0, [true, true, false], a0, om0);
            let fit = fit_scaled(&s, residual, None)?;
            (s, fit)
        }
        HeatingMode::Joint => {
            let s = specs(eta_start, [true, true, true], a0, om0);
            let fit = fit_scaled(&s, residual, None)?;
            (s, fit)
        }
        HeatingMode::TwoStage => {
            let s1 = specs(0.0, [true, true, false], a0, om0);
            let first = fit_scaled(&s1, &residual, None)?;
            let (q, om) = (first.params[0], first.params[1]);
            let sse = |eta: f64| {
                model
                    .eval(&[q, om, eta], &delta, &n_bar)
                    .map(|v| v.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                    .unwrap_or(f64::INFINITY)
            };
            let eta1 = eta_grid
                .iter()
                .copied()
                .filter(|&e| e > 0.0)
                .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
                .unwrap_or(eta_start);
            let s2 = specs(eta1, [false, false, true], q, om);
            let second = fit_scaled(&s2, &residual, None)?;
            (s2, merge_stages(&first, second))
        }
    };
    let p = fit.params.clone();

    let model_x = dense_grid(&delta, 801);
    let (cav, cal, p_dbm) = pump_context(m)?;
    let dense_n: Vec<f64> = model_x
        .iter()
        .map(|&d| photon_number_at(&cav, &cal, p_dbm, d))
        .collect::<Result<_>>()?;
    let curve = FitCurve {
        x_label: "pump detuning (Hz)".into(),
        y_label: "frequency shift (Hz)".into(),
        log_x: false,
        x: delta.clone(),
        y: y.clone(),
        model: model.eval(&p, &delta, &n_bar).unwrap_or_else(|| vec![f64::NAN; npts]),
        model_y: model.eval(&p, &model_x, &dense_n).unwrap_or_else(|| vec![f64::NAN; model_x.len()]),
        model_x,
    };
    warnings.extend(identifiability_warnings(&used, &fit));
    if fit.stderr[1].is_nan() || fit.stderr[1] > p[1] {
        warnings.push("Omega0 is unidentifiable from these data".into());
    }
    let mut derived = BTreeMap::new();
    derived.insert("n_bar_max".to_string(), n_max);
    derived.insert("q_tls".to_string(), 1.0 / p[0]);
    let (names, units) = names_units(&used);
    Ok(PipelineFit { kind: PipelineKind::Pump, names, units, fit, warnings, curve, derived })
}

/// Stage-two result with the stage-one estimates and uncertainties of
/// 1/Q_TLS and Ω₀ carried over (block-diagonal covariance).
fn merge_stages(first: &FitResult, mut second: FitResult) -> FitResult {
    for k in 0..2 {
        second.stderr[k] = first.stderr[k];
    }
    match (&first.covariance, second.covariance.as_mut()) {
        (Some(c1), Some(c2)) => {
            for r in 0..2 {
                for c in 0..2 {
                    c2[r][c] = c1[r][c];
                }
            }
        }
        _ => second.covariance = None,
    }
    second.converged = first.converged && second.converged;
    second.n_iterations += first.n_iterations;
    second
}

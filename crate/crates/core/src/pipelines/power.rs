use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::pump::device_cavity;
use super::{
    dense_log_grid, fit_scaled, identifiability_warnings, names_units, rejected, resolve_entries,
    Coord, FitCurve, ParamSpec, PipelineFit, PipelineKind, SweepKind, SweepManifest,
};
use crate::error::{Error, Result};
use crate::physmodels::constants::{H, K_B};
use crate::physmodels::{photon_number, tls_power_loss, TlsLossParams};

/// Minimum number of power points.
const MIN_POINTS: usize = 6;
/// Minimum span of photon numbers, in decades.
const MIN_DECADES: f64 = 3.0;

/// Fits the internal loss 1/Q_i(n̄) of a power sweep with
/// (1/Q_TLS, n_c, φ, 1/Q_r).
///
/// Each point's internal loss is (κ_tot − 2κ_eff)/f_r with κ_eff from the
/// device coupling, and its photon number follows from the source power on
/// resonance. Points are weighted by the inverse variance of κ_tot when every
/// point carries one, uniformly otherwise.
pub fn fit_power_sweep(m: &SweepManifest) -> Result<PipelineFit> {
    m.validate()?;
    if m.kind != SweepKind::Power {
        return Err(Error::invalid(format!("expected a power sweep, got {:?}", m.kind)));
    }
    let (resonances, mut warnings) = resolve_entries(m)?;
    let mut n_bar = Vec::with_capacity(resonances.len());
    let mut y = Vec::with_capacity(resonances.len());
    let mut sigma = Vec::with_capacity(resonances.len());
    for (i, r) in resonances.iter().enumerate() {
        let kappa_tot = r
            .kappa_tot
            .ok_or_else(|| Error::invalid(format!("entry {i} has no linewidth")))?;
        let cav = device_cavity(m, r.f_r, kappa_tot)?;
        n_bar.push(photon_number(&cav, &m.calibration, r.control, 2.0 * PI * r.f_r)?);
        y.push(cav.gamma_r_over_2pi / r.f_r);
        sigma.push(r.kappa_tot_stderr.map(|s| s / r.f_r));
    }
    let weights: Option<Vec<f64>> = if sigma.iter().all(|s| s.is_some_and(|v| v > 0.0)) {
        Some(sigma.iter().map(|s| 1.0 / s.unwrap().powi(2)).collect())
    } else {
        if sigma.iter().any(|s| s.is_some()) {
            warnings.push("some points lack linewidth uncertainties; using uniform weights".into());
        }
        None
    };

    let mut f_sorted: Vec<f64> = resonances.iter().map(|r| r.f_r).collect();
    f_sorted.sort_by(f64::total_cmp);
    let f_r = f_sorted[f_sorted.len() / 2];
    let mut fit = fit_power_curve(&n_bar, &y, weights, f_r, m.temperature)?;
    warnings.append(&mut fit.warnings);
    fit.warnings = warnings;
    Ok(fit)
}

/// Fits the power-saturation model to internal losses `y` at photon numbers `n_bar`, at
/// resonance frequency `f_r` (Hz) and bath `temperature` (K). `weights` are
/// per-point inverse variances; `None` weighs uniformly.
pub fn fit_power_curve(
    n_bar: &[f64],
    y: &[f64],
    weights: Option<Vec<f64>>,
    f_r: f64,
    temperature: f64,
) -> Result<PipelineFit> {
    if n_bar.len() != y.len() || weights.as_ref().is_some_and(|w| w.len() != y.len()) {
        return Err(Error::invalid("photon numbers, losses and weights differ in length"));
    }
    if y.len() < MIN_POINTS {
        return Err(Error::invalid(format!(
            "power sweep has {} points, at least {MIN_POINTS} are needed",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite loss value"));
    }
    let lo = n_bar.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = n_bar.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < MIN_DECADES {
        return Err(Error::invalid(format!(
            "photon numbers span {:.2} decades, at least {MIN_DECADES} are needed",
            (hi / lo).log10()
        )));
    }
    if !(f_r > 0.0 && temperature > 0.0) {
        return Err(Error::invalid("f_r and temperature must be > 0"));
    }
    let thermal = (H * f_r / (2.0 * K_B * temperature)).tanh();

    // grid over (n_c, φ); the model is linear in (1/Q_TLS, 1/Q_r)
    let w = weights.clone().unwrap_or_else(|| vec![1.0; y.len()]);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0, 0.0);
    for i in 0..=60 {
        let n_c = lo * 10f64.powf(-2.0 + ((hi / lo).log10() + 4.0) * i as f64 / 60.0);
        for k in 1..=20 {
            let phi = 0.1 * k as f64;
            let t: Vec<f64> =
                n_bar.iter().map(|n| thermal / (1.0 + (n / n_c).powf(phi)).sqrt()).collect();
            if let Some((a, b, sse)) = linear_two(&t, y, &w) {
                if a > 0.0 && b >= 0.0 && sse < best.0 {
                    best = (sse, a, n_c, phi, b);
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::invalid("power sweep shows no saturable loss"));
    }
    let (_, a0, nc0, phi0, b0) = best;
    let b0 = b0.max(1e-3 * a0);
    let mut specs = [
        ParamSpec::new("inv_q_tls", "1", a0, Coord::Log),
        ParamSpec::new("n_c", "photons", nc0, Coord::Log),
        ParamSpec::new("phi", "1", phi0, Coord::Affine(0.1)).bounded(0.01, 2.0),
        ParamSpec::new("inv_q_r", "1", b0, Coord::Affine(b0)).bounded(0.0, f64::INFINITY),
    ];
    let eval = |p: &[f64], n: &[f64]| -> Option<Vec<f64>> {
        let lp = TlsLossParams {
            inv_q_tls: p[0],
            n_c: p[1],
            phi: p[2],
            inv_q_r: p[3],
            f_r,
            temperature,
        };
        n.iter().map(|&x| tls_power_loss(&lp, x).ok()).collect()
    };
    let npts = y.len();
    let residual = |p: &[f64]| match eval(p, n_bar) {
        Some(v) => v.iter().zip(y).map(|(a, b)| a - b).collect(),
        None => rejected(npts),
    };
    let mut fit = fit_scaled(&specs, residual, weights.clone())?;
    let mut warnings = Vec::new();
    // the bound transform crawls when the optimum sits on 1/Q_r = 0; pin it there
    if !fit.converged && fit.params[3] < 1e-6 * fit.params[0] {
        let p = &fit.params;
        specs[0].init = p[0];
        specs[1].init = p[1];
        specs[2].init = p[2];
        specs[3] = ParamSpec::new("inv_q_r", "1", 0.0, Coord::Affine(1e-3 * p[0])).fixed(true);
        fit = fit_scaled(&specs, residual, weights)?;
        warnings.push("inv_q_r reached its lower bound 0 and was held there".to_string());
    }
    let p = fit.params.clone();
    warnings.extend(identifiability_warnings(&specs, &fit));

    let model_x = dense_log_grid(n_bar, 400);
    let curve = FitCurve {
        x_label: "photon number".into(),
        y_label: "1/Q_i".into(),
        log_x: true,
        x: n_bar.to_vec(),
        y: y.to_vec(),
        model: eval(&p, n_bar).unwrap_or_else(|| vec![f64::NAN; npts]),
        model_y: eval(&p, &model_x).unwrap_or_else(|| vec![f64::NAN; model_x.len()]),
        model_x,
    };
    let mut derived = BTreeMap::new();
    derived.insert("f_r".to_string(), f_r);
    derived.insert("q_tls".to_string(), 1.0 / p[0]);
    let (names, units) = names_units(&specs);
    Ok(PipelineFit { kind: PipelineKind::Power, names, units, fit, warnings, curve, derived })
}

/// Weighted least squares for y ≈ a·t + b; returns (a, b, weighted SSE).
fn linear_two(t: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64, f64)> {
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&ti, &yi), &wi) in t.iter().zip(y).zip(w) {
        sw += wi;
        st += wi * ti;
        sy += wi * yi;
        stt += wi * ti * ti;
        sty += wi * ti * yi;
    }
    let det = sw * stt - st * st;
    if !(det.abs() > 1e-300) {
        return None;
    }
    let a = (sw * sty - st * sy) / det;
    let b = (stt * sy - st * sty) / det;
    let sse = t.iter().zip(y).zip(w).map(|((&ti, &yi), &wi)| wi * (yi - a * ti - b).powi(2)).sum();
    Some((a, b, sse))
}

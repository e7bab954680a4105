use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    dense_grid, fit_scaled, identifiability_warnings, names_units, rejected, ComplexTrace, Coord,
    FitCurve, ParamSpec, PipelineFit, PipelineKind, TraceBackground, MIN_TRACE_POINTS,
};
use crate::error::{Error, Result};

/// Starting point for a trace fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceInit {
    pub f_r: f64,
    pub kappa_tot: f64,
    pub kappa_eff: f64,
    pub background: TraceBackground,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFit {
    /// Parameters: f_r, kappa_tot, kappa_eff (Hz), amplitude, phase at the
    /// grid centre (rad), electrical delay (s).
    pub result: PipelineFit,
    pub background: TraceBackground,
    /// Q_i = f_r/κ_tot, valid when κ_tot is dominated by internal loss.
    pub q_i: f64,
}

/// Trace model: background·(iκ_c/(f − f_c) − iκ_eff/(f − f_r + iκ_tot/2)),
/// all rates cyclic (Hz).
pub fn trace_model(
    frequencies: &[f64],
    f_r: f64,
    kappa_tot: f64,
    kappa_eff: f64,
    bg: &TraceBackground,
) -> Vec<Complex64> {
    frequencies
        .iter()
        .map(|&f| {
            let gain = Complex64::from_polar(
                bg.amplitude_scale,
                bg.phase_offset - 2.0 * PI * f * bg.electrical_delay,
            );
            gain * response(f, f_r, kappa_tot, kappa_eff, bg)
        })
        .collect()
}

fn response(f: f64, f_r: f64, kappa_tot: f64, kappa_eff: f64, bg: &TraceBackground) -> Complex64 {
    let i = Complex64::i();
    i * bg.cavity_term_kappa / (f - bg.cavity_detuning_ref)
        - i * kappa_eff / Complex64::new(f - f_r, 0.5 * kappa_tot)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            offset -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}

/// Peak position and second-moment width of the half-maximum region of `w`.
fn peak_and_width(f: &[f64], w: &[f64]) -> (usize, f64) {
    let peak = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    let half = 0.5 * w[peak];
    let mut lo = peak;
    while lo > 0 && w[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < w.len() && w[hi + 1] >= half {
        hi += 1;
    }
    let region = &f[lo..=hi];
    let mean = region.iter().sum::<f64>() / region.len() as f64;
    let var = region.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / region.len() as f64;
    // for a Lorentzian magnitude the half-maximum block has std κ/2
    let spacing = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
    (peak, (2.0 * var.sqrt()).max(2.0 * spacing))
}

/// Initial guess for [`fit_trace`] using `hint` for the cavity term.
pub fn estimate_trace_init(trace: &ComplexTrace, hint: &TraceBackground) -> Result<TraceInit> {
    trace.validate()?;
    hint.validate()?;
    let n = trace.len();
    if n < 8 {
        return Err(Error::invalid(format!("{n} points are too few to locate a resonance")));
    }
    let f = &trace.frequencies;
    let mag: Vec<f64> = trace.s21.iter().map(|s| s.norm()).collect();
    let med = median(&mag);
    let dev: Vec<f64> = mag.iter().map(|m| (m - med).abs()).collect();
    let diffs: Vec<f64> = mag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let floor = 1.4826 * median(&diffs) / 2f64.sqrt();
    let dev_max = dev.iter().copied().fold(0.0, f64::max);
    if !(dev_max > 5.0 * floor) || dev_max <= 1e-12 * med {
        return Err(Error::NoResonance(format!(
            "largest |S21| deviation {dev_max:.3e} is within 5x the noise floor {floor:.3e}"
        )));
    }
    let (i0, width) = peak_and_width(f, &dev);

    // delay: median of local phase slopes; resonance features are localized
    let phase = unwrap(&trace.s21.iter().map(|s| s.arg()).collect::<Vec<_>>());
    let slopes: Vec<f64> =
        (1..n).map(|i| (phase[i] - phase[i - 1]) / (f[i] - f[i - 1])).collect();
    let delay = -median(&slopes) / (2.0 * PI);

    let undelayed: Vec<Complex64> = f
        .iter()
        .zip(&trace.s21)
        .map(|(&fi, s)| s * Complex64::from_polar(1.0, 2.0 * PI * fi * delay))
        .collect();
    let cavity: Vec<Complex64> = f
        .iter()
        .map(|&fi| Complex64::i() * hint.cavity_term_kappa / (fi - hint.cavity_detuning_ref))
        .collect();

    // z ≈ G·c(f) + H/(f − f0 + iκ/2) is linear in (G, H); refine (f0, κ) on a grid
    let mut best: Option<(f64, f64, f64, Complex64, Complex64)> = None;
    for a in -8..=8 {
        let f_try = f[i0] + 0.25 * a as f64 * width;
        for b in -8..=8 {
            let k_try = width * 2f64.powf(0.25 * b as f64);
            if let Some((g, h, sse)) = linear_background(f, &undelayed, &cavity, f_try, k_try) {
                if best.is_none_or(|bst| sse < bst.0) {
                    best = Some((sse, f_try, k_try, g, h));
                }
            }
        }
    }
    let (_, f_r, kappa, gain, h) =
        best.ok_or_else(|| Error::NoResonance("background and resonance are degenerate".into()))?;
    if !(gain.norm() > 0.0 && gain.norm().is_finite()) {
        return Err(Error::NoResonance("background level is zero".into()));
    }
    // H = −iG·κ_eff
    let kappa_eff = (h / (-Complex64::i() * gain)).re;
    let kappa_eff = if kappa_eff != 0.0 { kappa_eff } else { 1e-3 * kappa };

    Ok(TraceInit {
        f_r,
        kappa_tot: kappa,
        kappa_eff,
        background: TraceBackground {
            amplitude_scale: gain.norm(),
            phase_offset: gain.arg(),
            electrical_delay: delay,
            ..*hint
        },
    })
}

/// Complex least squares for z ≈ G·c + H·ℓ with ℓ = 1/(f − f0 + iκ/2).
fn linear_background(
    f: &[f64],
    z: &[Complex64],
    c: &[Complex64],
    f0: f64,
    kappa: f64,
) -> Option<(Complex64, Complex64, f64)> {
    let l: Vec<Complex64> = f.iter().map(|&fi| 1.0 / Complex64::new(fi - f0, 0.5 * kappa)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let (mut cc, mut cl, mut ll, mut cz, mut lz) = (0.0, zero, 0.0, zero, zero);
    for i in 0..f.len() {
        cc += c[i].norm_sqr();
        ll += l[i].norm_sqr();
        cl += c[i].conj() * l[i];
        cz += c[i].conj() * z[i];
        lz += l[i].conj() * z[i];
    }
    let det = cc * ll - cl.norm_sqr();
    if !(det > 1e-12 * cc * ll) {
        return None;
    }
    let g = (ll * cz - cl * lz) / det;
    let h = (cc * lz - cl.conj() * cz) / det;
    let sse = (0..f.len()).map(|i| (z[i] - g * c[i] - h * l[i]).norm_sqr()).sum();
    Some((g, h, sse))
}

/// Fits a trace with the default cavity term (κ_c/2π = 1 MHz, f_c = 8 GHz).
pub fn fit_trace(trace: &ComplexTrace) -> Result<TraceFit> {
    fit_trace_with(trace, &TraceBackground::default())
}

/// Fits f_r, κ_tot, κ_eff and the background gain, phase and delay. The
/// cavity term of `hint` is held fixed; it only sets the scale of the
/// amplitude and κ_eff, never f_r or κ_tot.
pub fn fit_trace_with(trace: &ComplexTrace, hint: &TraceBackground) -> Result<TraceFit> {
    trace.validate()?;
    if trace.len() < MIN_TRACE_POINTS {
        return Err(Error::invalid(format!(
            "trace has {} points, at least {MIN_TRACE_POINTS} are needed",
            trace.len()
        )));
    }
    let init = estimate_trace_init(trace, hint)?;
    let f = &trace.frequencies;
    let n = f.len();
    let f_ref = 0.5 * (f[0] + f[n - 1]);
    let span = f[n - 1] - f[0];
    let bg = init.background;
    let phase_at_ref = wrap(bg.phase_offset - 2.0 * PI * f_ref * bg.electrical_delay);

    let specs = [
        ParamSpec::new("f_r", "Hz", init.f_r, Coord::Affine(init.kappa_tot)).bounded(f[0], f[n - 1]),
        ParamSpec::new("kappa_tot", "Hz", init.kappa_tot, Coord::Log),
        ParamSpec::new("kappa_eff", "Hz", init.kappa_eff, Coord::Affine(init.kappa_eff.abs())),
        ParamSpec::new("amplitude", "1", bg.amplitude_scale, Coord::Log),
        ParamSpec::new("phase", "rad", phase_at_ref, Coord::Affine(1.0)),
        ParamSpec::new("delay", "s", bg.electrical_delay, Coord::Affine(1.0 / (2.0 * PI * span))),
    ];
    let background_at = |p: &[f64]| TraceBackground {
        amplitude_scale: p[3],
        phase_offset: p[4] + 2.0 * PI * f_ref * p[5],
        electrical_delay: p[5],
        ..*hint
    };
    // evaluate the phase relative to f_ref so that phase and delay decouple
    let model = |p: &[f64], freqs: &[f64]| -> Vec<Complex64> {
        let b = background_at(p);
        freqs
            .iter()
            .map(|&fi| {
                let gain = Complex64::from_polar(p[3], p[4] - 2.0 * PI * (fi - f_ref) * p[5]);
                gain * response(fi, p[0], p[1], p[2], &b)
            })
            .collect()
    };
    let residual = |p: &[f64]| -> Vec<f64> {
        if !(p[1] > 0.0 && p[3] > 0.0) {
            return rejected(2 * n);
        }
        let m = model(p, f);
        let mut r = Vec::with_capacity(2 * n);
        for (mi, di) in m.iter().zip(&trace.s21) {
            r.push(mi.re - di.re);
            r.push(mi.im - di.im);
        }
        r
    };
    let fit = fit_scaled(&specs, residual, None)?;
    let p = fit.params.clone();
    let mut background = background_at(&p);
    background.phase_offset = wrap(background.phase_offset);
    let q_i = p[0] / p[1];

    let model_x = dense_grid(f, 1001);
    let curve = FitCurve {
        x_label: "frequency (Hz)".into(),
        y_label: "|S21|".into(),
        log_x: false,
        x: f.clone(),
        y: trace.s21.iter().map(|s| s.norm()).collect(),
        model: model(&p, f).iter().map(|s| s.norm()).collect(),
        model_y: model(&p, &model_x).iter().map(|s| s.norm()).collect(),
        model_x,
    };
    let mut warnings = identifiability_warnings(&specs, &fit);
    if !fit.converged {
        warnings.push(format!("trace fit stopped: {:?}", fit.convergence_reason));
    }
    let mut derived = BTreeMap::new();
    derived.insert("q_i".to_string(), q_i);
    derived.insert("phase_offset".to_string(), background.phase_offset);
    let (names, units) = names_units(&specs);
    Ok(TraceFit {
        result: PipelineFit { kind: PipelineKind::Trace, names, units, fit, warnings, curve, derived },
        background,
        q_i,
    })
}

fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    if w > PI { w - 2.0 * PI } else { w }
}

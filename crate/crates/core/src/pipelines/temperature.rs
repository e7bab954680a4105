use std::collections::BTreeMap;

use super::{
    dense_log_grid, fit_scaled, identifiability_warnings, names_units, resolve_entries, Coord,
    FitCurve, ParamSpec, PipelineFit, PipelineKind, SweepKind, SweepManifest,
};
use crate::error::{Error, Result};
use crate::physmodels::{total_thermal_shift, RegimeWarning, SuperconductorParams};

/// The TLS and quasiparticle terms separate only over this range (K).
const REQUIRED_SPAN: (f64, f64) = (0.010, 1.5);

/// Unit-amplitude TLS and kinetic-inductance shapes relative to `t_ref`.
struct Shapes {
    f_r: f64,
    sc: SuperconductorParams,
    tls_ref: f64,
    kin_ref: f64,
}

impl Shapes {
    fn new(f_r: f64, t_ref: f64, sc: &SuperconductorParams) -> Result<Self> {
        let mut s = Shapes { f_r, sc: *sc, tls_ref: 0.0, kin_ref: 0.0 };
        let (a, b, _) = s.at(t_ref)?;
        s.tls_ref = a;
        s.kin_ref = b;
        Ok(s)
    }

    /// (TLS shift per unit 1/Q_TLS, kinetic shift per unit α, regime warning)
    fn at(&self, t: f64) -> Result<(f64, f64, Option<RegimeWarning>)> {
        let tls = total_thermal_shift(self.f_r, 1.0, &SuperconductorParams { alpha: 0.0, ..self.sc }, t)?;
        let both = total_thermal_shift(self.f_r, 1.0, &SuperconductorParams { alpha: 1.0, ..self.sc }, t)?;
        Ok((tls.value - self.tls_ref, both.value - tls.value - self.kin_ref, both.warning))
    }
}

/// Fits the temperature dependence of the resonance with (1/Q_TLS, α),
/// all other film constants taken from `sc`. Shifts are measured from the
/// coldest point of the sweep.
pub fn fit_temperature_sweep(m: &SweepManifest, sc: &SuperconductorParams) -> Result<PipelineFit> {
    m.validate()?;
    sc.validate()?;
    if m.kind != SweepKind::Temperature {
        return Err(Error::invalid(format!("expected a temperature sweep, got {:?}", m.kind)));
    }
    let (resonances, mut warnings) = resolve_entries(m)?;
    if resonances.len() < 3 {
        return Err(Error::invalid("temperature sweep needs at least 3 points"));
    }
    let temps: Vec<f64> = resonances.iter().map(|r| r.control).collect();
    if temps.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("temperatures must be > 0"));
    }
    let coldest = (0..temps.len()).min_by(|&a, &b| temps[a].total_cmp(&temps[b])).unwrap();
    let t_ref = temps[coldest];
    let f_ref = resonances[coldest].f_r;
    let t_max = temps.iter().copied().fold(0.0, f64::max);
    if t_ref > 2.0 * REQUIRED_SPAN.0 || t_max < REQUIRED_SPAN.1 {
        warnings.push(format!(
            "temperatures span [{t_ref}, {t_max}] K; the TLS and quasiparticle terms separate \
             reliably only over [{}, {}] K",
            REQUIRED_SPAN.0, REQUIRED_SPAN.1
        ));
    }
    let y: Vec<f64> = resonances.iter().map(|r| r.f_r - f_ref).collect();

    let shapes = Shapes::new(f_ref, t_ref, sc)?;
    let mut tls = Vec::with_capacity(temps.len());
    let mut kin = Vec::with_capacity(temps.len());
    let mut regime = false;
    for &t in &temps {
        let (a, b, w) = shapes.at(t)?;
        tls.push(a);
        kin.push(b);
        regime |= w.is_some();
    }
    if regime {
        warnings.push("large-gap approximation violated at some temperatures".into());
    }

    // linear least squares for the starting point
    let (saa, sab, sbb) = tls.iter().zip(&kin).fold((0.0, 0.0, 0.0), |(aa, ab, bb), (a, b)| {
        (aa + a * a, ab + a * b, bb + b * b)
    });
    let (say, sby) = tls.iter().zip(&kin).zip(&y).fold((0.0, 0.0), |(ay, by), ((a, b), yi)| {
        (ay + a * yi, by + b * yi)
    });
    let det = saa * sbb - sab * sab;
    let (q0, alpha0) = if det.abs() > 1e-12 * saa * sbb && det != 0.0 {
        ((sbb * say - sab * sby) / det, (saa * sby - sab * say) / det)
    } else if saa > 0.0 {
        (say / saa, 0.0)
    } else {
        return Err(Error::invalid("temperature sweep has no thermal signature"));
    };
    let specs = [
        ParamSpec::new("inv_q_tls", "1", q0, Coord::Affine(q0.abs().max(1e-9))),
        ParamSpec::new("alpha", "1", alpha0, Coord::Affine(alpha0.abs().max(1e-3))),
    ];
    let residual = |p: &[f64]| -> Vec<f64> {
        tls.iter().zip(&kin).zip(&y).map(|((a, b), yi)| p[0] * a + p[1] * b - yi).collect()
    };
    let fit = fit_scaled(&specs, residual, None)?;
    let p = fit.params.clone();
    warnings.extend(identifiability_warnings(&specs, &fit));

    let model_x = dense_log_grid(&temps, 300);
    let model_y = model_x
        .iter()
        .map(|&t| shapes.at(t).map(|(a, b, _)| p[0] * a + p[1] * b))
        .collect::<Result<Vec<_>>>()?;
    let curve = FitCurve {
        x_label: "temperature (K)".into(),
        y_label: "frequency shift (Hz)".into(),
        log_x: true,
        x: temps.clone(),
        y: y.clone(),
        model: tls.iter().zip(&kin).map(|(a, b)| p[0] * a + p[1] * b).collect(),
        model_x,
        model_y,
    };
    let mut derived = BTreeMap::new();
    derived.insert("f_r".to_string(), f_ref);
    derived.insert("reference_temperature".to_string(), t_ref);
    let (names, units) = names_units(&specs);
    Ok(PipelineFit { kind: PipelineKind::Temperature, names, units, fit, warnings, curve, derived })
}

use resloss::physmodels::{CalibrationParams, CavitySystemParams};
use resloss::pipelines::{DeviceIdentity, SynthDevice};

/// Res-2-like cavity system with the dressed resonance at `f_dressed`.
pub fn res2_cavity(f_dressed: f64, kappa_tot: f64) -> CavitySystemParams {
    let (f_c, g, kappa) = (8e9, 30e6, 1e6);
    let mut f = f_dressed;
    for _ in 0..50 {
        f = f_dressed - g * g / (f - f_c);
    }
    let k_eff = g * g * kappa / (f - f_c).powi(2);
    CavitySystemParams {
        f_c,
        f_r: f,
        g_over_2pi: g,
        kappa_over_2pi: kappa,
        gamma_r_over_2pi: kappa_tot - 2.0 * k_eff,
        gamma_c_over_2pi: 0.0,
    }
}

pub fn res2_device() -> SynthDevice {
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

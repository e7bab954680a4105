mod common;

use resloss::physmodels::SuperconductorParams;
use resloss::pipelines::{
    fit_power_sweep, fit_pump_sweep, fit_temperature_sweep, pump_photon_numbers, synth_sweep,
    HeatingMode, PipelineFit, PowerTruth, PumpTruth, SweepData, SweepGrid, SweepTruth,
    SynthOptions, TemperatureTruth,
};

use common::devices::res2_device;

fn power_truth() -> SweepTruth {
    SweepTruth::Power(PowerTruth {
        device: res2_device(),
        inv_q_tls: 2e-5,
        n_c: 10.0,
        phi: 0.44,
        inv_q_r: 2e-6,
    })
}

fn pump_truth(eta: f64) -> SweepTruth {
    SweepTruth::Pump(PumpTruth {
        device: res2_device(),
        inv_q_tls: 2e-5,
        omega0_over_2pi: 16.2e3,
        heating_eta: eta,
        gamma_r: 50e3,
        pump_power_dbm: -50.0,
    })
}

fn temperature_truth(alpha: f64) -> SweepTruth {
    SweepTruth::Temperature(TemperatureTruth {
        device: res2_device(),
        inv_q_tls: 2e-5,
        superconductor: SuperconductorParams::niobium_reference(alpha),
        gamma_r: 50e3,
    })
}

fn within(fit: &PipelineFit, name: &str, truth: f64, k: f64) -> bool {
    let (v, e) = fit.param(name).unwrap();
    (v - truth).abs() <= k * e
}

fn pump_grid() -> SweepGrid {
    SweepGrid::linear(-2e6, 2e6, 81)
}

#[test]
fn power_sweep_recovery_rate() {
    let grid = SweepGrid::log(1e-2, 1e6, 25);
    let mut hits = 0;
    for seed in 0..100 {
        let m = synth_sweep(&power_truth(), &grid, 0.02, seed, &SynthOptions::default()).unwrap();
        let fit = fit_power_sweep(&m).unwrap();
        let ok = within(&fit, "inv_q_tls", 2e-5, 3.0)
            && within(&fit, "n_c", 10.0, 3.0)
            && within(&fit, "phi", 0.44, 3.0)
            && within(&fit, "inv_q_r", 2e-6, 3.0);
        if !ok {
            println!("seed {seed}: {:?} ± {:?}", fit.fit.params, fit.fit.stderr);
        }
        hits += ok as usize;
    }
    println!("power recovery {hits}/100");
    assert!(hits >= 95);
}

#[test]
fn noiseless_power_sweep_fits_exactly() {
    let grid = SweepGrid::log(1e-2, 1e6, 25);
    let m = synth_sweep(&power_truth(), &grid, 0.0, 1, &SynthOptions::default()).unwrap();
    let fit = fit_power_sweep(&m).unwrap();
    assert!(fit.fit.reduced_chi2() < 1e-10, "{}", fit.fit.reduced_chi2());
    // noiseless 1/Q_i falls monotonically with photon number
    assert!(fit.curve.y.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn power_sweep_needs_dynamic_range() {
    let m = synth_sweep(&power_truth(), &SweepGrid::log(1.0, 100.0, 10), 0.02, 1, &SynthOptions::default())
        .unwrap();
    assert!(fit_power_sweep(&m).unwrap_err().is_validation());
    let m = synth_sweep(&power_truth(), &SweepGrid::log(1e-2, 1e6, 5), 0.02, 1, &SynthOptions::default())
        .unwrap();
    assert!(fit_power_sweep(&m).unwrap_err().is_validation());
}

#[test]
fn saturated_power_sweep_is_flagged() {
    let m = synth_sweep(&power_truth(), &SweepGrid::log(1e7, 1e11, 12), 0.02, 1, &SynthOptions::default())
        .unwrap();
    let fit = fit_power_sweep(&m).unwrap();
    assert!(!fit.warnings.is_empty(), "{:?} ± {:?}", fit.fit.params, fit.fit.stderr);
}

#[test]
fn power_sweep_from_traces() {
    let grid = SweepGrid::log(1e-2, 1e6, 13);
    let opts = SynthOptions { traces: true, ..SynthOptions::default() };
    let m = synth_sweep(&power_truth(), &grid, 0.0, 5, &opts).unwrap();
    assert!(matches!(m.entries[0].data, SweepData::Trace(_)));
    let fit = fit_power_sweep(&m).unwrap();
    for (name, truth) in [("inv_q_tls", 2e-5), ("n_c", 10.0), ("phi", 0.44), ("inv_q_r", 2e-6)] {
        let (v, e) = fit.param(name).unwrap();
        assert!((v - truth).abs() < 4.0 * e, "{name}: {v} ± {e}");
    }
}

#[test]
fn pump_sweep_recovers_omega0() {
    let m = synth_sweep(&pump_truth(0.0), &pump_grid(), 0.02, 3, &SynthOptions::default()).unwrap();
    let n = pump_photon_numbers(&m).unwrap();
    println!("n_bar range {:e} .. {:e}", n.iter().cloned().fold(f64::MAX, f64::min), n.iter().cloned().fold(0.0, f64::max));
    let fit = fit_pump_sweep(&m, HeatingMode::Off).unwrap();
    println!("{:?} ± {:?}", fit.fit.params, fit.fit.stderr);
    assert!(within(&fit, "omega0_over_2pi", 16.2e3, 3.0));
    assert!(within(&fit, "inv_q_tls", 2e-5, 3.0));
    assert_eq!(fit.param("heating_eta").unwrap(), (0.0, 0.0));
}

#[test]
fn pump_sweep_recovery_rate() {
    let mut hits = 0;
    for seed in 0..100 {
        let m = synth_sweep(&pump_truth(0.0), &pump_grid(), 0.02, seed, &SynthOptions::default()).unwrap();
        let fit = fit_pump_sweep(&m, HeatingMode::Off).unwrap();
        hits += (within(&fit, "omega0_over_2pi", 16.2e3, 3.0) && within(&fit, "inv_q_tls", 2e-5, 3.0)) as usize;
    }
    assert!(hits >= 95, "{hits}");
}

#[test]
fn pump_sweep_heating_modes() {
    let eta = 1e-4;
    let m = synth_sweep(&pump_truth(eta), &pump_grid(), 0.01, 4, &SynthOptions::default()).unwrap();
    let joint = fit_pump_sweep(&m, HeatingMode::Joint).unwrap();
    assert!(within(&joint, "heating_eta", eta, 3.0));
    assert!(within(&joint, "omega0_over_2pi", 16.2e3, 3.0));
    let two = fit_pump_sweep(&m, HeatingMode::TwoStage).unwrap();
    assert!(within(&two, "heating_eta", eta, 3.0));
}

#[test]
fn pump_and_power_agree_on_q_tls() {
    let power = synth_sweep(&power_truth(), &SweepGrid::log(1e-2, 1e6, 25), 0.02, 11, &SynthOptions::default())
        .unwrap();
    let pump = synth_sweep(&pump_truth(0.0), &pump_grid(), 0.02, 11, &SynthOptions::default()).unwrap();
    let a = fit_power_sweep(&power).unwrap().param("inv_q_tls").unwrap();
    let b = fit_pump_sweep(&pump, HeatingMode::Off).unwrap().param("inv_q_tls").unwrap();
    assert!((a.0 - b.0).abs() < 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt(), "{a:?} {b:?}");
}

#[test]
fn pump_sweep_is_antisymmetric_without_heating() {
    let m = synth_sweep(&pump_truth(0.0), &pump_grid(), 0.0, 1, &SynthOptions::default()).unwrap();
    let fit = fit_pump_sweep(&m, HeatingMode::Off).unwrap();
    let y = &fit.curve.y;
    let n = y.len();
    for i in 0..n {
        assert!((y[i] + y[n - 1 - i]).abs() <= 1e-6 * y.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
}

#[test]
fn temperature_sweep_recovery() {
    let grid = SweepGrid::log(0.010, 1.5, 40);
    let mut hits = 0;
    for seed in 0..100 {
        let m = synth_sweep(&temperature_truth(0.05), &grid, 0.01, seed, &SynthOptions::default()).unwrap();
        let sc = SuperconductorParams::niobium_reference(0.0);
        let fit = fit_temperature_sweep(&m, &sc).unwrap();
        if seed == 0 {
            println!("temp {:?} ± {:?} {:?}", fit.fit.params, fit.fit.stderr, fit.warnings);
        }
        hits += (within(&fit, "inv_q_tls", 2e-5, 3.0) && within(&fit, "alpha", 0.05, 3.0)) as usize;
    }
    assert!(hits >= 95, "{hits}");
}

#[test]
fn temperature_sweep_nested_alpha() {
    let grid = SweepGrid::log(0.010, 1.5, 40);
    let sc = SuperconductorParams::niobium_reference(0.0);
    let m = synth_sweep(&temperature_truth(0.0), &grid, 0.01, 2, &SynthOptions::default()).unwrap();
    let fit = fit_temperature_sweep(&m, &sc).unwrap();
    let (a, e) = fit.param("alpha").unwrap();
    assert!(a.abs() <= 2.0 * e, "{a} ± {e}");
}

#[test]
fn high_temperature_points_constrain_alpha() {
    let grid = SweepGrid::log(0.010, 1.5, 40);
    let sc = SuperconductorParams::niobium_reference(0.0);
    let full = synth_sweep(&temperature_truth(0.05), &grid, 0.01, 2, &SynthOptions::default()).unwrap();
    let mut cold = full.clone();
    cold.entries.retain(|e| e.control <= 0.5);
    let e_full = fit_temperature_sweep(&full, &sc).unwrap().param("alpha").unwrap().1;
    let e_cold = fit_temperature_sweep(&cold, &sc).unwrap().param("alpha").unwrap().1;
    println!("stderr alpha full {e_full:e} cold {e_cold:e}");
    assert!(e_cold > 2.0 * e_full);
}

//! Python bindings. Build with `--features extension-module` and import the
//! shared library as `resloss`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use resloss::dataio::{self, ReportV1};
use resloss::physmodels::SuperconductorParams;
use resloss::physmodels::{self, TlsLossParams, TwoToneParams};
use resloss::pipelines::{
    self, ComplexTrace, HeatingMode, PipelineFit, PowerTruth, PumpTruth, SweepGrid, SweepManifest,
    SweepTruth, SynthDevice, SynthOptions, TemperatureTruth, TraceMetadata,
};
use resloss::{specfun, Complex64, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Complex S21 trace on a strictly increasing frequency grid (Hz).
#[pyclass(name = "Trace", module = "resloss", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrace {
    inner: ComplexTrace,
}

#[pymethods]
impl PyTrace {
    #[new]
    fn new(frequencies: Vec<f64>, re: Vec<f64>, im: Vec<f64>) -> PyResult<Self> {
        if re.len() != im.len() {
            return Err(PyValueError::new_err("re and im differ in length"));
        }
        let s21 = re
            .into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect();
        let inner =
            ComplexTrace::new(frequencies, s21, TraceMetadata::default()).map_err(py_err)?;
        Ok(PyTrace { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyTrace {
            inner: dataio::read_trace(&path).map_err(py_err)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        dataio::write_trace(&path, &self.inner).map_err(py_err)
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies.clone()
    }

    #[getter]
    fn s21(&self) -> Vec<Complex64> {
        self.inner.s21.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Loaded sweep manifest with the digest of its input bytes.
#[pyclass(name = "Manifest", module = "resloss", skip_from_py_object)]
#[derive(Clone)]
pub struct PyManifest {
    inner: SweepManifest,
    digest: String,
}

#[pymethods]
impl PyManifest {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let loaded = dataio::read_manifest(&path).map_err(py_err)?;
        Ok(PyManifest {
            inner: loaded.manifest,
            digest: loaded.input_sha256,
        })
    }

    /// Writes `manifest.json` and any traces into `dir`; returns the manifest path.
    fn write(&self, dir: PathBuf) -> PyResult<PathBuf> {
        dataio::write_sweep(&dir, &self.inner).map_err(py_err)
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind).to_lowercase()
    }

    #[getter]
    fn controls(&self) -> Vec<f64> {
        self.inner.entries.iter().map(|e| e.control).collect()
    }

    #[getter]
    fn truth(&self) -> Option<BTreeMap<String, f64>> {
        self.inner.truth.clone()
    }

    #[getter]
    fn input_sha256(&self) -> String {
        self.digest.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }
}

/// Fit report in the on-disk report schema.
#[pyclass(name = "FitReport", module = "resloss", skip_from_py_object)]
#[derive(Clone)]
pub struct PyFitReport {
    inner: ReportV1,
}

#[pymethods]
impl PyFitReport {
    #[getter]
    fn pipeline(&self) -> String {
        format!("{:?}", self.inner.pipeline).to_lowercase()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.inner
            .params
            .iter()
            .map(|p| (p.name.clone(), p.value))
            .collect()
    }

    #[getter]
    fn stderr(&self) -> BTreeMap<String, Option<f64>> {
        self.inner
            .params
            .iter()
            .zip(&self.inner.stderr)
            .map(|(p, s)| (p.name.clone(), *s))
            .collect()
    }

    #[getter]
    fn units(&self) -> BTreeMap<String, String> {
        self.inner
            .params
            .iter()
            .map(|p| (p.name.clone(), p.unit.clone()))
            .collect()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn chi2(&self) -> f64 {
        self.inner.chi2
    }

    #[getter]
    fn dof(&self) -> usize {
        self.inner.dof
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn derived(&self) -> BTreeMap<String, f64> {
        self.inner.derived.clone()
    }

    #[getter]
    fn truth(&self) -> Option<BTreeMap<String, f64>> {
        self.inner.truth.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        dataio::write_report(&self.inner, &path).map_err(py_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyFitReport {
            inner: dataio::read_report(&path).map_err(py_err)?,
        })
    }
}

fn report(
    fit: resloss::Result<PipelineFit>,
    digest: &str,
    truth: Option<BTreeMap<String, f64>>,
) -> PyResult<PyFitReport> {
    let fit = fit.map_err(py_err)?;
    Ok(PyFitReport {
        inner: dataio::build_report(&fit, digest, truth),
    })
}

#[pyfunction]
fn fit_trace(trace: &PyTrace) -> PyResult<PyFitReport> {
    let csv = dataio::trace_to_csv(&trace.inner);
    let digest = dataio::sha256_hex([csv.as_bytes()]);
    report(
        pipelines::fit_trace(&trace.inner).map(|f| f.result),
        &digest,
        None,
    )
}

#[pyfunction]
fn fit_power(manifest: &PyManifest) -> PyResult<PyFitReport> {
    report(
        pipelines::fit_power_sweep(&manifest.inner),
        &manifest.digest,
        manifest.inner.truth.clone(),
    )
}

#[pyfunction]
#[pyo3(signature = (manifest, heating = "off"))]
fn fit_pump(manifest: &PyManifest, heating: &str) -> PyResult<PyFitReport> {
    let mode = match heating {
        "off" => HeatingMode::Off,
        "joint" => HeatingMode::Joint,
        "two_stage" => HeatingMode::TwoStage,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown heating mode {other:?}"
            )))
        }
    };
    report(
        pipelines::fit_pump_sweep(&manifest.inner, mode),
        &manifest.digest,
        manifest.inner.truth.clone(),
    )
}

#[pyfunction]
fn fit_temperature(manifest: &PyManifest) -> PyResult<PyFitReport> {
    let sc = manifest
        .inner
        .superconductor
        .ok_or_else(|| PyValueError::new_err("manifest lacks superconductor parameters"))?;
    report(
        pipelines::fit_temperature_sweep(&manifest.inner, &sc),
        &manifest.digest,
        manifest.inner.truth.clone(),
    )
}

/// Synthetic sweep of the reference device with the default truth values.
/// `kind` is "power", "pump" or "temperature"; `traces` stores full S21
/// traces instead of extracted resonances.
#[pyfunction]
#[pyo3(signature = (kind, seed = 1, noise = None, points = None, traces = false))]
fn simulate(
    kind: &str,
    seed: u64,
    noise: Option<f64>,
    points: Option<usize>,
    traces: bool,
) -> PyResult<PyManifest> {
    let device = SynthDevice::reference();
    let (truth, n, default_noise) = match kind {
        "power" => (
            SweepTruth::Power(PowerTruth {
                device,
                inv_q_tls: 2e-5,
                n_c: 10.0,
                phi: 0.44,
                inv_q_r: 2e-6,
            }),
            25,
            0.02,
        ),
        "pump" => (
            SweepTruth::Pump(PumpTruth {
                device,
                inv_q_tls: 2e-5,
                omega0_over_2pi: 16.2e3,
                heating_eta: 0.0,
                gamma_r: 50e3,
                pump_power_dbm: -50.0,
            }),
            81,
            0.02,
        ),
        "temperature" => (
            SweepTruth::Temperature(TemperatureTruth {
                device,
                inv_q_tls: 2e-5,
                superconductor: SuperconductorParams::niobium_reference(0.05),
                gamma_r: 50e3,
            }),
            40,
            0.01,
        ),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown sweep kind {other:?}"
            )))
        }
    };
    let grid = SweepGrid::reference(truth.kind(), points.unwrap_or(n));
    let opts = SynthOptions {
        traces,
        ..SynthOptions::default()
    };
    let noise = noise.unwrap_or(default_noise);
    let inner = pipelines::synth_sweep(&truth, &grid, noise, seed, &opts).map_err(py_err)?;
    // in-memory sweeps are identified by the request that generated them
    let request = serde_json::json!({ "truth": truth, "grid": grid, "noise": noise, "seed": seed, "options": opts });
    let digest = dataio::sha256_hex([request.to_string().as_bytes()]);
    Ok(PyManifest { inner, digest })
}

#[pyfunction]
fn digamma(z: Complex64) -> PyResult<Complex64> {
    specfun::digamma(z).map_err(py_err)
}

#[pyfunction]
fn bessel_i0(x: f64) -> PyResult<f64> {
    specfun::bessel_i0(x).map_err(py_err)
}

#[pyfunction]
fn bessel_k0(x: f64) -> PyResult<f64> {
    specfun::bessel_k0(x).map_err(py_err)
}

/// Internal loss 1/Q_i at photon number `n_bar`.
#[pyfunction]
fn tls_power_loss(
    inv_q_tls: f64,
    n_c: f64,
    phi: f64,
    inv_q_r: f64,
    f_r: f64,
    temperature: f64,
    n_bar: f64,
) -> PyResult<f64> {
    let p = TlsLossParams {
        inv_q_tls,
        n_c,
        phi,
        inv_q_r,
        f_r,
        temperature,
    };
    physmodels::tls_power_loss(&p, n_bar).map_err(py_err)
}

/// Pump-induced frequency shift (Hz) at detuning `delta` (Hz).
#[pyfunction]
#[pyo3(signature = (f_r, inv_q_tls, omega0_over_2pi, temperature, delta, n_bar, heating_eta = 0.0))]
fn two_tone_shift(
    f_r: f64,
    inv_q_tls: f64,
    omega0_over_2pi: f64,
    temperature: f64,
    delta: f64,
    n_bar: f64,
    heating_eta: f64,
) -> PyResult<f64> {
    let p = TwoToneParams {
        f_r,
        inv_q_tls,
        omega0_over_2pi,
        temperature,
        heating_eta,
    };
    physmodels::two_tone_shift(&p, delta, n_bar).map_err(py_err)
}

/// d/e in metres.
#[pyfunction]
fn dipole_moment(omega0_over_2pi: f64, field_v_per_m: f64) -> PyResult<f64> {
    physmodels::dipole_moment(omega0_over_2pi, field_v_per_m).map_err(py_err)
}

/// N₀/N₀ʳᵉᶠ from (1/Q_TLS, Ω₀/2π) pairs.
#[pyfunction]
fn relative_tls_density(reference: (f64, f64), sample: (f64, f64)) -> PyResult<f64> {
    physmodels::relative_tls_density(reference, sample).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "resloss")]
fn resloss_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", resloss::VERSION)?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyManifest>()?;
    m.add_class::<PyFitReport>()?;
    m.add_function(wrap_pyfunction!(fit_trace, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power, m)?)?;
    m.add_function(wrap_pyfunction!(fit_pump, m)?)?;
    m.add_function(wrap_pyfunction!(fit_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_i0, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k0, m)?)?;
    m.add_function(wrap_pyfunction!(tls_power_loss, m)?)?;
    m.add_function(wrap_pyfunction!(two_tone_shift, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_moment, m)?)?;
    m.add_function(wrap_pyfunction!(relative_tls_density, m)?)?;
    Ok(())
}

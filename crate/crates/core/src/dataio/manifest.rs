use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trace::{parse_trace, trace_to_csv};
use super::{read_bytes, sha256_hex, write_atomic, write_json};
use crate::error::{Error, Result};
use crate::physmodels::{CalibrationParams, SuperconductorParams};
use crate::pipelines::{
    DeviceIdentity, Extracted, PumpSetup, SweepData, SweepEntry, SweepKind, SweepManifest,
};

/// Value of the manifest `format` field.
pub const MANIFEST_FORMAT: &str = "resloss-sweep";
const MANIFEST_VERSION: u32 = 1;

/// A manifest together with the digest of every byte it was built from.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: SweepManifest,
    /// SHA-256 over the manifest file followed by each trace file in entry order.
    pub input_sha256: String,
    pub path: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    format: String,
    schema_version: u32,
    kind: SweepKind,
    device: DeviceFile,
    calibration: CalibrationFile,
    temperature_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pump: Option<PumpFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    superconductor: Option<SuperconductorFile>,
    entries: Vec<EntryFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceFile {
    resonator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_over_2pi_hz: Option<f64>,
    cavity_freq_hz: f64,
    cavity_kappa_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    gain_in_db: f64,
    field_at_one_photon_v_per_m: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PumpFile {
    power_dbm: f64,
    baseline_f_r_hz: f64,
    baseline_kappa_tot_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperconductorFile {
    t_c_k: f64,
    delta0_j: f64,
    alpha: f64,
    l_el_m: f64,
    v_f_m_per_s: f64,
    lambda0_m: f64,
    sigma_n_s_per_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi_gl_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi_bcs_m: Option<f64>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pump_detuning_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_r_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_tot_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_r_stderr_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_tot_stderr_hz: Option<f64>,
}

fn control_field(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::Power => "power_dbm",
        SweepKind::Pump => "pump_detuning_hz",
        SweepKind::Temperature => "temperature_k",
    }
}

impl EntryFile {
    fn control(&self, kind: SweepKind) -> Option<f64> {
        match kind {
            SweepKind::Power => self.power_dbm,
            SweepKind::Pump => self.pump_detuning_hz,
            SweepKind::Temperature => self.temperature_k,
        }
    }

    fn set_control(&mut self, kind: SweepKind, v: f64) {
        match kind {
            SweepKind::Power => self.power_dbm = Some(v),
            SweepKind::Pump => self.pump_detuning_hz = Some(v),
            SweepKind::Temperature => self.temperature_k = Some(v),
        }
    }

    fn has_other_control(&self, kind: SweepKind) -> bool {
        [SweepKind::Power, SweepKind::Pump, SweepKind::Temperature]
            .into_iter()
            .filter(|k| *k != kind)
            .any(|k| self.control(k).is_some())
    }
}

/// Loads a sweep manifest. Trace paths resolve against the manifest's
/// directory, never the working directory. Entries come back sorted by
/// control value.
pub fn read_manifest(path: &Path) -> Result<LoadedManifest> {
    let fmt_err = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    let bytes = read_bytes(path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| fmt_err(format!("invalid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| fmt_err("manifest must be a JSON object".into()))?;
    match obj.get("format").and_then(|v| v.as_str()) {
        Some(MANIFEST_FORMAT) => {}
        Some(other) => return Err(fmt_err(format!("unsupported manifest format {other:?}"))),
        None => return Err(fmt_err(format!("missing \"format\": {MANIFEST_FORMAT:?}"))),
    }
    match obj.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == MANIFEST_VERSION as u64 => {}
        Some(v) => {
            return Err(fmt_err(format!(
                "unsupported manifest schema_version {v}; this build reads version {MANIFEST_VERSION}"
            )))
        }
        None => return Err(fmt_err("missing integer schema_version".into())),
    }
    match obj.get("kind").and_then(|v| v.as_str()) {
        Some("power" | "pump" | "temperature") => {}
        Some(other) => {
            return Err(fmt_err(format!(
                "unknown sweep kind {other:?}; expected power, pump or temperature"
            )))
        }
        None => return Err(fmt_err("missing sweep kind".into())),
    }
    let file: ManifestFile = serde_json::from_value(value).map_err(|e| fmt_err(e.to_string()))?;

    let base = path.parent().unwrap_or(Path::new(""));
    let kind = file.kind;
    let mut digest_parts = vec![bytes];
    let mut entries = Vec::with_capacity(file.entries.len());
    for (i, e) in file.entries.iter().enumerate() {
        let control = e.control(kind).ok_or_else(|| {
            fmt_err(format!("entry {i}: missing {} for a {kind:?} sweep", control_field(kind)))
        })?;
        if e.has_other_control(kind) {
            return Err(fmt_err(format!(
                "entry {i}: only {} is allowed as control in a {kind:?} sweep",
                control_field(kind)
            )));
        }
        let data = match (&e.trace, e.f_r_hz) {
            (Some(rel), None) => {
                let trace_path = base.join(rel);
                if !trace_path.is_file() {
                    return Err(Error::Validation(format!(
                        "entry {i}: trace file {} not found",
                        trace_path.display()
                    )));
                }
                let tb = read_bytes(&trace_path)?;
                let text = std::str::from_utf8(&tb).map_err(|_| Error::Format {
                    path: trace_path.clone(),
                    msg: "not valid UTF-8".into(),
                })?;
                let trace = parse_trace(text, &trace_path)?;
                digest_parts.push(tb);
                (SweepData::Trace(trace), Some(trace_path))
            }
            (None, Some(f_r)) => (
                SweepData::Extracted(Extracted {
                    f_r,
                    kappa_tot: e.kappa_tot_hz,
                    f_r_stderr: e.f_r_stderr_hz,
                    kappa_tot_stderr: e.kappa_tot_stderr_hz,
                }),
                None,
            ),
            (Some(_), Some(_)) => {
                return Err(fmt_err(format!("entry {i}: give either trace or f_r_hz, not both")))
            }
            (None, None) => return Err(fmt_err(format!("entry {i}: needs trace or f_r_hz"))),
        };
        entries.push(SweepEntry { control, data: data.0, source: data.1 });
    }
    entries.sort_by(|a, b| a.control.total_cmp(&b.control));
    if let Some(w) = entries.windows(2).find(|w| w[0].control == w[1].control) {
        return Err(Error::Validation(format!(
            "duplicate control value {} {} in {}",
            w[0].control,
            kind.control_unit(),
            path.display()
        )));
    }

    let d = file.device;
    let manifest = SweepManifest {
        kind,
        device: DeviceIdentity {
            resonator: d.resonator,
            g_over_2pi: d.g_over_2pi_hz,
            cavity_freq: d.cavity_freq_hz,
            cavity_kappa: d.cavity_kappa_hz,
        },
        calibration: CalibrationParams {
            gain_in_db: file.calibration.gain_in_db,
            field_at_one_photon: file.calibration.field_at_one_photon_v_per_m,
        },
        temperature: file.temperature_k,
        pump: file.pump.map(|p| PumpSetup {
            power_dbm: p.power_dbm,
            baseline_f_r: p.baseline_f_r_hz,
            baseline_kappa_tot: p.baseline_kappa_tot_hz,
        }),
        superconductor: file.superconductor.map(|s| SuperconductorParams {
            t_c: s.t_c_k,
            delta0: s.delta0_j,
            alpha: s.alpha,
            l_el: s.l_el_m,
            v_f: s.v_f_m_per_s,
            lambda0: s.lambda0_m,
            sigma_n: s.sigma_n_s_per_m,
            xi_gl: s.xi_gl_m,
            xi_bcs: s.xi_bcs_m,
        }),
        entries,
        truth: file.truth,
    };
    manifest.validate()?;
    let input_sha256 = sha256_hex(digest_parts.iter().map(Vec::as_slice));
    Ok(LoadedManifest { manifest, input_sha256, path: path.to_path_buf() })
}

/// Writes `manifest.json` plus one `trace_NNN.csv` per trace entry into
/// `dir`, creating it if needed. Returns the manifest path.
pub fn write_sweep(dir: &Path, manifest: &SweepManifest) -> Result<PathBuf> {
    manifest.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let kind = manifest.kind;
    let mut entries = Vec::with_capacity(manifest.entries.len());
    for (i, e) in manifest.entries.iter().enumerate() {
        let mut out = EntryFile::default();
        out.set_control(kind, e.control);
        match &e.data {
            SweepData::Trace(t) => {
                let name = format!("trace_{i:03}.csv");
                write_atomic(&dir.join(&name), trace_to_csv(t).as_bytes())?;
                out.trace = Some(name);
            }
            SweepData::Extracted(x) => {
                out.f_r_hz = Some(x.f_r);
                out.kappa_tot_hz = x.kappa_tot;
                out.f_r_stderr_hz = x.f_r_stderr;
                out.kappa_tot_stderr_hz = x.kappa_tot_stderr;
            }
        }
        entries.push(out);
    }
    let d = &manifest.device;
    let file = ManifestFile {
        format: MANIFEST_FORMAT.into(),
        schema_version: MANIFEST_VERSION,
        kind,
        device: DeviceFile {
            resonator: d.resonator.clone(),
            g_over_2pi_hz: d.g_over_2pi,
            cavity_freq_hz: d.cavity_freq,
            cavity_kappa_hz: d.cavity_kappa,
        },
        calibration: CalibrationFile {
            gain_in_db: manifest.calibration.gain_in_db,
            field_at_one_photon_v_per_m: manifest.calibration.field_at_one_photon,
        },
        temperature_k: manifest.temperature,
        pump: manifest.pump.map(|p| PumpFile {
            power_dbm: p.power_dbm,
            baseline_f_r_hz: p.baseline_f_r,
            baseline_kappa_tot_hz: p.baseline_kappa_tot,
        }),
        superconductor: manifest.superconductor.map(|s| SuperconductorFile {
            t_c_k: s.t_c,
            delta0_j: s.delta0,
            alpha: s.alpha,
            l_el_m: s.l_el,
            v_f_m_per_s: s.v_f,
            lambda0_m: s.lambda0,
            sigma_n_s_per_m: s.sigma_n,
            xi_gl_m: s.xi_gl,
            xi_bcs_m: s.xi_bcs,
        }),
        entries,
        truth: manifest.truth.clone(),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &file)?;
    Ok(path)
}

use std::path::Path;

use num_complex::Complex64;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::pipelines::{ComplexTrace, TraceMetadata};

/// Value of the optional `# format=` line.
pub const TRACE_FORMAT: &str = "resloss-trace-v1";
const HEADER: &str = "freq_hz,re_s21,im_s21";

/// Serializes a trace. Numbers use the shortest decimal form that parses
/// back to the same `f64`, so the round trip is exact.
pub fn trace_to_csv(trace: &ComplexTrace) -> String {
    let mut out = format!("# format={TRACE_FORMAT}\n");
    let m = &trace.metadata;
    for (key, value) in [
        ("power_dbm", m.power_dbm),
        ("temperature_k", m.temperature_k),
        ("pump_freq_hz", m.pump_freq_hz),
        ("pump_power_dbm", m.pump_power_dbm),
    ] {
        if let Some(v) = value {
            out.push_str(&format!("# {key}={v}\n"));
        }
    }
    if let Some(r) = &m.resonator {
        out.push_str(&format!("# resonator={r}\n"));
    }
    out.push_str(HEADER);
    out.push('\n');
    for (f, s) in trace.frequencies.iter().zip(&trace.s21) {
        out.push_str(&format!("{f},{},{}\n", s.re, s.im));
    }
    out
}

pub fn write_trace(path: &Path, trace: &ComplexTrace) -> Result<()> {
    trace.validate()?;
    write_atomic(path, trace_to_csv(trace).as_bytes())
}

pub fn read_trace(path: &Path) -> Result<ComplexTrace> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::Format { path: path.to_path_buf(), msg: "not valid UTF-8".into() })?;
    parse_trace(text, path)
}

/// Parses trace CSV text; `path` is only used in error messages.
pub fn parse_trace(text: &str, path: &Path) -> Result<ComplexTrace> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut meta = TraceMetadata::default();
    let mut header_seen = false;
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            if header_seen {
                continue;
            }
            let Some((key, value)) = comment.trim().split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            let number = || {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line_no, format!("invalid number for {key}: {value:?}")))
            };
            match key {
                "format" if value != TRACE_FORMAT => {
                    return Err(err(line_no, format!("unsupported trace format {value:?}")));
                }
                "power_dbm" => meta.power_dbm = Some(number()?),
                "temperature_k" => meta.temperature_k = Some(number()?),
                "pump_freq_hz" => meta.pump_freq_hz = Some(number()?),
                "pump_power_dbm" => meta.pump_power_dbm = Some(number()?),
                "resonator" => meta.resonator = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["freq_hz", "re_s21", "im_s21"] {
                return Err(err(line_no, format!("expected header {HEADER:?}, found {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(err(line_no, format!("expected 3 columns, found {}", cells.len())));
        }
        let mut v = [0.0; 3];
        for (slot, cell) in v.iter_mut().zip(&cells) {
            *slot = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| err(line_no, format!("invalid number {:?}", cell.trim())))?;
            if !slot.is_finite() {
                return Err(err(line_no, format!("non-finite value {:?}", cell.trim())));
            }
        }
        if let Some(&last) = freqs.last() {
            if v[0] <= last {
                return Err(err(line_no, format!("non-monotone grid: {} Hz follows {last} Hz", v[0])));
            }
        }
        freqs.push(v[0]);
        s21.push(Complex64::new(v[1], v[2]));
    }
    if !header_seen {
        return Err(err(text.lines().count().max(1), format!("missing header {HEADER:?}")));
    }
    if freqs.is_empty() {
        return Err(err(text.lines().count(), "no data rows".into()));
    }
    Ok(ComplexTrace { frequencies: freqs, s21, metadata: meta })
}

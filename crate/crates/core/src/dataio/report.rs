use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_json};
use crate::error::{Error, Result};
use crate::fitcore::ConvergenceReason;
use crate::pipelines::{PipelineFit, PipelineKind};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParam {
    pub name: String,
    pub unit: String,
    pub value: f64,
}

/// Machine-readable fit report. Every field except `timestamp` is a pure
/// function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportV1 {
    pub schema_version: u32,
    pub pipeline: PipelineKind,
    pub input_sha256: String,
    pub params: Vec<ReportParam>,
    /// One entry per parameter; `null` where no uncertainty is available.
    pub stderr: Vec<Option<f64>>,
    /// Row-major `n×n` covariance, `null` when singular.
    pub covariance: Option<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub convergence_reason: ConvergenceReason,
    pub n_iterations: usize,
    pub warnings: Vec<String>,
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<BTreeMap<String, f64>>,
    pub library_version: String,
    pub timestamp: String,
}

impl ReportV1 {
    pub fn param(&self, name: &str) -> Option<(f64, Option<f64>)> {
        let i = self.params.iter().position(|p| p.name == name)?;
        Some((self.params[i].value, self.stderr[i]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported report schema_version {}; this build reads version {REPORT_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let n = self.params.len();
        if self.stderr.len() != n {
            return Err(Error::invalid(format!("{} params but {} stderr values", n, self.stderr.len())));
        }
        if let Some(c) = &self.covariance {
            if c.len() != n * n {
                return Err(Error::invalid(format!("covariance has {} entries, expected {}", c.len(), n * n)));
            }
        }
        Ok(())
    }
}

/// Assembles a report stamped with the current UTC time.
pub fn build_report(
    fit: &PipelineFit,
    input_sha256: &str,
    truth: Option<BTreeMap<String, f64>>,
) -> ReportV1 {
    let r = &fit.fit;
    let params = fit
        .names
        .iter()
        .zip(&fit.units)
        .zip(&r.params)
        .map(|((name, unit), &value)| ReportParam { name: name.clone(), unit: unit.clone(), value })
        .collect();
    let finite = |v: f64| v.is_finite().then_some(v);
    let covariance = r
        .covariance
        .as_ref()
        .map(|rows| rows.iter().flatten().copied().collect::<Vec<f64>>())
        .filter(|c| c.iter().all(|v| v.is_finite()));
    ReportV1 {
        schema_version: REPORT_SCHEMA_VERSION,
        pipeline: fit.kind,
        input_sha256: input_sha256.to_string(),
        params,
        stderr: r.stderr.iter().map(|&s| finite(s)).collect(),
        covariance,
        chi2: r.chi2,
        dof: r.dof,
        converged: r.converged,
        convergence_reason: r.convergence_reason,
        n_iterations: r.n_iterations,
        warnings: fit.warnings.clone(),
        derived: fit.derived.iter().filter(|(_, v)| v.is_finite()).map(|(k, v)| (k.clone(), *v)).collect(),
        truth,
        library_version: crate::VERSION.to_string(),
        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
    }
}

pub fn write_report(report: &ReportV1, path: &Path) -> Result<()> {
    report.validate()?;
    write_json(path, report)
}

/// Reads a report, rejecting unknown schema versions before decoding the rest.
pub fn read_report(path: &Path) -> Result<ReportV1> {
    let fmt_err = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    let bytes = read_bytes(path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| fmt_err(format!("invalid JSON: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == REPORT_SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(fmt_err(format!(
                "unsupported report schema_version {v}; this build reads version {REPORT_SCHEMA_VERSION}"
            )))
        }
        None => return Err(fmt_err("missing integer schema_version".into())),
    }
    let report: ReportV1 = serde_json::from_value(value).map_err(|e| fmt_err(e.to_string()))?;
    report.validate().map_err(|e| fmt_err(e.to_string()))?;
    Ok(report)
}

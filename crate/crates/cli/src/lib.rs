//! `resloss` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 fit did not converge (report
//! still written), 64 command-line usage error, 1 any other failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use resloss::dataio::{
    build_report, read_json, read_manifest, read_trace, sha256_hex, write_csv, write_json,
    write_report, write_sweep, write_trace, ReportV1,
};
use resloss::physmodels::{dipole_moment, relative_tls_density, SuperconductorParams};
use resloss::pipelines::{
    fit_power_curve, fit_power_sweep, fit_pump_sweep, fit_temperature_sweep, fit_trace_with,
    synth_sweep, synth_trace, with_iteration_limit, DeviceIdentity, FitCurve, HeatingMode, PipelineFit, PowerTruth,
    PumpTruth, SweepGrid, SweepKind, SweepTruth, SynthDevice, SynthOptions, TemperatureTruth,
    TraceBackground, DEFAULT_MAX_ITERATIONS,
};
use resloss::tlsbath::{
    ensemble_power_curve, ensemble_pump_sweep, sample_ensemble, CouplingDist, EnsembleConfig,
    Gamma1Rule, LogUniform,
};
use resloss::Error;

pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "resloss", version, about = "Microwave loss analysis for TLS-limited resonators")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a single S21 trace.
    FitTrace(FitTraceArgs),
    /// Fit a power sweep with the TLS saturation model.
    FitPower(FitArgs),
    /// Fit a two-tone pump-detuning sweep.
    FitPump(FitPumpArgs),
    /// Fit a temperature sweep (TLS plus kinetic inductance).
    FitTemp(FitArgs),
    /// Generate a synthetic trace or sweep with known truth.
    Simulate(SimulateArgs),
    /// Run the microscopic TLS-ensemble simulator.
    Oracle(OracleArgs),
    /// Average TLS dipole moment from a Rabi frequency and field strength.
    Dipole(DipoleArgs),
    /// TLS density relative to a reference sample.
    Density(DensityArgs),
}

#[derive(Args, Debug)]
struct Outputs {
    /// Report path; defaults to the input path with extension `.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write data, model and residual columns as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Write a data-plus-fit SVG plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Iteration budget of the least-squares fit.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Sweep manifest (JSON).
    manifest: PathBuf,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Args, Debug)]
struct FitPumpArgs {
    /// Sweep manifest (JSON).
    manifest: PathBuf,
    /// How pump heating enters the model.
    #[arg(long, value_enum, default_value_t = Heating::Off)]
    heating: Heating,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Args, Debug)]
struct FitTraceArgs {
    /// Trace CSV.
    trace: PathBuf,
    /// Cavity frequency of the transmission background (Hz).
    #[arg(long, default_value_t = 8e9)]
    cavity_freq_hz: f64,
    /// Cavity linewidth of the transmission background (Hz).
    #[arg(long, default_value_t = 1e6)]
    cavity_kappa_hz: f64,
    /// JSON object of true parameter values to embed in the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Heating {
    Off,
    Joint,
    TwoStage,
}

impl From<Heating> for HeatingMode {
    fn from(h: Heating) -> Self {
        match h {
            Heating::Off => HeatingMode::Off,
            Heating::Joint => HeatingMode::Joint,
            Heating::TwoStage => HeatingMode::TwoStage,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum SimKind {
    Trace,
    Power,
    Pump,
    Temperature,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(value_enum)]
    kind: SimKind,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative noise level; defaults to 0.02 (power, pump) or 0.01 (temperature).
    #[arg(long)]
    noise: Option<f64>,
    /// Number of sweep points (trace points for `trace`).
    #[arg(long)]
    points: Option<usize>,
    /// Store full traces instead of extracted resonances.
    #[arg(long)]
    traces: bool,
    /// Trace signal-to-noise ratio (dB).
    #[arg(long, default_value_t = 40.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 2e-5)]
    inv_q_tls: f64,
    #[arg(long, default_value_t = 10.0)]
    n_c: f64,
    #[arg(long, default_value_t = 0.44)]
    phi: f64,
    #[arg(long, default_value_t = 2e-6)]
    inv_q_r: f64,
    /// Single-photon Rabi frequency Ω₀/2π (Hz).
    #[arg(long, default_value_t = 16.2e3)]
    omega0_hz: f64,
    /// Pump heating coefficient (K per photon).
    #[arg(long, default_value_t = 0.0)]
    heating_eta: f64,
    /// Kinetic inductance fraction.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Internal loss rate γ_r/2π for pump, temperature and trace data (Hz).
    #[arg(long, default_value_t = 50e3)]
    gamma_r_hz: f64,
    /// Pump source power (dBm).
    #[arg(long, default_value_t = -50.0)]
    pump_power_dbm: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OracleKind {
    Power,
    Pump,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(value_enum)]
    kind: OracleKind,
    /// Ensemble size.
    #[arg(long, default_value_t = 100_000)]
    defects: usize,
    /// Ensemble sampling seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pump photon number for the `pump` sweep.
    #[arg(long, default_value_t = 1e4)]
    n_bar: f64,
    /// CSV of the simulated curve.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of the simulated curve.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DipoleArgs {
    /// Single-photon Rabi frequency Ω₀/2π (kHz).
    #[arg(long)]
    omega0_khz: f64,
    /// Single-photon electric field (V/m).
    #[arg(long)]
    field_v_per_m: f64,
}

#[derive(Args, Debug)]
struct DensityArgs {
    /// Reference Ω₀/2π (kHz).
    #[arg(long)]
    ref_omega0_khz: f64,
    /// Sample Ω₀/2π (kHz).
    #[arg(long)]
    omega0_khz: f64,
    /// Sample-to-reference TLS loss ratio; alternative to the two loss flags.
    #[arg(long, conflicts_with_all = ["ref_inv_q_tls", "inv_q_tls"])]
    loss_ratio: Option<f64>,
    /// Reference 1/Q_TLS.
    #[arg(long, requires = "inv_q_tls")]
    ref_inv_q_tls: Option<f64>,
    /// Sample 1/Q_TLS.
    #[arg(long, requires = "ref_inv_q_tls")]
    inv_q_tls: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    let json = cli.json;
    let outcome = match cli.command {
        Command::FitTrace(a) => fit_trace_cmd(a, json),
        Command::FitPower(a) => {
            fit_manifest_cmd(&a.manifest, &a.out, json, "power sweep", |m| fit_power_sweep(m))
        }
        Command::FitPump(a) => {
            let mode = HeatingMode::from(a.heating);
            fit_manifest_cmd(&a.manifest, &a.out, json, "pump sweep", |m| fit_pump_sweep(m, mode))
        }
        Command::FitTemp(a) => fit_manifest_cmd(&a.manifest, &a.out, json, "temperature sweep", |m| {
            let sc = m.superconductor.ok_or_else(|| {
                Error::Validation("temperature manifest lacks superconductor parameters".into())
            })?;
            fit_temperature_sweep(m, &sc)
        }),
        Command::Simulate(a) => simulate_cmd(a, json),
        Command::Oracle(a) => oracle_cmd(a, json),
        Command::Dipole(a) => dipole_cmd(a, json),
        Command::Density(a) => density_cmd(a, json),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NOT_CONVERGED
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            if e.is_validation() || matches!(e, Error::NoResonance(_)) {
                EXIT_INVALID
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn init_logging() {
    let filter = std::env::var("RESLOSS_LOG").unwrap_or_else(|_| "warn".into());
    let _ = env_logger::Builder::new().parse_filters(&filter).format_timestamp(None).try_init();
}

fn default_report_path(input: &Path) -> PathBuf {
    input.with_extension("report.json")
}

fn write_curve(curve: &FitCurve, path: &Path) -> resloss::Result<()> {
    let rows: Vec<Vec<f64>> = curve
        .x
        .iter()
        .zip(&curve.y)
        .zip(&curve.model)
        .map(|((&x, &y), &m)| vec![x, y, m, y - m])
        .collect();
    write_csv(path, &["x", "y", "model", "residual"], &rows)
}

/// Writes the report and optional artifacts, prints the summary and maps
/// non-convergence to its exit code.
fn finish(
    fit: &PipelineFit,
    digest: &str,
    truth: Option<BTreeMap<String, f64>>,
    input: &Path,
    out: &Outputs,
    title: &str,
    json: bool,
) -> CmdResult {
    let report = build_report(fit, digest, truth);
    let report_path = out.report.clone().unwrap_or_else(|| default_report_path(input));
    write_report(&report, &report_path)?;
    info!("report written to {}", report_path.display());
    if let Some(p) = &out.curve {
        write_curve(&fit.curve, p)?;
    }
    if let Some(p) = &out.svg {
        svg::write_fit_svg(&fit.curve, title, p)?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        print_summary(&report);
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if !report.converged {
        return Err(Failure::NotConverged(format!(
            "fit did not converge ({:?}); report written to {}",
            report.convergence_reason,
            report_path.display()
        )));
    }
    Ok(())
}

fn print_summary(r: &ReportV1) {
    println!("{:?} fit: converged = {}, chi2 = {:e}, dof = {}", r.pipeline, r.converged, r.chi2, r.dof);
    for (p, s) in r.params.iter().zip(&r.stderr) {
        let err = s.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "n/a".into());
        println!("  {:<16} = {:.6e} ± {err} {}", p.name, p.value, p.unit);
    }
    for (k, v) in &r.derived {
        println!("  {k:<16} = {v:.6e}");
    }
}

fn fit_trace_cmd(a: FitTraceArgs, json: bool) -> CmdResult {
    let trace = read_trace(&a.trace)?;
    let digest = sha256_hex([std::fs::read(&a.trace).map_err(|e| Error::Io { path: a.trace.clone(), source: e })?.as_slice()]);
    let hint = DeviceIdentity {
        resonator: String::new(),
        g_over_2pi: None,
        cavity_freq: a.cavity_freq_hz,
        cavity_kappa: a.cavity_kappa_hz,
    }
    .background();
    debug!("fitting {} points from {}", trace.len(), a.trace.display());
    let fit = with_iteration_limit(a.out.max_iterations, || fit_trace_with(&trace, &hint))?;
    let truth = a.truth.as_deref().map(read_json::<BTreeMap<String, f64>>).transpose()?;
    finish(&fit.result, &digest, truth, &a.trace, &a.out, "S21 magnitude", json)
}

fn fit_manifest_cmd(
    manifest: &Path,
    out: &Outputs,
    json: bool,
    title: &str,
    fit: impl Fn(&resloss::pipelines::SweepManifest) -> resloss::Result<PipelineFit>,
) -> CmdResult {
    let loaded = read_manifest(manifest)?;
    info!("loaded {} entries from {}", loaded.manifest.entries.len(), manifest.display());
    let result = with_iteration_limit(out.max_iterations, || fit(&loaded.manifest))?;
    finish(&result, &loaded.input_sha256, loaded.manifest.truth.clone(), manifest, out, title, json)
}

fn simulate_cmd(a: SimulateArgs, json: bool) -> CmdResult {
    let device = SynthDevice::reference();
    if a.kind == SimKind::Trace {
        let cav = device.cavity(a.gamma_r_hz)?;
        let kappa_eff = resloss::physmodels::kappa_eff(&cav)? / (2.0 * std::f64::consts::PI);
        let kappa_tot = 2.0 * kappa_eff + a.gamma_r_hz;
        let mut trace = synth_trace(
            &cav,
            &TraceBackground::default(),
            a.snr_db,
            a.points.unwrap_or(401),
            16.0 * kappa_tot,
            a.seed,
        )?;
        trace.metadata.resonator = Some(device.identity.resonator.clone());
        trace.metadata.temperature_k = Some(device.temperature);
        std::fs::create_dir_all(&a.out).map_err(|e| Error::Io { path: a.out.clone(), source: e })?;
        let path = a.out.join("trace.csv");
        write_trace(&path, &trace)?;
        let truth: BTreeMap<String, f64> = [
            ("f_r", device.f_r),
            ("kappa_tot", kappa_tot),
            ("kappa_eff", kappa_eff),
            ("amplitude", 1.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        write_json(&a.out.join("truth.json"), &truth)?;
        return emit_written(&path, json);
    }
    let (truth, grid, noise) = match a.kind {
        SimKind::Power => (
            SweepTruth::Power(PowerTruth {
                device,
                inv_q_tls: a.inv_q_tls,
                n_c: a.n_c,
                phi: a.phi,
                inv_q_r: a.inv_q_r,
            }),
            SweepGrid::reference(SweepKind::Power, a.points.unwrap_or(25)),
            0.02,
        ),
        SimKind::Pump => (
            SweepTruth::Pump(PumpTruth {
                device,
                inv_q_tls: a.inv_q_tls,
                omega0_over_2pi: a.omega0_hz,
                heating_eta: a.heating_eta,
                gamma_r: a.gamma_r_hz,
                pump_power_dbm: a.pump_power_dbm,
            }),
            SweepGrid::reference(SweepKind::Pump, a.points.unwrap_or(81)),
            0.02,
        ),
        SimKind::Temperature => (
            SweepTruth::Temperature(TemperatureTruth {
                device,
                inv_q_tls: a.inv_q_tls,
                superconductor: SuperconductorParams::niobium_reference(a.alpha),
                gamma_r: a.gamma_r_hz,
            }),
            SweepGrid::reference(SweepKind::Temperature, a.points.unwrap_or(40)),
            0.01,
        ),
        SimKind::Trace => unreachable!(),
    };
    let opts = SynthOptions { traces: a.traces, snr_db: a.snr_db, ..SynthOptions::default() };
    let manifest = synth_sweep(&truth, &grid, a.noise.unwrap_or(noise), a.seed, &opts)?;
    let path = write_sweep(&a.out, &manifest)?;
    emit_written(&path, json)
}

fn emit_written(path: &Path, json: bool) -> CmdResult {
    if json {
        println!("{}", serde_json::json!({ "written": path.display().to_string() }));
    } else {
        println!("wrote {}", path.display());
    }
    Ok(())
}

const ORACLE_F_R: f64 = 5e9;
const ORACLE_T: f64 = 0.010;

fn oracle_config(kind: OracleKind, defects: usize, seed: u64) -> EnsembleConfig {
    match kind {
        // fixed coupling and relaxation: the uniform-field case of the saturation model
        OracleKind::Power => EnsembleConfig {
            n_defects: defects,
            band_center: ORACLE_F_R,
            band_halfwidth: 3e6,
            omega0_dist: CouplingDist::Fixed { value: 20e3 },
            gamma2_dist: LogUniform::fixed(15e3),
            gamma1_rule: Gamma1Rule::Fraction { fraction: 0.5 },
            seed,
            temperature: ORACLE_T,
        },
        OracleKind::Pump => EnsembleConfig {
            n_defects: defects,
            band_center: ORACLE_F_R,
            band_halfwidth: 5e6,
            omega0_dist: CouplingDist::Fixed { value: 1e3 },
            gamma2_dist: LogUniform::fixed(1e3),
            gamma1_rule: Gamma1Rule::Fraction { fraction: 0.5 },
            seed,
            temperature: ORACLE_T,
        },
    }
}

fn oracle_cmd(a: OracleArgs, json: bool) -> CmdResult {
    let cfg = oracle_config(a.kind, a.defects, a.seed);
    let ensemble = sample_ensemble(&cfg)?;
    let digest = sha256_hex([serde_json::to_vec(&cfg).map_err(Error::from)?.as_slice()]);
    match a.kind {
        OracleKind::Power => {
            let grid: Vec<f64> = (0..=40).map(|i| 10f64.powf(-3.0 + 0.125 * i as f64)).collect();
            let curve = ensemble_power_curve(&ensemble, ORACLE_F_R, &grid, ORACLE_T)?;
            let (n, y): (Vec<f64>, Vec<f64>) = curve.into_iter().unzip();
            let w = vec![1.0 / (y[0] * y[0]); y.len()];
            let fit = fit_power_curve(&n, &y, Some(w), ORACLE_F_R, ORACLE_T)?;
            if let Some(p) = &a.out {
                write_curve(&fit.curve, p)?;
            }
            if let Some(p) = &a.svg {
                svg::write_fit_svg(&fit.curve, "ensemble power curve", p)?;
            }
            let report = build_report(&fit, &digest, None);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            } else {
                print_summary(&report);
            }
        }
        OracleKind::Pump => {
            let r = 1e3 * a.n_bar.sqrt();
            let deltas: Vec<f64> = (-60..=60).map(|k| r * k as f64 / 20.0).collect();
            let sweep = ensemble_pump_sweep(&ensemble, ORACLE_F_R, &deltas, a.n_bar, ORACLE_T)?;
            let (x, y): (Vec<f64>, Vec<f64>) = sweep.into_iter().unzip();
            let (i_max, _) = y.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
            let (i_min, _) = y.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
            let curve = FitCurve {
                x_label: "pump detuning (Hz)".into(),
                y_label: "frequency shift (Hz)".into(),
                log_x: false,
                x: x.clone(),
                y: y.clone(),
                model: y.clone(),
                model_x: x.clone(),
                model_y: y.clone(),
            };
            if let Some(p) = &a.out {
                let rows: Vec<Vec<f64>> = x.iter().zip(&y).map(|(&d, &s)| vec![d, s]).collect();
                write_csv(p, &["pump_detuning_hz", "shift_hz"], &rows)?;
            }
            if let Some(p) = &a.svg {
                svg::write_fit_svg(&curve, "ensemble pump sweep", p)?;
            }
            let summary = serde_json::json!({
                "input_sha256": digest,
                "n_bar": a.n_bar,
                "max_shift_detuning_hz": x[i_max],
                "max_shift_hz": y[i_max],
                "min_shift_detuning_hz": x[i_min],
                "min_shift_hz": y[i_min],
            });
            if json {
                println!("{summary}");
            } else {
                println!("maximum shift {:.4e} Hz at detuning {:.4e} Hz", y[i_max], x[i_max]);
                println!("minimum shift {:.4e} Hz at detuning {:.4e} Hz", y[i_min], x[i_min]);
            }
        }
    }
    Ok(())
}

/// Formats `v` to two significant digits.
fn two_sig(v: f64) -> String {
    let decimals = (1 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

fn dipole_cmd(a: DipoleArgs, json: bool) -> CmdResult {
    let d = dipole_moment(a.omega0_khz * 1e3, a.field_v_per_m)?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "omega0_over_2pi_hz": a.omega0_khz * 1e3,
                "field_v_per_m": a.field_v_per_m,
                "dipole_over_e_m": d,
            })
        );
    } else {
        println!("d/e = {} nm", two_sig(d * 1e9));
    }
    Ok(())
}

fn density_cmd(a: DensityArgs, json: bool) -> CmdResult {
    let (ref_loss, loss) = match (a.loss_ratio, a.ref_inv_q_tls, a.inv_q_tls) {
        (Some(r), _, _) => (1.0, r),
        (None, Some(r), Some(s)) => (r, s),
        _ => {
            return Err(Error::Validation("give --loss-ratio or both --ref-inv-q-tls and --inv-q-tls".into()).into())
        }
    };
    let ratio = relative_tls_density((ref_loss, a.ref_omega0_khz * 1e3), (loss, a.omega0_khz * 1e3))?;
    if json {
        println!("{}", serde_json::json!({ "relative_density": ratio }));
    } else {
        println!("N0/N0_ref = {ratio:.4}");
    }
    Ok(())
}

use resloss::physmodels::CalibrationParams;
use resloss::pipelines::{
    fit_pump_sweep, synth_sweep, DeviceIdentity, FitCurve, HeatingMode, PumpTruth, SweepGrid,
    SweepTruth, SynthDevice, SynthOptions,
};
use resloss_cli::svg::{render_fit_svg, write_fit_svg, PlotFrame};

fn device() -> SynthDevice {
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

fn pump_curve() -> FitCurve {
    let truth = SweepTruth::Pump(PumpTruth {
        device: device(),
        inv_q_tls: 2e-5,
        omega0_over_2pi: 16.2e3,
        heating_eta: 0.0,
        gamma_r: 50e3,
        pump_power_dbm: -50.0,
    });
    let m = synth_sweep(&truth, &SweepGrid::linear(-2e6, 2e6, 81), 0.0, 1, &SynthOptions::default()).unwrap();
    fit_pump_sweep(&m, HeatingMode::Off).unwrap().curve
}

fn path_points(d: &str) -> Vec<(f64, f64)> {
    d.split_whitespace()
        .map(|tok| {
            let (x, y) = tok[1..].split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn svg_is_well_formed_xml() {
    let curve = pump_curve();
    let text = render_fit_svg(&curve, "pump <sweep> & fit");
    let doc = roxmltree::Document::parse(&text).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    let ids: Vec<&str> = root.descendants().filter_map(|n| n.attribute("id")).collect();
    for id in ["data", "model", "residuals", "zero-line", "residual-zero"] {
        assert!(ids.contains(&id), "missing {id}");
    }
    let data = root.descendants().find(|n| n.attribute("id") == Some("data")).unwrap();
    assert_eq!(data.children().filter(|n| n.has_tag_name("circle")).count(), curve.x.len());
}

#[test]
fn equal_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    write_fit_svg(&pump_curve(), "pump", &a).unwrap();
    write_fit_svg(&pump_curve(), "pump", &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn pump_model_crosses_zero_at_zero_detuning() {
    let curve = pump_curve();
    let frame = PlotFrame::for_curve(&curve);
    let text = render_fit_svg(&curve, "pump");
    let doc = roxmltree::Document::parse(&text).unwrap();
    let find = |id: &str| doc.descendants().find(|n| n.attribute("id") == Some(id)).unwrap();
    let zero_y: f64 = find("zero-line").attribute("y1").unwrap().parse().unwrap();
    assert!((zero_y - frame.y.px(0.0)).abs() < 0.01);

    let pts = path_points(find("model").attribute("d").unwrap());
    let mut crossings = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0].1 - zero_y, w[1].1 - zero_y);
        if a * b < 0.0 || (a == 0.0 && b != 0.0) {
            crossings.push(w[0].0 + (w[1].0 - w[0].0) * a / (a - b));
        }
    }
    assert_eq!(crossings.len(), 1, "{crossings:?}");
    let x0 = frame.px_x(0.0);
    assert!((crossings[0] - x0).abs() < 0.5, "crossing at {} px, Δ = 0 at {x0} px", crossings[0]);
    // antisymmetry of the drawn line about the crossing
    let n = pts.len();
    for k in 0..n / 2 {
        let (l, r) = (pts[k], pts[n - 1 - k]);
        assert!(((l.1 - zero_y) + (r.1 - zero_y)).abs() < 0.02, "{l:?} {r:?}");
    }
}

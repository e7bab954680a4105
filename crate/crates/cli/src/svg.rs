//! Static data-plus-fit plots. Output depends only on the curve, so equal
//! inputs give byte-identical files.

use std::fmt::Write;
use std::path::Path;

use resloss::dataio::write_atomic;
use resloss::pipelines::FitCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 700.0;
const MAIN_TOP: f64 = 40.0;
const MAIN_BOTTOM: f64 = 380.0;
const RES_TOP: f64 = 420.0;
const RES_BOTTOM: f64 = 500.0;

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub px_lo: f64,
    pub px_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64, pad: f64) -> Axis {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= 1e-12 * (lo.abs() + hi.abs()) {
            let d = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            (lo, hi) = (lo - d, hi + d);
        }
        let p = pad * (hi - lo);
        Axis { lo: lo - p, hi: hi + p, px_lo, px_hi }
    }

    pub fn px(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi
    }
}

/// Pixel layout of a rendered plot, exposed for structural tests.
#[derive(Debug, Clone, Copy)]
pub struct PlotFrame {
    pub x: Axis,
    pub y: Axis,
    pub residual: Axis,
    pub log_x: bool,
}

impl PlotFrame {
    pub fn for_curve(curve: &FitCurve) -> PlotFrame {
        let tx = |v: f64| if curve.log_x { v.log10() } else { v };
        let x = Axis::new(curve.x.iter().chain(&curve.model_x).map(|&v| tx(v)), LEFT, RIGHT, 0.03);
        let y = Axis::new(curve.y.iter().chain(&curve.model_y).copied(), MAIN_BOTTOM, MAIN_TOP, 0.05);
        let rmax = residuals(curve).iter().filter(|r| r.is_finite()).fold(0.0f64, |m, r| m.max(r.abs()));
        let r = if rmax > 0.0 { rmax } else { 1.0 };
        let residual = Axis { lo: -1.1 * r, hi: 1.1 * r, px_lo: RES_BOTTOM, px_hi: RES_TOP };
        PlotFrame { x, y, residual, log_x: curve.log_x }
    }

    pub fn px_x(&self, v: f64) -> f64 {
        self.x.px(if self.log_x { v.log10() } else { v })
    }
}

fn residuals(curve: &FitCurve) -> Vec<f64> {
    curve.y.iter().zip(&curve.model).map(|(y, m)| y - m).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

pub fn render_fit_svg(curve: &FitCurve, title: &str) -> String {
    let frame = PlotFrame::for_curve(curve);
    let (xa, ya, ra) = (frame.x, frame.y, frame.residual);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    for (top, bottom) in [(MAIN_TOP, MAIN_BOTTOM), (RES_TOP, RES_BOTTOM)] {
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            RIGHT - LEFT,
            bottom - top
        );
    }

    for k in 0..=4 {
        let v = xa.lo + (xa.hi - xa.lo) * k as f64 / 4.0;
        let px = xa.px(v);
        let label = if frame.log_x { format!("1e{v:.1}") } else { tick_label(v) };
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{RES_BOTTOM}" x2="{px:.2}" y2="{}" stroke="black"/>"#, RES_BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, RES_BOTTOM + 18.0);
        let v = ya.lo + (ya.hi - ya.lo) * k as f64 / 4.0;
        let py = ya.px(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick_label(v));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        0.5 * (LEFT + RIGHT),
        HEIGHT - 12.0,
        escape(&curve.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        0.5 * (MAIN_TOP + MAIN_BOTTOM),
        0.5 * (MAIN_TOP + MAIN_BOTTOM),
        escape(&curve.y_label)
    );
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">residual</text>"#,
        0.5 * (RES_TOP + RES_BOTTOM), 0.5 * (RES_TOP + RES_BOTTOM));

    if ya.contains(0.0) {
        let py = ya.px(0.0);
        let _ = writeln!(s, r##"<line id="zero-line" x1="{LEFT}" y1="{py:.2}" x2="{RIGHT}" y2="{py:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##);
    }
    let py = ra.px(0.0);
    let _ = writeln!(s, r##"<line id="residual-zero" x1="{LEFT}" y1="{py:.2}" x2="{RIGHT}" y2="{py:.2}" stroke="#888888"/>"##);

    let _ = writeln!(s, r##"<g id="data" fill="#1f4e9c">"##);
    for (&x, &y) in curve.x.iter().zip(&curve.y) {
        if x.is_finite() && y.is_finite() && (!frame.log_x || x > 0.0) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, frame.px_x(x), ya.px(y));
        }
    }
    let _ = writeln!(s, "</g>");

    let mut d = String::new();
    for (&x, &y) in curve.model_x.iter().zip(&curve.model_y) {
        if x.is_finite() && y.is_finite() && (!frame.log_x || x > 0.0) {
            let cmd = if d.is_empty() { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2},{:.2} ", frame.px_x(x), ya.px(y));
        }
    }
    let _ = writeln!(s, r##"<path id="model" d="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##, d.trim_end());

    let _ = writeln!(s, r##"<g id="residuals" fill="#1f4e9c">"##);
    for (&x, r) in curve.x.iter().zip(residuals(curve)) {
        if x.is_finite() && r.is_finite() && (!frame.log_x || x > 0.0) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, frame.px_x(x), ra.px(r));
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

pub fn write_fit_svg(curve: &FitCurve, title: &str, path: &Path) -> resloss::Result<()> {
    write_atomic(path, render_fit_svg(curve, title).as_bytes())
}

//! Native SVG convergence plots: `f_gap` on a log axis against gradient
//! evaluations (left panel) and communication rounds (right panel).

use std::fmt::Write as _;
use std::path::Path;

use daccgd::RunTrace;

use crate::error::CliError;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const GAP_FLOOR: f64 = 1e-16;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const TOP: f64 = 50.0;
const BOTTOM: f64 = 470.0;
const PANELS: [(f64, f64, &str); 2] = [
    (70.0, 380.0, "gradient evaluations per node"),
    (470.0, 780.0, "communication rounds"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(grad_evals, comm_rounds, f_gap)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl Series {
    pub fn from_trace(label: impl Into<String>, trace: &RunTrace) -> Self {
        Self {
            label: label.into(),
            points: trace
                .records
                .iter()
                .map(|r| (r.grad_evals as f64, r.comm_rounds as f64, r.f_gap))
                .collect(),
        }
    }
}

fn log_gap(g: f64) -> f64 {
    if g.is_nan() {
        return GAP_FLOOR.log10();
    }
    g.max(GAP_FLOOR).log10()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn axis_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

fn tick_label(v: f64) -> String {
    if v >= 1e5 {
        format!("{v:.0e}")
    } else {
        format!("{}", v.round() as u64)
    }
}

pub fn render(series: &[Series], title: &str) -> Result<String, CliError> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::Numerical("nothing to plot: empty trace".into()));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let lo = all().map(|p| log_gap(p.2)).fold(f64::INFINITY, f64::min).floor();
    let mut hi = all().map(|p| log_gap(p.2)).fold(f64::NEG_INFINITY, f64::max).ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    let x_max = [
        axis_max(all().map(|p| p.0).fold(0.0, f64::max)),
        axis_max(all().map(|p| p.1).fold(0.0, f64::max)),
    ];
    let y_of = |g: f64| BOTTOM - (log_gap(g) - lo) / (hi - lo) * (BOTTOM - TOP);
    let decade_step = ((hi - lo) / 8.0).ceil().max(1.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="400" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        escape(title)
    );
    for (panel, &(left, right, xlabel)) in PANELS.iter().enumerate() {
        let x_of = |x: f64| left + x / x_max[panel] * (right - left);
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            BOTTOM - TOP
        );
        let mut e = lo;
        while e <= hi + 1e-9 {
            let y = BOTTOM - (e - lo) / (hi - lo) * (BOTTOM - TOP);
            let _ = writeln!(
                svg,
                r##"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#dddddd"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
                left - 6.0,
                y + 4.0,
                e as i64
            );
            e += decade_step;
        }
        for i in 0..=4 {
            let v = x_max[panel] * i as f64 / 4.0;
            let x = x_of(v);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                BOTTOM + 18.0,
                tick_label(v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
            (left + right) / 2.0,
            BOTTOM + 38.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">f(x) - f*</text>"#,
            left - 48.0,
            (TOP + BOTTOM) / 2.0,
            left - 48.0,
            (TOP + BOTTOM) / 2.0
        );
        for (k, s) in series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", x_of(if panel == 0 { p.0 } else { p.1 }), y_of(p.2)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                PALETTE[k % PALETTE.len()],
                pts.join(" ")
            );
        }
    }
    let mut x = 70.0;
    let mut y = 540.0;
    for (k, s) in series.iter().enumerate() {
        let width = 40.0 + 7.0 * s.label.chars().count() as f64;
        if x + width > WIDTH - 10.0 && x > 70.0 {
            x = 70.0;
            y += 20.0;
        }
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="3"/>"#,
            y - 4.0,
            x + 24.0,
            y - 4.0,
            PALETTE[k % PALETTE.len()]
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 30.0, escape(&s.label));
        x += width;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(series: &[Series], title: &str, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, render(series, title)?)?;
    Ok(())
}

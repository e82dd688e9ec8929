//! Plot data as JSON plus a small SVG renderer for it. Reports keep the
//! JSON as the numeric source of truth; the SVG is a view.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    #[default]
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub style: Style,
}

impl Series {
    pub fn line(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { name: name.into(), x, y, style: Style::Line }
    }

    pub fn points(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { name: name.into(), x, y, style: Style::Points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HLine {
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlotData {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    #[serde(default)]
    pub log_x: bool,
    #[serde(default)]
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Vertical bands `(x0, x1)` drawn behind the data.
    #[serde(default)]
    pub shaded: Vec<(f64, f64)>,
    #[serde(default)]
    pub hlines: Vec<HLine>,
}

impl PlotData {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        PlotData { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Axis { lo: lo - pad, hi: hi + pad, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|e| 10f64.powi(e)).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi && out.len() < 12 {
            out.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1e3).round() / 1e3)
    }
}

pub fn render_svg(plot: &PlotData) -> String {
    let xs = Axis::fit(
        plot.series.iter().flat_map(|s| s.x.iter().copied()).chain(plot.shaded.iter().flat_map(|b| [b.0, b.1])),
        plot.log_x,
    );
    let ys = Axis::fit(
        plot.series.iter().flat_map(|s| s.y.iter().copied()).chain(plot.hlines.iter().map(|h| h.y)),
        plot.log_y,
    );
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |v: f64| xs.frac(v).map(|f| LEFT + f * pw);
    let py = |v: f64| ys.frac(v).map(|f| TOP + (1.0 - f) * ph);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&plot.title)).unwrap();
    for &(a, b) in &plot.shaded {
        if let (Some(x0), Some(x1)) = (px(a), px(b)) {
            let width = (x1 - x0).max(1.0);
            writeln!(s, r##"<rect x="{x0:.2}" y="{TOP}" width="{width:.2}" height="{ph}" fill="#bbbbbb" opacity="0.5"/>"##).unwrap();
        }
    }
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for t in xs.ticks() {
        if let Some(x) = px(t) {
            writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0).unwrap();
            writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t)).unwrap();
        }
    }
    for t in ys.ticks() {
        if let Some(y) = py(t) {
            writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0).unwrap();
            writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t)).unwrap();
        }
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(&plot.x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();
    for h in &plot.hlines {
        if let Some(y) = py(h.y) {
            writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#888888" stroke-dasharray="2,3"/>"##, LEFT + pw).unwrap();
        }
    }
    for (k, series) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = series
            .x
            .iter()
            .zip(&series.y)
            .filter_map(|(&x, &y)| Some((px(x)?, py(y)?)))
            .collect();
        match series.style {
            Style::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).unwrap();
            }
            Style::Points => {
                for (x, y) in pts {
                    writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#).unwrap();
                }
            }
        }
        let ly = TOP + 14.0 + 14.0 * k as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, LEFT + 8.0, escape(&series.name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>.plot.json` and `<stem>.svg` into `dir`.
pub fn write_plot(dir: &Path, stem: &str, plot: &PlotData) -> io::Result<(PathBuf, PathBuf)> {
    let json = dir.join(format!("{stem}.plot.json"));
    let svg = dir.join(format!("{stem}.svg"));
    fs::write(&json, serde_json::to_string_pretty(plot)? + "\n")?;
    fs::write(&svg, render_svg(plot))?;
    Ok((json, svg))
}

//! Standalone SVG plots: time series (optionally log-scale) and an
//! orthographic 3D trajectory view.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const PALETTE: [&str; 8] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"];
const DESIRED_COLOR: &str = "#d62728";
/// Longer series are thinned to about this many points.
const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path3 {
    pub label: String,
    pub points: Vec<Vec3>,
    /// Dashed red, as used for desired paths.
    pub desired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        PlotSpec { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_y: false, width: 800.0, height: 500.0 }
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }
}

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(spec: &PlotSpec) -> Self {
        let (left, right, top, bottom) = (80.0, 170.0, 40.0, 55.0);
        Frame { left, top, w: spec.width - left - right, h: spec.height - top - bottom }
    }
}

fn thin<T: Copy>(pts: &[T]) -> Vec<T> {
    let stride = pts.len().div_ceil(MAX_POINTS).max(1);
    let mut out: Vec<T> = pts.iter().step_by(stride).copied().collect();
    if !(pts.len() - 1).is_multiple_of(stride) {
        out.push(pts[pts.len() - 1]);
    }
    out
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(svg: &mut String, spec: &PlotSpec) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        spec.width / 2.0,
        escape(&spec.title)
    );
}

fn legend(svg: &mut String, frame: &Frame, entries: &[(&str, &str, bool)]) {
    let x = frame.left + frame.w + 15.0;
    for (k, (label, color, dashed)) in entries.iter().enumerate() {
        let y = frame.top + 10.0 + 18.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Line plot of `(t, value)` series. In log mode nonpositive values are
/// dropped; a series that is left with fewer than two points is rejected.
pub fn render_line_plot(series: &[Series], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() {
        return Err(Error::invalid("nothing selected to plot"));
    }
    let mut kept = Vec::with_capacity(series.len());
    for s in series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!spec.log_y || *y > 0.0))
            .collect();
        if pts.len() < 2 {
            return Err(Error::invalid(format!("series `{}` has fewer than two plottable points", s.label)));
        }
        kept.push(thin(&pts));
    }
    let ty = |y: f64| if spec.log_y { y.log10() } else { y };
    let all = kept.iter().flatten();
    let (x0, x1) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(ty(p.1)), b.max(ty(p.1))));
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = if spec.log_y { padded(y0.floor(), y1.ceil()) } else { padded(y0, y1) };

    let frame = Frame::new(spec);
    let sx = |x: f64| frame.left + (x - x0) / (x1 - x0) * frame.w;
    let sy = |y: f64| frame.top + frame.h - (y - y0) / (y1 - y0) * frame.h;

    let mut svg = String::new();
    header(&mut svg, spec);
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        frame.left, frame.top, frame.w, frame.h
    );
    for t in linear_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            frame.top,
            frame.top + frame.h,
            frame.top + frame.h + 16.0,
            tick_label(t)
        );
    }
    let y_ticks: Vec<(f64, String)> = if spec.log_y {
        let (a, b) = (y0.ceil() as i64, y1.floor() as i64);
        let every = ((b - a) / 8 + 1).max(1);
        (a..=b).filter(|k| (k - a) % every == 0).map(|k| (k as f64, format!("1e{k}"))).collect()
    } else {
        linear_ticks(y0, y1).into_iter().map(|v| (v, tick_label(v))).collect()
    };
    for (v, label) in y_ticks {
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            frame.left,
            frame.left + frame.w,
            frame.left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        frame.left + frame.w / 2.0,
        spec.height - 12.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        frame.top + frame.h / 2.0,
        escape(&spec.y_label)
    );
    let mut entries = Vec::new();
    for (k, pts) in kept.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y)))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
        entries.push((series[k].label.as_str(), color, false));
    }
    legend(&mut svg, &frame, &entries);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Orthographic view from azimuth 45°, elevation 30°, equal scale on all axes.
pub fn render_trajectory_plot(paths: &[Path3], spec: &PlotSpec) -> Result<String> {
    if paths.is_empty() {
        return Err(Error::invalid("nothing selected to plot"));
    }
    if let Some(p) = paths.iter().find(|p| p.points.len() < 2) {
        return Err(Error::invalid(format!("path `{}` has fewer than two points", p.label)));
    }
    let (az, el) = (45f64.to_radians(), 30f64.to_radians());
    let ex = Vec3::new(-az.sin(), az.cos(), 0.0);
    let ey = Vec3::new(-el.sin() * az.cos(), -el.sin() * az.sin(), el.cos());
    let project = |p: &Vec3| (ex.dot(p), ey.dot(p));

    let projected: Vec<Vec<(f64, f64)>> = paths.iter().map(|p| thin(&p.points).iter().map(project).collect()).collect();
    let all = projected.iter().flatten();
    let (x0, x1) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let frame = Frame::new(spec);
    let scale = (frame.w / (x1 - x0).max(1e-9)).min(frame.h / (y1 - y0).max(1e-9)) * 0.9;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let sx = |x: f64| frame.left + frame.w / 2.0 + (x - cx) * scale;
    let sy = |y: f64| frame.top + frame.h / 2.0 - (y - cy) * scale;

    let mut svg = String::new();
    header(&mut svg, spec);
    // axis triad, bottom left
    let (ox, oy) = (frame.left + 10.0, frame.top + frame.h - 10.0);
    for (axis, name) in [(Vec3::x(), "x"), (Vec3::y(), "y"), (Vec3::z(), "z")] {
        let (u, v) = project(&axis);
        let (tx, ty) = (ox + 30.0 * u, oy - 30.0 * v);
        let _ = writeln!(
            svg,
            r##"<line x1="{ox:.2}" y1="{oy:.2}" x2="{tx:.2}" y2="{ty:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}">{name}</text>"##,
            tx + 3.0 * u,
            ty - 3.0 * v
        );
    }
    let mut entries = Vec::new();
    let mut next_color = 0;
    for (path, pts) in paths.iter().zip(&projected) {
        let (color, dash) = if path.desired {
            (DESIRED_COLOR, r#" stroke-dasharray="6 4""#)
        } else {
            next_color += 1;
            (PALETTE[(next_color - 1) % PALETTE.len()], "")
        };
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, d.join(" "));
        if !path.desired {
            let (x, y) = pts[0];
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        entries.push((path.label.as_str(), color, path.desired));
    }
    legend(&mut svg, &frame, &entries);
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg(path: impl AsRef<Path>, svg: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

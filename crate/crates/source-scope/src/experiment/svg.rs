// SPDX-License-Identifier: Apache-2.0

//! Minimal standalone SVG charts.
//!
//! A [`Figure`] is a grid of [`Panel`]s; each panel draws line and marker
//! series on linear or logarithmic axes. Output depends only on the data, so
//! identical inputs render identical bytes.

use std::fmt::Write;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 46.0;
const TITLE_H: f64 = 32.0;
const LEGEND_ROW: f64 = 16.0;

/// Marker glyphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Plus,
    Star,
    Circle,
}

/// How a series is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers(Marker),
    LineMarkers(Marker),
}

/// One data series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

/// One chart.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// A titled grid of panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub columns: usize,
    pub panels: Vec<Panel>,
}

/// Colors used by the figure builders.
pub const PINK: &str = "#d6609e";
pub const BLUE: &str = "#1f5fae";
pub const GREEN: &str = "#2a9d3a";
pub const ORANGE: &str = "#e07b00";
pub const GREY: &str = "#9a9a9a";

fn n2(x: f64) -> String {
    format!("{:.2}", x)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

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
        if log {
            lo = lo.floor();
            hi = hi.ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else {
            if hi <= lo {
                let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
                lo -= pad;
                hi += pad;
            }
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0,1]`, `None` for values off a log axis.
    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (lo, hi) = (self.lo as i32, self.hi as i32);
            let step = ((hi - lo) / 6).max(1);
            (lo..=hi).step_by(step as usize).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last)
                .map(|i| {
                    let v = i as f64 * step;
                    let label = if step >= 1.0 { format!("{v:.0}") } else { format!("{v:.*}", (-step.log10().floor()) as usize) };
                    (v, label)
                })
                .collect()
        }
    }
}

fn marker(out: &mut String, m: Marker, x: f64, y: f64, color: &str) {
    let (x, y) = (n2(x), n2(y));
    match m {
        Marker::Plus => {
            let _ = write!(out, r#"<path d="M{x} {y}m-5 0h10m-5 -5v10" stroke="{color}" stroke-width="1.6" fill="none"/>"#);
        }
        Marker::Star => {
            let _ = write!(
                out,
                r#"<path d="M{x} {y}m-4.5 0h9m-4.5 -4.5v9m-3.2 -7.7l6.4 6.4m0 -6.4l-6.4 6.4" stroke="{color}" stroke-width="1.2" fill="none"/>"#
            );
        }
        Marker::Circle => {
            let _ = write!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
    }
    out.push('\n');
}

impl Panel {
    fn render(&self, out: &mut String, ox: f64, oy: f64) {
        let xa = Axis::fit(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), self.log_x);
        let ya = Axis::fit(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), self.log_y);
        let legend_h = LEGEND_ROW * self.series.len() as f64;
        let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (oy + MARGIN_T + legend_h, oy + PANEL_H + legend_h - MARGIN_B);
        let px = |v: f64| xa.unit(v).map(|u| x0 + u * (x1 - x0));
        let py = |v: f64| ya.unit(v).map(|u| y1 - u * (y1 - y0));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            n2(ox + PANEL_W / 2.0),
            n2(oy + 18.0),
            escape(&self.title)
        );
        for (i, s) in self.series.iter().enumerate() {
            let ly = oy + MARGIN_T + LEGEND_ROW * i as f64 + 4.0;
            match s.style {
                Style::Line => {
                    let _ = writeln!(
                        out,
                        r#"<path d="M{} {}h18" stroke="{}" stroke-width="1.6"/>"#,
                        n2(x0),
                        n2(ly),
                        s.color
                    );
                }
                Style::Markers(m) | Style::LineMarkers(m) => marker(out, m, x0 + 9.0, ly, s.color),
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
                n2(x0 + 24.0),
                n2(ly + 4.0),
                escape(&s.label)
            );
        }
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            n2(x0),
            n2(y0),
            n2(x1 - x0),
            n2(y1 - y0)
        );
        for (v, label) in xa.ticks() {
            if let Some(x) = px(v) {
                let _ = writeln!(
                    out,
                    r##"<path d="M{} {}v5" stroke="#333"/><text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>"##,
                    n2(x),
                    n2(y1),
                    n2(x),
                    n2(y1 + 17.0),
                    escape(&label)
                );
            }
        }
        for (v, label) in ya.ticks() {
            if let Some(y) = py(v) {
                let _ = writeln!(
                    out,
                    r##"<path d="M{} {}h-5" stroke="#333"/><text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"##,
                    n2(x0),
                    n2(y),
                    n2(x0 - 7.0),
                    n2(y + 3.5),
                    escape(&label)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            n2((x0 + x1) / 2.0),
            n2(y1 + 36.0),
            escape(&self.x_label)
        );
        let (lx, ly) = (ox + 14.0, (y0 + y1) / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            n2(lx),
            n2(ly),
            n2(lx),
            n2(ly),
            escape(&self.y_label)
        );
        for s in &self.series {
            let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
            if matches!(s.style, Style::Line | Style::LineMarkers(_)) && pts.len() > 1 {
                let d: Vec<String> = pts
                    .iter()
                    .enumerate()
                    .map(|(i, (x, y))| format!("{}{} {}", if i == 0 { "M" } else { "L" }, n2(*x), n2(*y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<path d="{}" stroke="{}" stroke-width="1.4" fill="none"/>"#,
                    d.join(" "),
                    s.color
                );
            }
            if let Style::Markers(m) | Style::LineMarkers(m) = s.style {
                for (x, y) in pts {
                    marker(out, m, x, y, s.color);
                }
            }
        }
    }

    fn legend_height(&self) -> f64 {
        LEGEND_ROW * self.series.len() as f64
    }
}

impl Figure {
    /// Renders the figure as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let columns = self.columns.max(1);
        let rows = self.panels.len().div_ceil(columns).max(1);
        let extra = self.panels.iter().map(Panel::legend_height).fold(0.0, f64::max);
        let cell_h = PANEL_H + extra;
        let width = PANEL_W * columns as f64;
        let height = TITLE_H + cell_h * rows as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
            n2(width),
            n2(height),
            n2(width),
            n2(height)
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" font-size="15" font-weight="bold" text-anchor="middle">{}</text>"#,
            n2(width / 2.0),
            escape(&self.title)
        );
        for (i, p) in self.panels.iter().enumerate() {
            let (r, c) = (i / columns, i % columns);
            p.render(&mut out, PANEL_W * c as f64, TITLE_H + cell_h * r as f64);
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_deterministic_document() {
        let fig = Figure {
            title: "t <1>".into(),
            columns: 2,
            panels: vec![Panel {
                title: "p".into(),
                log_y: true,
                series: vec![Series {
                    label: "a".into(),
                    color: BLUE,
                    style: Style::LineMarkers(Marker::Star),
                    points: vec![(1.0, 1e-3), (2.0, 1e-2), (3.0, 0.0)],
                }],
                ..Panel::default()
            }],
        };
        let svg = fig.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg, fig.to_svg());
    }
}

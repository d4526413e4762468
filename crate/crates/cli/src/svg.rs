//! Self-contained SVG line plots with linear or logarithmic axes.
//!
//! Output is deterministic except for the optional timestamp in the
//! document's `<desc>` element.

use std::fmt::Write as _;

use crate::error::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 62.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Shown under the title, e.g. "scenario single-aom, seed 42".
    pub caption: String,
}

impl Plot {
    pub fn line(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
            caption: String::new(),
        }
    }

    pub fn loglog(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot { log_x: true, log_y: true, ..Self::line(title, x_label, y_label) }
    }

    pub fn with_series(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points });
        self
    }

    pub fn with_caption(mut self, caption: impl Into<String>) -> Self {
        self.caption = caption.into();
        self
    }

    /// Renders the document. `timestamp`, when given, is embedded in a
    /// `<desc>` element only.
    pub fn render(&self, timestamp: Option<&str>) -> Result<String, CliError> {
        let usable: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .copied()
                    .filter(|(x, y)| {
                        x.is_finite()
                            && y.is_finite()
                            && (!self.log_x || *x > 0.0)
                            && (!self.log_y || *y > 0.0)
                    })
                    .collect()
            })
            .collect();
        if usable.iter().all(|s| s.len() < 2) {
            return Err(CliError::Validation("plot has no drawable data".into()));
        }

        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for s in &usable {
            for &(x, y) in s {
                x_min = x_min.min(tx(x));
                x_max = x_max.max(tx(x));
                y_min = y_min.min(ty(y));
                y_max = y_max.max(ty(y));
            }
        }
        if x_max <= x_min {
            x_max = x_min + 1.0;
        }
        if y_max <= y_min {
            y_max = y_min + 1.0;
        }
        if !self.log_y {
            let pad = 0.06 * (y_max - y_min);
            y_min -= pad;
            y_max += pad;
        }

        let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        if let Some(ts) = timestamp {
            let _ = writeln!(svg, "  <desc>generated {ts}</desc>");
        }
        let _ = writeln!(svg, r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"  <text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        if !self.caption.is_empty() {
            let _ = writeln!(
                svg,
                r##"  <text x="{:.1}" y="40" font-family="sans-serif" font-size="11" fill="#555" text-anchor="middle">{}</text>"##,
                WIDTH / 2.0,
                escape(&self.caption)
            );
        }

        // Frame.
        let _ = writeln!(
            svg,
            r##"  <rect x="{MARGIN_L}" y="{MARGIN_T}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        );

        for (value, label) in ticks(x_min, x_max, self.log_x) {
            let x = px(value);
            let _ = writeln!(
                svg,
                r##"  <line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
                MARGIN_T,
                HEIGHT - MARGIN_B
            );
            let _ = writeln!(
                svg,
                r#"  <text x="{x:.2}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
                HEIGHT - MARGIN_B + 16.0
            );
        }
        for (value, label) in ticks(y_min, y_max, self.log_y) {
            let y = py(value);
            let _ = writeln!(
                svg,
                r##"  <line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
                WIDTH - MARGIN_R
            );
            let _ = writeln!(
                svg,
                r#"  <text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
                MARGIN_L - 6.0,
                y + 4.0
            );
        }

        let _ = writeln!(
            svg,
            r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"  <text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
            MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
            escape(&self.y_label)
        );

        for (i, (series, points)) in self.series.iter().zip(&usable).enumerate() {
            if points.len() < 2 {
                continue;
            }
            let color = COLORS[i % COLORS.len()];
            let mut path = String::new();
            for (j, &(x, y)) in points.iter().enumerate() {
                let cmd = if j == 0 { 'M' } else { 'L' };
                let _ = write!(path, "{cmd}{:.2} {:.2} ", px(tx(x)), py(ty(y)));
            }
            let _ = writeln!(
                svg,
                r#"  <path d="{}" fill="none" stroke="{color}" stroke-width="1.4"/>"#,
                path.trim_end()
            );
            if self.series.len() > 1 {
                let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
                let _ = writeln!(
                    svg,
                    r#"  <line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                    WIDTH - MARGIN_R - 150.0,
                    WIDTH - MARGIN_R - 126.0
                );
                let _ = writeln!(
                    svg,
                    r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
                    WIDTH - MARGIN_R - 120.0,
                    ly + 4.0,
                    escape(&series.label)
                );
            }
        }
        svg.push_str("</svg>\n");
        Ok(svg)
    }
}

/// Tick positions in transformed coordinates with display labels.
fn ticks(min: f64, max: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let lo = min.floor() as i32;
        let hi = max.ceil() as i32;
        let step = (((hi - lo) as usize / 10) + 1).max(1) as i32;
        return (lo..=hi)
            .step_by(step as usize)
            .filter(|d| (*d as f64) >= min - 1e-9 && (*d as f64) <= max + 1e-9)
            .map(|d| (d as f64, format!("1e{d}")))
            .collect();
    }
    let span = max - min;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let first = (min / step).ceil() as i64;
    let last = (max / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            let label = if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-3) {
                format!("{v:.2e}")
            } else {
                format!("{v}")
            };
            (v, label)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

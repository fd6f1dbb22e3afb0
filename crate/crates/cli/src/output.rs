//! CSV, manifest and SVG emission. All CSVs are UTF-8 with a mandatory
//! header row; floats carry nine significant digits so reruns are
//! byte-comparable.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::ConfigDoc;

/// Nine significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Reproduction record written next to every output set. The manifest is
/// written before any results; re-running the recorded command with the
/// embedded config and seeds reproduces the CSVs byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub artifacts: Vec<String>,
    pub config: ConfigDoc,
    pub stage_seconds: Vec<StageTiming>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: ConfigDoc) -> Self {
        Manifest {
            tool: "simirs",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            trials: None,
            param: None,
            values: None,
            artifacts: Vec::new(),
            config,
            stage_seconds: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(out_dir.join("manifest.json"), body + "\n")
    }
}

/// A CSV table with a fixed header.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            body: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.body, "{}", fields.join(","));
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, &self.body)
    }
}

// ── minimal SVG line charts ─────────────────────────────────────────────

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Render a fixed-size line chart. Intended for quick looks; the CSVs are
/// the data of record.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let (x_min, x_max) = span(&xs);
    let (y_min, y_max) = span(&ys);
    let map_x = |x: f64| MARGIN + (x - x_min) / (x_max - x_min).max(1e-300) * (SVG_W - 2.0 * MARGIN);
    let map_y =
        |y: f64| SVG_H - MARGIN - (y - y_min) / (y_max - y_min).max(1e-300) * (SVG_H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        SVG_W / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        SVG_W / 2.0,
        SVG_H - 18.0,
        x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {:.1})">{}</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0,
        y_label
    );
    // extremes as tick labels
    let _ = writeln!(
        svg,
        r#"<text x="{m}" y="{b}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
        fmt_tick(y_min),
        m = MARGIN - 4.0,
        b = SVG_H - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{m}" y="{t}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
        fmt_tick(y_max),
        m = MARGIN - 4.0,
        t = MARGIN + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{m}" y="{b}" font-family="sans-serif" font-size="10">{}</text>"#,
        fmt_tick(x_min),
        m = MARGIN,
        b = SVG_H - MARGIN + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{r}" y="{b}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
        fmt_tick(x_max),
        r = SVG_W - MARGIN,
        b = SVG_H - MARGIN + 14.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", map_x(x), map_y(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            SVG_W - MARGIN + 6.0,
            MARGIN + 14.0 * i as f64,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 1.0);
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

fn fmt_tick(x: f64) -> String {
    format!("{x:.3e}")
}

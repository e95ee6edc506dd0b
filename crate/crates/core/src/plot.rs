//! Static SVG line charts of sweep results, one metric per chart, with
//! ±1 standard deviation bars.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sweep::{select, Metric, SweepRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=TICKS).map(move |i| self.lo + (self.hi - self.lo) * i as f64 / TICKS as f64)
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

/// Renders the rows of `metric` as an SVG document.
pub fn render_svg(rows: &[SweepRow], metric: Metric) -> Result<String> {
    let points = select(rows, metric);
    let Some(first) = points.first() else {
        return Err(Error::config(format!("no rows for metric {metric}")));
    };
    let axis = first.axis;

    let xs = points.iter().map(|r| r.value);
    let x_lo = xs.clone().fold(f64::INFINITY, f64::min);
    let x_hi = xs.fold(f64::NEG_INFINITY, f64::max);
    let y_lo = points.iter().map(|r| r.mean - r.std).fold(f64::INFINITY, f64::min);
    let y_hi = points.iter().map(|r| r.mean + r.std).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_hi - y_lo).max(f64::EPSILON);
    let x = Scale::new(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Scale::new(y_lo - pad, y_hi + pad, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{metric} vs {axis} ({} replicas)</text>"#,
        WIDTH / 2.0,
        first.replicas
    );

    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{py:.2}" x2="{right}" y2="{py:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 6.0,
            py + 4.0,
            label(t)
        );
    }
    for r in &points {
        let px = x.map(r.value);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            label(r.value)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{axis}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 16.0
    );

    let path: Vec<String> = points
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let cmd = if i == 0 { 'M' } else { 'L' };
            format!("{cmd}{:.2},{:.2}", x.map(r.value), y.map(r.mean))
        })
        .collect();
    let _ = writeln!(
        svg,
        r##"<path d="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        path.join(" ")
    );
    for r in &points {
        let px = x.map(r.value);
        let (lo, hi) = (y.map(r.mean - r.std), y.map(r.mean + r.std));
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="#1f77b4"/><circle cx="{px:.2}" cy="{:.2}" r="3.5" fill="#1f77b4"/>"##,
            y.map(r.mean)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `<metric>.svg` into `dir` for each metric and returns the paths.
pub fn write_plots(rows: &[SweepRow], metrics: &[Metric], dir: &Path) -> Result<Vec<PathBuf>> {
    metrics
        .iter()
        .map(|&m| {
            let path = dir.join(format!("{}.svg", m.name()));
            std::fs::write(&path, render_svg(rows, m)?)?;
            Ok(path)
        })
        .collect()
}

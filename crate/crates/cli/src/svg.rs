//! Minimal SVG scatter panels for diagnostic plots.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

const PANEL: f64 = 300.0;
const MARGIN: f64 = 48.0;

/// Render side-by-side scatter panels with a y = x guide line.
pub fn write_scatter_panels(path: &Path, panels: &[Panel]) -> anyhow::Result<()> {
    let width = panels.len() as f64 * (PANEL + MARGIN) + MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )?;
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for (i, panel) in panels.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL + MARGIN);
        let y0 = MARGIN;

        // Shared square range so the y = x guide is meaningful.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in panel.xs.iter().chain(&panel.ys) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = 0.04 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let scale = PANEL / (hi - lo);
        let px = |v: f64| x0 + (v - lo) * scale;
        let py = |v: f64| y0 + PANEL - (v - lo) * scale;

        write!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#333" stroke-width="1"/>"##
        )?;
        write!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
            px(lo),
            py(lo),
            px(hi),
            py(hi)
        )?;
        for (&x, &y) in panel.xs.iter().zip(&panel.ys) {
            write!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="2.4" fill="#1f77b4" fill-opacity="0.45"/>"##,
                px(x),
                py(y)
            )?;
        }
        write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
            x0 + PANEL / 2.0,
            y0 - 12.0,
            escape(&panel.title)
        )?;
        write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            x0 + PANEL / 2.0,
            y0 + PANEL + 30.0,
            escape(&panel.x_label)
        )?;
        write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 {} {})">{}</text>"#,
            x0 - 30.0,
            y0 + PANEL / 2.0,
            x0 - 30.0,
            y0 + PANEL / 2.0,
            escape(&panel.y_label)
        )?;
        // Range annotations.
        write!(
            svg,
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="9" fill="#555">{:.3}</text>"##,
            x0,
            y0 + PANEL + 12.0,
            lo + pad
        )?;
        write!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="9" fill="#555">{:.3}</text>"##,
            x0 + PANEL,
            y0 + PANEL + 12.0,
            hi - pad
        )?;
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

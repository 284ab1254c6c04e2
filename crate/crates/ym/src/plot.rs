//! Self-contained SVG plots.
//!
//! Coordinates are printed with fixed precision so the same data always gives
//! the same bytes.

use std::fmt::Write as _;

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 48.0;

/// Number of histogram bins for empirical measures.
pub const HISTOGRAM_BINS: usize = 128;

struct Frame {
    x: (f64, f64),
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y / self.y_max).clamp(0.0, 1.0);
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
        writeln!(s, r#"<path d="M{x0} {y1} V{y0} H{x1}" fill="none" stroke="black"/>"#).unwrap();
        let label = |s: &mut String, x: f64, y: f64, anchor: &str, v: f64| {
            writeln!(s, r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#, short(v)).unwrap();
        };
        label(&mut s, x0, y0 + 16.0, "middle", self.x.0);
        label(&mut s, x1, y0 + 16.0, "middle", self.x.1);
        label(&mut s, x0 - 6.0, y0, "end", 0.0);
        label(&mut s, x0 - 6.0, y1 + 4.0, "end", self.y_max);
        s
    }

    fn polyline(&self, s: &mut String, points: &[(f64, f64)], color: &str) {
        s.push_str(r#"<polyline fill="none" stroke=""#);
        s.push_str(color);
        s.push_str(r#"" stroke-width="1.5" points=""#);
        for (i, &(x, y)) in points.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{:.3},{:.3}", self.px(x), self.py(y)).unwrap();
        }
        s.push_str("\"/>\n");
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

// Vertical scale: a high quantile, so an integrable singularity does not
// flatten the rest of the curve.
fn y_scale(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    let q = v[((v.len() - 1) as f64 * 0.98) as usize];
    let top = if q > 0.0 { q * 1.1 } else { v[v.len() - 1] };
    if top > 0.0 {
        top
    } else {
        1.0
    }
}

/// A density curve with tick marks at the piece-image endpoints.
pub fn density_svg(points: &[(f64, f64)], support: (f64, f64), breakpoints: &[f64], title: &str) -> Result<String> {
    if points.len() < 2 {
        return Err(CliError::Input("nothing to plot".into()));
    }
    let frame = Frame { x: support, y_max: y_scale(points.iter().map(|p| p.1)) };
    let mut s = frame.open(title);
    let base = HEIGHT - MARGIN;
    for &b in breakpoints {
        let x = frame.px(b);
        writeln!(s, r#"<line x1="{x:.3}" y1="{base}" x2="{x:.3}" y2="{:.3}" stroke="gray"/>"#, base + 6.0).unwrap();
    }
    frame.polyline(&mut s, points, "steelblue");
    s.push_str("</svg>\n");
    Ok(s)
}

/// A 128-bin density-scaled histogram with an optional reference curve.
pub fn histogram_svg(
    samples: &[f64],
    range: (f64, f64),
    reference: Option<&[(f64, f64)]>,
    title: &str,
) -> Result<String> {
    if samples.is_empty() {
        return Err(CliError::Input("cannot plot an empty empirical measure".into()));
    }
    if !(range.0 < range.1) {
        return Err(CliError::Input("histogram range is empty".into()));
    }
    let width = (range.1 - range.0) / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &y in samples {
        let k = ((y - range.0) / width).floor();
        if k >= 0.0 {
            counts[(k as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    let n = samples.len() as f64;
    let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let reference_heights = reference.into_iter().flatten().map(|p| p.1);
    let frame = Frame { x: range, y_max: y_scale(heights.iter().copied().chain(reference_heights)) };
    let mut s = frame.open(title);
    for (k, &h) in heights.iter().enumerate() {
        let x0 = frame.px(range.0 + k as f64 * width);
        let x1 = frame.px(range.0 + (k + 1) as f64 * width);
        let top = frame.py(h);
        writeln!(
            s,
            r#"<rect x="{x0:.3}" y="{top:.3}" width="{:.3}" height="{:.3}" fill="lightsteelblue" stroke="white" stroke-width="0.5"/>"#,
            x1 - x0,
            HEIGHT - MARGIN - top
        )
        .unwrap();
    }
    if let Some(points) = reference {
        frame.polyline(&mut s, points, "firebrick");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

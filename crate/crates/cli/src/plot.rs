//! Minimal SVG plots for a quick look at a run; the CSV is the real output.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

const W: f64 = 800.0;
const H: f64 = 450.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x, mut y) = (range(&mut xs.clone()), range(&mut ys.clone()));
        let pad = 0.05 * (y.1 - y.0);
        y = (y.0 - pad, y.1 + pad);
        Self { x, y }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN.0 + (x - self.x.0) / (self.x.1 - self.x.0) * (W - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN.3 - (y - self.y.0) / (self.y.1 - self.y.0) * (H - MARGIN.2 - MARGIN.3)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (MARGIN.0, W - MARGIN.1, MARGIN.2, H - MARGIN.3);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for t in ticks(f.x.0, f.x.1) {
        let x = f.px(t);
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{y1}" x2="{x:.1}" y2="{}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, y1 + 18.0, fmt_tick(t));
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="12">{}</text>"#, x0 - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, (x0 + x1) / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#) + "\n"
        + r#"<rect width="100%" height="100%" fill="white"/>"# + "\n"
}

/// Several series sharing one x axis, with a legend when there is more than one.
pub fn line_plot(
    path: &Path,
    title: &str,
    labels: (&str, &str),
    x: &[f64],
    series: &[(&str, &[f64])],
) -> Result<(), CliError> {
    let f = Frame::new(x.iter().copied(), series.iter().flat_map(|s| s.1.iter().copied()));
    let mut svg = open();
    axes(&mut svg, &f, title, labels.0, labels.1);
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, (&xi, &yi)) in x.iter().zip(ys.iter()).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, f.px(xi), f.py(yi));
        }
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1"/>"#);
        if series.len() > 1 {
            let y = MARGIN.2 + 16.0 + 16.0 * k as f64;
            let x0 = W - MARGIN.1 - 130.0;
            let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x0 + 20.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, x0 + 26.0, y + 4.0, escape(name));
        }
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

pub fn scatter_plot(path: &Path, title: &str, labels: (&str, &str), points: &[(f64, f64)]) -> Result<(), CliError> {
    let f = Frame::new(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut svg = open();
    axes(&mut svg, &f, title, labels.0, labels.1);
    for &(x, y) in points {
        let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="0.8" fill="{}"/>"#, f.px(x), f.py(y), COLORS[0]);
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 250.0), vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0]);
        assert_eq!(fmt_tick(0.30000000000000004), "0.3");
    }

    #[test]
    fn writes_well_formed_svg() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.svg");
        let x = [0.0, 1.0, 2.0];
        line_plot(&path, "a < b", ("t", "z"), &x, &[("up", &[1.0, 2.0, 1.0]), ("down", &[0.0, 0.0, 0.0])]).unwrap();
        let s = std::fs::read_to_string(&path).unwrap();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>") && s.contains("a &lt; b"));
        scatter_plot(&path, "flat", ("z", "v"), &[(1.0, 1.0)]).unwrap();
    }
}

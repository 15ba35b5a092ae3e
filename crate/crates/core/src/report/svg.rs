use std::fmt::Write;

use super::format::fmt_sig;
use super::ComparisonReport;
use crate::samples::{ecdf, GroupedSamples};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const BAR_LEVEL: f64 = 0.02;

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.lo) / (self.hi - self.lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, p: f64) -> f64 {
        HEIGHT - BOTTOM - p * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn step_points(values: &[f64], f: &Frame) -> String {
    let cdf = ecdf(values);
    let n = cdf.n() as f64;
    let mut pts = vec![(f.px(f.lo), f.py(0.0))];
    let mut prev = 0.0;
    for (&v, &c) in cdf.jump_points().iter().zip(cdf.cum_counts()) {
        let p = c as f64 / n;
        pts.push((f.px(v), f.py(prev)));
        pts.push((f.px(v), f.py(p)));
        prev = p;
    }
    pts.push((f.px(f.hi), f.py(prev)));
    pts.iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Standalone SVG of both ECDFs, with a thick bar near probability 0.02
/// over each rejected range.
pub fn render_svg(r: &ComparisonReport, g: &GroupedSamples) -> String {
    let min = g.x()[0].min(g.y()[0]);
    let max = g.x()[g.n_x() - 1].max(g.y()[g.n_y() - 1]);
    let span = if max > min { max - min } else { 1.0 };
    let f = Frame {
        lo: min - 0.05 * span,
        hi: max + 0.05 * span,
    };
    let (x0, x1) = (f.px(f.lo), f.px(f.hi));
    let (y0, y1) = (f.py(0.0), f.py(1.0));
    let by = escape(&r.by_name);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">Empirical CDFs of {}</text>"#,
        (x0 + x1) / 2.0,
        escape(&r.var_name)
    );

    // axes and ticks
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for t in nice_ticks(f.lo, f.hi, 5) {
        let x = f.px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            fmt_sig(t, 4)
        );
    }
    for i in 0..=5 {
        let p = i as f64 / 5.0;
        let y = f.py(p);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            fmt_sig(p, 2)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(&r.var_name)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">Cumulative probability</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    let curves = [
        (g.x(), &r.labels.0, "#1f4e9c", ""),
        (g.y(), &r.labels.1, "#c0392b", r#" stroke-dasharray="6 3""#),
    ];
    for (values, _, color, dash) in &curves {
        let _ = writeln!(
            s,
            r#"<polyline class="ecdf" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            step_points(values, &f)
        );
    }

    let bar_y = f.py(BAR_LEVEL);
    for range in r.ranges.iter() {
        let a = f.px(range.from);
        let w = (f.px(range.to) - a).max(2.0);
        let _ = writeln!(
            s,
            r#"<rect class="reject-bar" x="{a:.2}" y="{:.2}" width="{w:.2}" height="6" fill="black"/>"#,
            bar_y - 3.0
        );
    }

    // legend
    let lx = x1 + 15.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, (_, label, color, dash)) in curves.iter().enumerate() {
        let y = TOP + 20.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{by}={}</text>"#,
            lx + 30.0,
            y + 4.0,
            escape(label)
        );
    }
    if !r.ranges.is_empty() {
        let y = TOP + 60.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="25" height="6" fill="black"/>"#,
            y - 3.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">rejected ({}% FWER)</text>"#,
            lx + 30.0,
            y + 4.0,
            (r.alpha * 100.0).round()
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

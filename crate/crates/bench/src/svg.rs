//! Minimal SVG charts: box plots per method and overlaid line series.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + hi.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Frame { lo: lo - pad, hi: hi + pad }
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (H - TOP - BOTTOM) * (self.hi - v) / (self.hi - self.lo)
    }
}

fn open(out: &mut String, title: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let v = frame.lo + (frame.hi - frame.lo) * i as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 7.0, y + 4.0, fmt_tick(v));
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// One box (quartiles, whiskers at min/max) per group.
pub fn box_chart(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let frame = Frame::new(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut out = String::new();
    open(&mut out, title, &frame);
    let slot = (W - LEFT - RIGHT) / groups.len().max(1) as f64;
    for (i, (name, values)) in groups.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 20.0, escape(name));
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            continue;
        }
        v.sort_by(f64::total_cmp);
        let [lo, q1, med, q3, hi] = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| frame.y(quantile(&v, q)));
        let half = (slot * 0.25).min(40.0);
        let _ = writeln!(out, r#"<line x1="{cx:.1}" y1="{lo:.1}" x2="{cx:.1}" y2="{hi:.1}" stroke="{color}"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{q3:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>"#,
            cx - half,
            2.0 * half,
            (q1 - q3).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{med:.1}" x2="{:.1}" y2="{med:.1}" stroke="{color}" stroke-width="2"/>"#,
            cx - half,
            cx + half
        );
        for x in &v {
            let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{:.1}" r="2" fill="{color}"/>"#, frame.y(*x));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Overlaid polylines indexed `0..len`, with a legend.
pub fn line_chart(title: &str, x_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let frame = Frame::new(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut out = String::new();
    open(&mut out, title, &frame);
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let span = (len.max(2) - 1) as f64;
    let x = |i: usize| LEFT + (W - LEFT - RIGHT) * i as f64 / span;
    for t in [0, len.saturating_sub(1) / 2, len.saturating_sub(1)] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{t}</text>"#, x(t), H - BOTTOM + 16.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    if frame.lo < 0.0 && frame.hi > 0.0 {
        let y = frame.y(0.0);
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#999" stroke-dasharray="4 3"/>"##, W - RIGHT);
    }
    for (i, (name, v)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(k, y)| format!("{:.1},{:.1}", x(k), frame.y(*y)))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = TOP + 14.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - 150.0, W - 130.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, W - 125.0, ly + 4.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

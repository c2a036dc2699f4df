//! Static SVG figures: filter response, segmentation overlay and the
//! per-cycle prediction heatmap.

use std::fmt::Write as _;

use breathscreen_core::data::Label;
use breathscreen_core::dsp::{FilterSpec, SceneSegmentation};
use breathscreen_core::evaluation::HeatmapGrid;

struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut s = Svg { width, height, body: String::new() };
        s.rect(0.0, 0.0, width, height, "#ffffff", None);
        s
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke.map(|c| format!(" stroke=\"{c}\"")).unwrap_or_default();
        let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"{stroke}/>"#);
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, dash: bool) {
        let dash = if dash { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(self.body, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{dash}/>"#);
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        let mut p = String::new();
        for (x, y) in pts {
            let _ = write!(p, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#, p.trim_end());
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let s = s.replace('&', "&amp;").replace('<', "&lt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{s}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Data-to-pixel mapping of a rectangular plot area.
struct Axes {
    x: (f64, f64),
    y: (f64, f64),
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Axes {
    fn new(x: (f64, f64), y: (f64, f64), width: f64, height: f64) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Axes { x: pad(x), y: pad(y), left: 60.0, top: 30.0, w: width - 80.0, h: height - 70.0 }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (1.0 - (y - self.y.0) / (self.y.1 - self.y.0)) * self.h
    }

    fn draw(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        svg.rect(self.left, self.top, self.w, self.h, "none", Some("#333333"));
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            svg.line(xp, self.top + self.h, xp, self.top + self.h + 4.0, "#333333", false);
            svg.text(xp, self.top + self.h + 16.0, &tick(xv), "middle", 10.0);
            svg.line(self.left - 4.0, yp, self.left, yp, "#333333", false);
            svg.text(self.left - 6.0, yp + 3.0, &tick(yv), "end", 10.0);
        }
        svg.text(self.left + self.w / 2.0, 18.0, title, "middle", 13.0);
        svg.text(self.left + self.w / 2.0, self.top + self.h + 34.0, xlabel, "middle", 11.0);
        svg.text(12.0, self.top - 10.0, ylabel, "start", 11.0);
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.1e}")
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Gain of the brick-wall filter for an `n`-sample input, up to Nyquist.
pub fn filter_response(spec: &FilterSpec, n: usize) -> String {
    let fs = spec.sample_rate_hz();
    let mut svg = Svg::new(640.0, 360.0);
    let ax = Axes::new((0.0, fs / 2.0), (0.0, 1.1), 640.0, 360.0);
    ax.draw(&mut svg, &format!("Low-pass response, cutoff {} Hz, n = {n}", spec.cutoff_hz()), "frequency (Hz)", "gain");
    let mut pts = Vec::with_capacity(n + 2);
    let mut prev = None;
    for k in 0..=n / 2 {
        let g = if spec.passes(k, n) { 1.0 } else { 0.0 };
        let f = k as f64 * fs / n as f64;
        if let Some(p) = prev {
            if p != g {
                pts.push((ax.px(f), ax.py(p)));
            }
        }
        pts.push((ax.px(f), ax.py(g)));
        prev = Some(g);
    }
    svg.polyline(&pts, "#1f77b4", 2.0);
    let c = ax.px(spec.cutoff_hz());
    svg.line(c, ax.top, c, ax.top + ax.h, "#d62728", true);
    svg.finish()
}

/// Raw and filtered gyro-y of one trimmed scene with detected extrema and
/// cycle windows. `truth_starts` are optional reference cycle starts in
/// trimmed sample coordinates.
pub fn segmentation_overlay(seg: &SceneSegmentation, title: &str, truth_starts: &[f64]) -> String {
    let fs = seg.trimmed.sample_rate_hz();
    let raw = seg.trimmed.gyro_y();
    let n = raw.len();
    let (lo, hi) = range(raw.iter().chain(&seg.filtered_gyro_y).copied());
    let pad = 0.05 * (hi - lo).max(1e-9);
    let mut svg = Svg::new(900.0, 380.0);
    let ax = Axes::new((0.0, (n.max(2) - 1) as f64 / fs), (lo - pad, hi + pad), 900.0, 380.0);
    ax.draw(&mut svg, title, "time after trim (s)", "gyro y (rad/s)");
    for c in &seg.cycles {
        let x = ax.px(c.source_window.0 as f64 / fs);
        svg.line(x, ax.top, x, ax.top + ax.h, "#bbbbbb", false);
    }
    for &t in truth_starts {
        let x = ax.px(t / fs);
        svg.line(x, ax.top, x, ax.top + ax.h, "#2ca02c", true);
    }
    let pts = |v: &[f64]| v.iter().enumerate().map(|(i, &y)| (ax.px(i as f64 / fs), ax.py(y))).collect::<Vec<_>>();
    svg.polyline(&pts(&raw), "#aaaaaa", 1.0);
    svg.polyline(&pts(&seg.filtered_gyro_y), "#1f77b4", 2.0);
    for &m in &seg.peaks.maxima {
        svg.circle(ax.px(m as f64 / fs), ax.py(seg.filtered_gyro_y[m]), 4.0, "#d62728");
    }
    for &m in &seg.peaks.minima {
        svg.circle(ax.px(m as f64 / fs), ax.py(seg.filtered_gyro_y[m]), 3.0, "#9467bd");
    }
    svg.finish()
}

fn color(p: f64) -> String {
    let p = p.clamp(0.0, 1.0);
    let (r, g, b) = if p < 0.5 {
        let f = p * 2.0;
        (49.0 + f * 206.0, 130.0 + f * 125.0, 189.0 + f * 66.0)
    } else {
        let f = (p - 0.5) * 2.0;
        (255.0 - f * 41.0, 255.0 - f * 216.0, 255.0 - f * 215.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Patients as columns, cycle ordinals as rows, ground truth as the last
/// row. Missing cycles are drawn as grey "NA" cells.
pub fn heatmap(grid: &HeatmapGrid, title: &str) -> String {
    let cols = grid.columns.len().max(1);
    let cell = (760.0 / cols as f64).clamp(8.0, 40.0);
    let left = 90.0;
    let top = 40.0;
    let width = left + cell * cols as f64 + 20.0;
    let height = top + cell * (grid.cycles + 1) as f64 + 70.0;
    let mut svg = Svg::new(width.max(300.0), height);
    svg.text(width.max(300.0) / 2.0, 22.0, title, "middle", 13.0);
    for r in 0..=grid.cycles {
        let y = top + r as f64 * cell;
        let name = if r < grid.cycles { format!("cycle {}", r + 1) } else { "ground truth".into() };
        svg.text(left - 6.0, y + cell / 2.0 + 4.0, &name, "end", 10.0);
        for (c, col) in grid.columns.iter().enumerate() {
            let x = left + c as f64 * cell;
            let v = if r < grid.cycles { col.probs[r] } else { Some(if col.label == Label::NH { 1.0 } else { 0.0 }) };
            match v {
                Some(p) => svg.rect(x, y, cell, cell, &color(p), Some("#ffffff")),
                None => {
                    svg.rect(x, y, cell, cell, "#e0e0e0", Some("#ffffff"));
                    svg.text(x + cell / 2.0, y + cell / 2.0 + 3.0, "NA", "middle", (cell / 3.0).min(9.0));
                }
            }
        }
    }
    let base = top + (grid.cycles + 1) as f64 * cell;
    for (c, col) in grid.columns.iter().enumerate() {
        let x = left + c as f64 * cell + cell / 2.0;
        let _ = writeln!(
            svg.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="9" text-anchor="end" transform="rotate(-60 {x:.2} {y:.2})">{}</text>"#,
            col.patient_id.replace('&', "&amp;").replace('<', "&lt;"),
            y = base + 10.0
        );
    }
    svg.finish()
}

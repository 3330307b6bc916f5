//! Static SVG plots: convergence traces and landscape contours.

use std::fmt::Write;

use eqdrop_core::sgd::TrainTrace;
use eqdrop_core::verify::LandscapeGrid;

const WIDTH: f64 = 720.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
/// Landscape heatmaps are resampled to at most this many cells per axis.
const MAX_CELLS: usize = 128;
const CONTOUR_LEVELS: usize = 12;

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e4 || x.abs() < 1e-2 {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

/// Maps a data rectangle onto a pixel rectangle (y grows upwards in data).
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xlo: f64,
    xhi: f64,
    ylo: f64,
    yhi: f64,
}

impl Frame {
    fn new(x0: f64, y0: f64, w: f64, h: f64, (xlo, xhi): (f64, f64), (ylo, yhi): (f64, f64)) -> Self {
        let widen = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (xlo, xhi) = widen(xlo, xhi);
        let (ylo, yhi) = widen(ylo, yhi);
        Self { x0, y0, w, h, xlo, xhi, ylo, yhi }
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ylo) / (self.yhi - self.ylo) * self.h
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.xlo + f * (self.xhi - self.xlo);
            let yv = self.ylo + f * (self.yhi - self.ylo);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                out,
                r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                y0 + h,
                y0 + h + 4.0,
                y0 + h + 16.0,
                fmt_tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                py + 4.0,
                fmt_tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + w / 2.0,
            y0 + h + 32.0,
            escape(xlabel)
        );
        let (lx, ly) = (x0 - 62.0, y0 + h / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
            escape(ylabel)
        );
    }

    fn polyline(&self, out: &mut String, xs: &[f64], ys: &[f64], style: &str) {
        let mut pts = String::new();
        for (&x, &y) in xs.iter().zip(ys) {
            if y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
            }
        }
        let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, pts.trim_end());
    }
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Objective (with the optimum as a dashed line) above importance-score
/// variance, both against the step count.
pub fn convergence_svg(trace: &TrainTrace, optimum: f64, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, 640.0, title);
    let xs: Vec<f64> = trace.steps.iter().map(|&s| s as f64).collect();
    let xr = (0.0, xs.last().copied().unwrap_or(1.0));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;

    let (lo, hi) = range(trace.objective.iter().copied().chain([optimum]));
    let top = Frame::new(MARGIN_LEFT, 40.0, pw, 230.0, xr, (lo, hi));
    top.axes(&mut out, "step", "objective");
    top.polyline(&mut out, &xs, &trace.objective, r##"stroke="#1f77b4" stroke-width="1.5""##);
    if optimum.is_finite() {
        let y = top.py(optimum);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            top.x0,
            top.x0 + top.w
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.2}" font-size="11" text-anchor="end" fill="#d62728">optimum {}</text>"##,
            top.x0 + top.w - 4.0,
            y - 4.0,
            fmt_tick(optimum)
        );
    }

    let (vlo, vhi) = range(trace.importance_variance.iter().copied());
    let bottom = Frame::new(MARGIN_LEFT, 340.0, pw, 230.0, xr, (vlo.min(0.0), vhi.max(0.0)));
    bottom.axes(&mut out, "step", "importance-score variance");
    bottom.polyline(&mut out, &xs, &trace.importance_variance, r##"stroke="#2ca02c" stroke-width="1.5""##);
    out.push_str("</svg>\n");
    out
}

fn color(t: f64) -> String {
    // Dark blue at the minimum through to pale yellow.
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(30.0, 250.0), lerp(40.0, 240.0), lerp(120.0, 170.0))
}

/// Nearest-sample resampling of the grid onto at most `MAX_CELLS` per axis.
fn resample(grid: &LandscapeGrid) -> (usize, Vec<f64>) {
    let k = grid.n.min(MAX_CELLS);
    let idx = |a: usize| if k == 1 { 0 } else { (a * (grid.n - 1) + (k - 1) / 2) / (k - 1) };
    let mut values = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            values.push(grid.values[idx(a) * grid.n + idx(b)]);
        }
    }
    (k, values)
}

/// Marching squares on a `k × k` sample grid; returns segments in sample
/// coordinates `(i, j)`.
fn contour_segments(k: usize, values: &[f64], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    let at = |i: usize, j: usize| values[i * k + j];
    let cross = |(i0, j0): (usize, usize), (i1, j1): (usize, usize)| {
        let (a, b) = (at(i0, j0), at(i1, j1));
        let t = if a == b { 0.5 } else { (level - a) / (b - a) };
        (i0 as f64 + t * (i1 as f64 - i0 as f64), j0 as f64 + t * (j1 as f64 - j0 as f64))
    };
    for i in 0..k.saturating_sub(1) {
        for j in 0..k - 1 {
            let corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (p, q) = (corners[e], corners[(e + 1) % 4]);
                if (at(p.0, p.1) < level) != (at(q.0, q.1) < level) {
                    pts.push(cross(p, q));
                }
            }
            match pts.len() {
                2 => segs.push([pts[0], pts[1]]),
                4 => {
                    segs.push([pts[0], pts[1]]);
                    segs.push([pts[2], pts[3]]);
                }
                _ => {}
            }
        }
    }
    segs
}

/// Heatmap of `log(1 + f)` with contour lines and the grid argmin marked.
/// The horizontal axis is `u2`, the vertical axis `u1`.
pub fn landscape_svg(grid: &LandscapeGrid, title: &str) -> String {
    let mut out = String::new();
    let side = 560.0;
    header(&mut out, side + 100.0, title);
    let frame = Frame::new(MARGIN_LEFT, 40.0, side, side, (grid.lo, grid.hi), (grid.lo, grid.hi));

    let (k, samples) = resample(grid);
    let shade: Vec<f64> = samples.iter().map(|&v| (v.max(0.0)).ln_1p()).collect();
    let (slo, shi) = range(shade.iter().copied());
    let span = if shi > slo { shi - slo } else { 1.0 };
    let step = (grid.hi - grid.lo) / k as f64;
    let cell = side / k as f64;
    for a in 0..k {
        for b in 0..k {
            let x = frame.x0 + b as f64 * cell;
            let y = frame.y0 + side - (a + 1) as f64 * cell;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cell + 0.3,
                cell + 0.3,
                color((shade[a * k + b] - slo) / span)
            );
        }
    }

    // Sample (i, j) sits at the centre of its cell.
    let to_px = |(i, j): (f64, f64)| {
        (frame.px(grid.lo + (j + 0.5) * step), frame.py(grid.lo + (i + 0.5) * step))
    };
    for l in 1..=CONTOUR_LEVELS {
        let level = (slo + span * l as f64 / (CONTOUR_LEVELS + 1) as f64).exp_m1();
        let mut d = String::new();
        for [p, q] in contour_segments(k, &samples, level) {
            let ((x1, y1), (x2, y2)) = (to_px(p), to_px(q));
            let _ = write!(d, "M{x1:.2} {y1:.2}L{x2:.2} {y2:.2}");
        }
        if !d.is_empty() {
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="black" stroke-width="0.6" stroke-opacity="0.7"/>"#);
        }
    }

    let (u1, u2) = grid.argmin_point();
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#d62728" stroke="white"/>"##,
        frame.px(u2),
        frame.py(u1)
    );
    frame.axes(&mut out, "u2", "u1");
    out.push_str("</svg>\n");
    out
}

use std::fmt::Write as _;
use std::path::Path;

use super::FormatError;
use crate::driver::ConvergenceRecord;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const GAP: f64 = 90.0;

/// One labelled convergence curve.
#[derive(Debug, Clone, Copy)]
pub struct PlotRun<'a> {
    pub label: &'a str,
    pub records: &'a [ConvergenceRecord],
}

struct Series {
    iter: Vec<(f64, f64)>,
    time: Vec<(f64, f64)>,
}

fn series(run: &PlotRun<'_>) -> Series {
    let mut iter = Vec::new();
    let mut time = Vec::new();
    let mut elapsed = 0.0;
    for r in run.records {
        elapsed += r.wall_ms;
        if let Some(o) = r.objective {
            if o.total > 0.0 && o.total.is_finite() {
                iter.push((r.iteration as f64, o.total));
                time.push((elapsed, o.total));
            }
        }
    }
    Series { iter, time }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn linear(points: impl Iterator<Item = f64>) -> Self {
        let hi = points.fold(0.0_f64, f64::max);
        Axis {
            lo: 0.0,
            hi: if hi > 0.0 { hi } else { 1.0 },
        }
    }

    // Decade-aligned log10 bounds.
    fn log(points: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = lo.min(p.log10());
            hi = hi.max(p.log10());
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        let (lo, hi) = (lo.floor(), hi.ceil());
        Axis {
            lo,
            hi: if hi > lo { hi } else { lo + 1.0 },
        }
    }

    fn frac(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }
}

fn panel(out: &mut String, x0: f64, title: &str, x_label: &str, runs: &[(&str, Vec<(f64, f64)>)]) {
    let xs = Axis::linear(runs.iter().flat_map(|(_, s)| s.iter().map(|p| p.0)));
    let ys = Axis::log(runs.iter().flat_map(|(_, s)| s.iter().map(|p| p.1)));
    let px = |x: f64| x0 + MARGIN_L + xs.frac(x) * PANEL_W;
    let py = |y: f64| MARGIN_T + (1.0 - ys.frac(y.log10())) * PANEL_H;

    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{MARGIN_T}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##,
        x0 + MARGIN_L
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + MARGIN_L + PANEL_W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + MARGIN_L + PANEL_W / 2.0,
        MARGIN_T + PANEL_H + 38.0,
        escape(x_label)
    );
    for k in 0..=4 {
        let x = xs.lo + (xs.hi - xs.lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            px(x),
            MARGIN_T + PANEL_H + 16.0,
            tick_label(x)
        );
    }
    let mut e = ys.lo;
    while e <= ys.hi {
        let y = MARGIN_T + (1.0 - ys.frac(e)) * PANEL_H;
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">1e{}</text>"##,
            x0 + MARGIN_L,
            x0 + MARGIN_L + PANEL_W,
            x0 + MARGIN_L - 6.0,
            y + 3.0,
            e as i64
        );
        e += 1.0;
    }
    for (i, (_, pts)) in runs.iter().enumerate() {
        let mut d = String::new();
        for &(x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            d.trim_end()
        );
    }
}

fn tick_label(x: f64) -> String {
    if x >= 100.0 || x == x.round() {
        format!("{x:.0}")
    } else {
        format!("{x:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Objective against iteration (left) and cumulative wall time (right), both
/// on a log scale. Records without an objective are skipped.
pub fn render_svg_plot(runs: &[PlotRun<'_>]) -> String {
    let all: Vec<(&str, Series)> = runs.iter().map(|r| (r.label, series(r))).collect();
    let by_iter: Vec<_> = all.iter().map(|(l, s)| (*l, s.iter.clone())).collect();
    let by_time: Vec<_> = all.iter().map(|(l, s)| (*l, s.time.clone())).collect();

    let panel_span = MARGIN_L + PANEL_W;
    let width = 2.0 * panel_span + GAP;
    let legend_h = 18.0 * runs.len() as f64;
    let height = MARGIN_T + PANEL_H + MARGIN_B + legend_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(
        &mut out,
        0.0,
        "objective vs iteration",
        "iteration",
        &by_iter,
    );
    panel(
        &mut out,
        panel_span + GAP,
        "objective vs time",
        "time (ms)",
        &by_time,
    );
    for (i, (label, _)) in all.iter().enumerate() {
        let y = MARGIN_T + PANEL_H + MARGIN_B + 18.0 * i as f64 + 4.0;
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN_L}" y1="{y}" x2="{:.1}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            MARGIN_L + 24.0,
            PALETTE[i % PALETTE.len()],
            MARGIN_L + 30.0,
            y + 4.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg_plot(runs: &[PlotRun<'_>], path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path, render_svg_plot(runs))?;
    Ok(())
}

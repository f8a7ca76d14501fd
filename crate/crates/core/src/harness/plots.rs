//! Static SVG line charts, one series per algorithm.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::metrics::{Trace, TraceField};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// `(file stem, title, field, log scale, plot |y|)`
pub const CHARTS: [(&str, &str, TraceField, bool, bool); 5] = [
    (
        "objective",
        "Objective at the mean iterate",
        TraceField::Objective,
        false,
        false,
    ),
    (
        "feasibility_gap",
        "Feasibility gap",
        TraceField::FeasibilityGap,
        true,
        false,
    ),
    (
        "consensus_error",
        "Consensus error",
        TraceField::ConsensusError,
        true,
        false,
    ),
    (
        "grad_sum_norm",
        "Norm of the summed trackers",
        TraceField::GradSumNorm,
        true,
        false,
    ),
    (
        "optimality_gap",
        "|Optimality gap|",
        TraceField::OptimalityGap,
        true,
        true,
    ),
];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let v = if log { v.log10() } else { v };
            (lo.min(v), hi.max(v))
        });
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi, log }
    }

    fn fraction(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push((10f64.powf(e), format!("1e{}", e as i64)));
                e += step;
            }
            out
        } else {
            (0..=5)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 5.0;
                    (v, format!("{v:.3e}"))
                })
                .collect()
        }
    }
}

fn plottable(y: f64, log: bool) -> bool {
    y.is_finite() && (!log || y > 0.0)
}

/// Renders one chart. Points that cannot be drawn (non-finite, or
/// non-positive on a log axis) split a series into separate polylines.
pub fn render_chart(traces: &[(String, Trace)], title: &str, field: TraceField, log: bool, absolute: bool) -> String {
    let value = |r: &crate::metrics::TraceRecord| {
        let y = r.field(field);
        if absolute {
            y.abs()
        } else {
            y
        }
    };
    let xs = traces.iter().flat_map(|(_, t)| t.records.iter().map(|r| r.n as f64));
    let x_axis = Axis::new(xs, false);
    let ys = traces
        .iter()
        .flat_map(|(_, t)| t.records.iter().map(value))
        .filter(|&y| plottable(y, log));
    let y_axis = Axis::new(ys, log);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x_axis.fraction(x) * plot_w;
    let py = |y: f64| TOP + (1.0 - y_axis.fraction(y)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for (v, label) in y_axis.ticks() {
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for (v, _) in x_axis.ticks() {
        let x = px(v);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            v.round()
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration n</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (k, (name, trace)) in traces.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for r in &trace.records {
            let y = value(r);
            if plottable(y, log) {
                segments.last_mut().expect("nonempty").push((px(r.n as f64), py(y)));
            } else if !segments.last().expect("nonempty").is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let points: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(name),
                points.join(" ")
            );
        }
        let ly = TOP + 16.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes the five standard charts into `dir`.
pub fn emit_plots(traces: &[(String, Trace)], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::NoTraces);
    }
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    CHARTS
        .iter()
        .map(|&(stem, title, field, log, absolute)| {
            let path = dir.join(format!("{stem}.svg"));
            fs::write(&path, render_chart(traces, title, field, log, absolute)).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

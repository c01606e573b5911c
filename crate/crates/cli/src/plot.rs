//! SVG violin plots of per-run Spearman values.
//!
//! One panel per (extractor, perturbation) summary and one violin per metric:
//! a Gaussian kernel density silhouette with Silverman bandwidth, the
//! interquartile range as a bar, Tukey whiskers at 1.5·IQR, the median as a
//! white dot and every run as a small point.

use std::f64::consts::PI;
use std::fmt::Write;

use ggmeval::harness::{quantile, MetricSummary};
use ggmeval::ExperimentSummary;

use crate::report::ReportDocument;

const SLOT_WIDTH: f64 = 90.0;
const LEFT: f64 = 60.0;
const PANEL_HEIGHT: f64 = 260.0;
const PANEL_TOP: f64 = 40.0;
const PLOT_HEIGHT: f64 = 180.0;
const GRID_POINTS: usize = 64;

/// Shape of one violin in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolinGeometry {
    pub values: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// `(y, density)` pairs, empty for a degenerate violin.
    pub density: Vec<(f64, f64)>,
}

impl ViolinGeometry {
    pub fn is_degenerate(&self) -> bool {
        self.density.is_empty()
    }
}

/// Silverman's rule of thumb `0.9·min(s, IQR/1.34)·n^(−1/5)`, falling back
/// to the standard deviation alone when the IQR is zero.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    if sorted.len() < 2 {
        return 0.0;
    }
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

pub fn violin_geometry(values: &[f64]) -> ViolinGeometry {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let whisker_low = sorted.iter().copied().find(|&v| v >= q1 - 1.5 * iqr).unwrap_or(q1);
    let whisker_high = sorted.iter().rev().copied().find(|&v| v <= q3 + 1.5 * iqr).unwrap_or(q3);
    let h = silverman_bandwidth(&sorted);
    let density = if h > 0.0 {
        let lo = (sorted[0] - 3.0 * h).max(-1.0);
        let hi = (sorted[sorted.len() - 1] + 3.0 * h).min(1.0);
        let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
        (0..GRID_POINTS)
            .map(|i| {
                let y = lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64;
                let f: f64 = sorted.iter().map(|v| (-0.5 * ((y - v) / h).powi(2)).exp()).sum();
                (y, f * norm)
            })
            .collect()
    } else {
        Vec::new()
    };
    ViolinGeometry {
        values: values.to_vec(),
        median: quantile(&sorted, 0.5),
        q1,
        q3,
        whisker_low,
        whisker_high,
        density,
    }
}

fn y_of(panel: usize, v: f64) -> f64 {
    let top = PANEL_TOP + panel as f64 * PANEL_HEIGHT;
    top + (1.0 - v.clamp(-1.0, 1.0)) / 2.0 * PLOT_HEIGHT
}

fn draw_violin(svg: &mut String, panel: usize, slot: usize, m: &MetricSummary) {
    let cx = LEFT + (slot as f64 + 0.5) * SLOT_WIDTH;
    let half = 0.4 * SLOT_WIDTH;
    let g = violin_geometry(&m.spearman);
    let _ = writeln!(svg, r#"<g class="violin" data-metric="{}">"#, m.metric);
    if g.is_degenerate() {
        let _ = writeln!(
            svg,
            r##"<rect class="body degenerate" x="{:.2}" y="{:.2}" width="{:.2}" height="0" fill="none" stroke="#4c72b0" stroke-width="2"/>"##,
            cx - half,
            y_of(panel, g.median),
            2.0 * half
        );
    } else {
        let peak = g.density.iter().map(|&(_, f)| f).fold(0.0, f64::max);
        let mut d = String::new();
        for (i, &(y, f)) in g.density.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2},{:.2} ", cx + half * f / peak, y_of(panel, y));
        }
        for &(y, f) in g.density.iter().rev() {
            let _ = write!(d, "L{:.2},{:.2} ", cx - half * f / peak, y_of(panel, y));
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r##"<path class="body" d="{d}" fill="#a1c4e8" stroke="#4c72b0"/>"##
        );
    }
    let _ = writeln!(
        svg,
        r##"<line class="whisker" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#222"/>"##,
        y_of(panel, g.whisker_low),
        y_of(panel, g.whisker_high)
    );
    let _ = writeln!(
        svg,
        r##"<rect class="iqr" x="{:.2}" y="{:.2}" width="6" height="{:.2}" fill="#222"/>"##,
        cx - 3.0,
        y_of(panel, g.q3),
        y_of(panel, g.q1) - y_of(panel, g.q3)
    );
    for v in &g.values {
        let _ = writeln!(
            svg,
            r##"<circle class="point" cx="{:.2}" cy="{:.2}" r="1.5" fill="#555"/>"##,
            cx + 10.0,
            y_of(panel, *v)
        );
    }
    let _ = writeln!(
        svg,
        r##"<circle class="median" cx="{cx:.2}" cy="{:.2}" r="3" fill="#fff" stroke="#222"/>"##,
        y_of(panel, g.median)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        y_of(panel, -1.0) + 16.0,
        m.metric
    );
    svg.push_str("</g>\n");
}

fn draw_panel(svg: &mut String, panel: usize, s: &ExperimentSummary) {
    let top = PANEL_TOP + panel as f64 * PANEL_HEIGHT;
    let right = LEFT + s.metrics.len() as f64 * SLOT_WIDTH;
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT:.2}" y="{:.2}" font-size="13">{} / {}</text>"#,
        top - 12.0,
        s.extractor,
        s.perturbation
    );
    for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let y = y_of(panel, tick);
        let _ = writeln!(
            svg,
            r##"<line class="grid" x1="{LEFT:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{tick:.1}</text>"#,
            LEFT - 6.0,
            y + 3.0
        );
    }
    for (slot, m) in s.metrics.iter().enumerate() {
        draw_violin(svg, panel, slot, m);
    }
}

/// Render every summary of a report. Output depends only on the report.
pub fn render_svg(report: &ReportDocument) -> String {
    let slots = report.summaries.iter().map(|s| s.metrics.len()).max().unwrap_or(0);
    let width = LEFT + slots.max(1) as f64 * SLOT_WIDTH + 20.0;
    let height = PANEL_TOP + report.summaries.len().max(1) as f64 * PANEL_HEIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n");
    for (panel, s) in report.summaries.iter().enumerate() {
        draw_panel(&mut svg, panel, s);
    }
    svg.push_str("</svg>\n");
    svg
}

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::run::{EvalReport, SweepPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Run,
    Mean,
    Sd,
}

/// One CSV line of an exported report. Summary rows leave `run` and `seed` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: RowKind,
    pub system: String,
    pub augmentation: String,
    pub m: usize,
    pub run: Option<usize>,
    pub seed: Option<u64>,
    pub dev_uar: f64,
    pub test_uar: f64,
}

pub fn report_rows(report: &EvalReport) -> Vec<ReportRow> {
    let base = |kind, run, seed, dev_uar, test_uar| ReportRow {
        kind,
        system: report.config.feature_system.as_str().to_string(),
        augmentation: report.config.augmentation.as_str().to_string(),
        m: report.m_per_class,
        run,
        seed,
        dev_uar,
        test_uar,
    };
    let mut rows: Vec<ReportRow> = report
        .runs
        .iter()
        .map(|r| base(RowKind::Run, Some(r.run), Some(r.seed), r.dev_uar, r.test_uar))
        .collect();
    rows.push(base(RowKind::Mean, None, None, report.dev_mean, report.test_mean));
    rows.push(base(RowKind::Sd, None, None, report.dev_sd, report.test_sd));
    rows
}

/// Per-run rows followed by mean and SD rows, for each report in order.
pub fn export_report(reports: &[EvalReport], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for report in reports {
        for row in report_rows(report) {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn export_curve(points: &[SweepPoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub label: String,
    /// `(x, y, sd)`
    pub points: Vec<(f64, f64, f64)>,
}

impl PlotSeries {
    pub fn dev_curve(label: impl Into<String>, points: &[SweepPoint]) -> Self {
        Self {
            label: label.into(),
            points: points.iter().map(|p| (p.m as f64, p.dev_mean, p.dev_sd)).collect(),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Self {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_axes(svg: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{l}" y1="{b}" x2="{l}" y2="{t}" stroke="black"/>"#);
    for i in 0..=4 {
        let fx = frame.x.0 + (frame.x.1 - frame.x.0) * i as f64 / 4.0;
        let fy = frame.y.0 + (frame.y.1 - frame.y.0) * i as f64 / 4.0;
        let (x, y) = (frame.px(fx), frame.py(fy));
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#, b + 18.0);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.3}</text>"#, l - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, t / 2.0, escape(title));
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn svg_legend(svg: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 10.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 130.0;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(svg, r#"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{c}"/>"#, y - 9.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 14.0, escape(label));
    }
}

fn no_data(svg: &mut String) {
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="gray">no data</text>"#,
        WIDTH / 2.0,
        HEIGHT / 2.0
    );
}

/// Line chart with SD error bars.
pub fn render_plot(series: &[PlotSeries], title: &str, x_label: &str, y_label: &str) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let frame = Frame::fit(pts().map(|p| p.0), pts().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let mut svg = String::new();
    svg_axes(&mut svg, &frame, title, x_label, y_label);
    if pts().next().is_none() {
        no_data(&mut svg);
    }
    for (i, s) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", frame.px(p.0), frame.py(p.1))).collect();
        if !path.is_empty() {
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        }
        for &(x, y, sd) in &s.points {
            let (px, lo, hi) = (frame.px(x), frame.py(y - sd), frame.py(y + sd));
            let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{c}"/>"#);
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}" stroke="{c}"/>"#, px - 4.0, px + 4.0);
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}" stroke="{c}"/>"#, px - 4.0, px + 4.0);
            let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, frame.py(y));
        }
    }
    svg_legend(&mut svg, &series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

pub fn export_plot(series: &[PlotSeries], title: &str, x_label: &str, y_label: &str, path: impl AsRef<Path>) -> Result<()> {
    File::create(path)?.write_all(render_plot(series, title, x_label, y_label).as_bytes())?;
    Ok(())
}

/// Scatter of labelled 2-D points, one color per label.
pub fn render_scatter(points: &[(usize, [f64; 2])], labels: &[String], title: &str) -> String {
    let frame = Frame::fit(points.iter().map(|p| p.1[0]), points.iter().map(|p| p.1[1]));
    let mut svg = String::new();
    svg_axes(&mut svg, &frame, title, "PC 1", "PC 2");
    if points.is_empty() {
        no_data(&mut svg);
    }
    for &(class, [x, y]) in points {
        let c = COLORS[class % COLORS.len()];
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}" fill-opacity="0.6"/>"#, frame.px(x), frame.py(y));
    }
    svg_legend(&mut svg, &labels.iter().map(String::as_str).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    pub mean: Vec<f64>,
    /// Two orthonormal principal directions.
    pub components: [Vec<f64>; 2],
    pub singular_values: Vec<f64>,
    pub projected: Vec<[f64; 2]>,
}

/// Rank-2 PCA through a thin SVD of the centered data.
pub fn pca_2d(rows: &[Vec<f64>]) -> Result<Pca2> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("pca rows"));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::config("pca needs at least one column"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::dims("pca row", d, r.len()));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.ok_or(Error::config("svd did not converge"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let component = |k: usize| -> Vec<f64> {
        match order.get(k) {
            Some(&i) => {
                let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
                // Sign convention: largest-magnitude entry positive.
                let big = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
                if big < 0.0 {
                    v.iter_mut().for_each(|e| *e = -*e);
                }
                v
            }
            None => vec![0.0; d],
        }
    };
    let components = [component(0), component(1)];
    let projected = (0..n)
        .map(|i| {
            let row = x.row(i);
            let dot = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [dot(&components[0]), dot(&components[1])]
        })
        .collect();
    Ok(Pca2 {
        mean,
        components,
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        projected,
    })
}

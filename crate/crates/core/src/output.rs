//! Serialization of run records, sweep summaries and reports: CSV, JSONL,
//! JSON and standalone SVG charts. Every writer is a deterministic function
//! of its input.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::engine::{RunConfig, RunRecord, Violation};
use crate::error::{Error, Result};
use crate::harness::{RobustnessReport, RunSummary};
use crate::metrics::MetricsSample;

pub const CSV_HEADER: &str =
    "t,energy,frame_potential,frame_A,frame_B,coverage,coverage_stderr,min_sep,max_vdev,cube_side";
pub const CSV_COLUMNS: usize = 10;

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 600.0;

/// Shortest round-trip rendering; `nan` for NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn csv_row(s: &MetricsSample) -> [f64; CSV_COLUMNS] {
    [
        s.time,
        s.energy.unwrap_or(f64::NAN),
        s.frame_potential,
        s.frame_bounds.lower,
        s.frame_bounds.upper,
        s.coverage.value,
        s.coverage.std_err,
        s.min_separation,
        s.max_velocity_deviation,
        s.cube_side,
    ]
}

pub fn write_run_csv<W: Write>(record: &RunRecord, mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in &record.samples {
        let row: Vec<String> = csv_row(s).into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn emit_run_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_run_csv(record, &mut buf).map_err(|e| Error::io(path, e))?;
    write_file(path, &buf)
}

/// Parses an emitted run CSV back into numeric rows (`nan` for degenerate
/// energy).
pub fn parse_run_csv(text: &str) -> Result<Vec<[f64; CSV_COLUMNS]>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidConfig("run CSV: unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let mut row = [0.0; CSV_COLUMNS];
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != CSV_COLUMNS {
                return Err(Error::InvalidConfig(format!(
                    "run CSV line {}: wrong field count",
                    i + 2
                )));
            }
            for (slot, f) in row.iter_mut().zip(fields) {
                *slot = f
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("run CSV line {}: bad number `{f}`", i + 2)))?;
            }
            Ok(row)
        })
        .collect()
}

/// One `MetricsSample` JSON object per line.
pub fn write_run_jsonl<W: Write>(record: &RunRecord, mut w: W) -> io::Result<()> {
    for s in &record.samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn emit_run_jsonl(record: &RunRecord, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_run_jsonl(record, &mut buf).map_err(|e| Error::io(path, e))?;
    write_file(path, &buf)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool_version: &'a str,
    prng_name: &'a str,
    config: &'a RunConfig,
    samples: usize,
    violations: &'a [Violation],
}

/// Run metadata next to the CSV/JSONL rows: config, PRNG and violations.
pub fn emit_run_sidecar(record: &RunRecord, path: &Path) -> Result<()> {
    let sidecar = Sidecar {
        tool_version: env!("CARGO_PKG_VERSION"),
        prng_name: &record.prng_name,
        config: &record.config,
        samples: record.samples.len(),
        violations: &record.violations,
    };
    write_json(&sidecar, path)
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn emit_report_json(report: &RobustnessReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

/// A single report is written as an object; several as an array.
pub fn emit_reports_json(reports: &[RobustnessReport], path: &Path) -> Result<()> {
    match reports {
        [one] => emit_report_json(one, path),
        many => write_json(many, path),
    }
}

pub fn emit_summaries(summaries: &[RunSummary], path: &Path) -> Result<()> {
    write_json(summaries, path)
}

pub fn read_summaries(path: &Path) -> Result<Vec<RunSummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// One labelled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Energy,
    FramePotential,
    Coverage,
    MinSeparation,
    MaxVelocityDeviation,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Energy => "energy",
            Metric::FramePotential => "frame_potential",
            Metric::Coverage => "coverage",
            Metric::MinSeparation => "min_sep",
            Metric::MaxVelocityDeviation => "max_vdev",
        }
    }

    fn value(self, s: &MetricsSample) -> Option<f64> {
        match self {
            Metric::Energy => s.energy,
            Metric::FramePotential => Some(s.frame_potential),
            Metric::Coverage => Some(s.coverage.value),
            Metric::MinSeparation => Some(s.min_separation),
            Metric::MaxVelocityDeviation => Some(s.max_velocity_deviation),
        }
    }
}

/// `metric` against time; degenerate samples are skipped.
pub fn run_series(record: &RunRecord, metric: Metric, label: impl Into<String>) -> Series {
    Series {
        label: label.into(),
        points: record
            .samples
            .iter()
            .filter_map(|s| metric.value(s).map(|v| (s.time, v)))
            .collect(),
    }
}

/// `log2(median max energy)` and `log2(median min coverage)` against
/// `log2(n)`. Non-positive or missing values are skipped.
pub fn report_series(report: &RobustnessReport) -> Vec<Series> {
    let log_points = |f: &dyn Fn(&crate::harness::SizeAggregate) -> Option<f64>| {
        report
            .per_n
            .iter()
            .filter_map(|a| f(a).filter(|v| *v > 0.0).map(|v| ((a.n as f64).log2(), v.log2())))
            .collect()
    };
    vec![
        Series {
            label: "log2 median max energy".into(),
            points: log_points(&|a| a.median_max_energy),
        },
        Series {
            label: "log2 median min coverage".into(),
            points: log_points(&|a| Some(a.median_min_coverage)),
        },
    ]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Standalone 800x600 SVG line chart, one polyline per series.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if all.is_empty() {
        return Err(Error::InvalidConfig(
            "nothing to plot: no series with finite points".into(),
        ));
    }
    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(&mut all.iter().map(|p| p.0));
    let (y0, y1) = span(&mut all.iter().map(|p| p.1));

    let (left, right, top, bottom) = (80.0, SVG_WIDTH - 180.0, 50.0, SVG_HEIGHT - 60.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let py = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="18">{}</text>"#,
        (left + right) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
    );
    for (v, anchor_x, anchor_y, anchor) in [(x0, px(x0), bottom + 18.0, "start"), (x1, px(x1), bottom + 18.0, "end")] {
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{anchor_x:.3}" y="{anchor_y:.3}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}</text>"#,
            fmt_tick(v)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.3}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            left - 6.0,
            py(v) + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        SVG_HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{0}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 20 {0})">{1}</text>"#,
        (top + bottom) / 2.0,
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 20.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            right + 15.0,
            right + 35.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            right + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Writes a chart; fails without touching the filesystem if there is
/// nothing to plot.
pub fn emit_svg_timeseries(title: &str, x_label: &str, y_label: &str, series: &[Series], path: &Path) -> Result<()> {
    let svg = svg_line_chart(title, x_label, y_label, series)?;
    write_file(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = l[start..].find('"').unwrap() + start;
                l[start..end]
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn float_rendering_round_trips() {
        for x in [5.0 / 6.0, 1.0, 0.1, 1e-300, 123456789.123, -0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(5.0 / 6.0), "0.8333333333333334");
    }

    #[test]
    fn constant_series_is_horizontal() {
        let s = Series {
            label: "flat".into(),
            points: (0..10).map(|i| (i as f64, 2.5)).collect(),
        };
        let svg = svg_line_chart("t", "x", "y", &[s]).unwrap();
        let lines = polyline_points(&svg);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].iter().all(|p| p.1 == lines[0][0].1));
        assert!(svg.contains("<svg") && svg.contains("width=\"800\"") && svg.contains("height=\"600\""));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn empty_input_is_an_error_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.svg");
        assert!(emit_svg_timeseries("t", "x", "y", &[], &path).is_err());
        let empty = Series {
            label: "e".into(),
            points: vec![],
        };
        assert!(emit_svg_timeseries("t", "x", "y", &[empty], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn log_scale_report_chart() {
        use crate::harness::{SizeAggregate, Verdict};
        let report = RobustnessReport {
            tool_version: "0".into(),
            params: Default::default(),
            gamma: 0.2,
            per_n: [(16, 1.0), (32, 2.0), (64, 4.0), (128, 8.0)]
                .iter()
                .map(|&(n, e)| SizeAggregate {
                    n,
                    runs: 1,
                    median_max_energy: Some(e),
                    median_min_coverage: 1.0,
                })
                .collect(),
            energy_trend: 1.0,
            coverage_trend: 0.0,
            energy_bounded: false,
            coverage_floored: true,
            hypotheses_held: true,
            theorem_consistent: Verdict::Consistent,
            fitted_c: Some(8.0),
            fitted_c_prime: 1.0,
            failed_runs: 0,
        };
        let series = report_series(&report);
        let svg = svg_line_chart("r", "log2 n", "log2 value", &series[..1]).unwrap();
        let pts = &polyline_points(&svg)[0];
        assert_eq!(pts.len(), 4);
        let dx: Vec<f64> = pts.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let dy: Vec<f64> = pts.windows(2).map(|w| w[1].1 - w[0].1).collect();
        assert!(dx.iter().all(|d| (d - dx[0]).abs() < 2e-3 && *d > 0.0));
        // SVG y grows downward: increasing values give equal negative steps.
        assert!(dy.iter().all(|d| (d - dy[0]).abs() < 2e-3 && *d < 0.0));
    }
}

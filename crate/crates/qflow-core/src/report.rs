//! Timing datasets, comparison totals, and deterministic CSV/SVG report
//! emission for the convergence, reward-dynamics, and accuracy figures.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::sig12;
use crate::sweep::ConvergenceRow;

/// The shipped timing fixture: WannaCry/Cerber/Cridex command timings for
/// the Collab, PowerShell, and RL Agent executors.
pub const FIXTURE_TIMINGS_CSV: &str = include_str!("../data/fixture_timings.csv");

/// One timed command execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub family: String,
    pub executor: String,
    pub command: String,
    pub seconds: f64,
}

/// An ordered list of timing records with unique (family, executor, command)
/// triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimingDataset {
    pub records: Vec<TimingRecord>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("timing parse error: {0}")]
    Parse(String),
    #[error("duplicate timing record: family {family}, executor {executor}, command {command}")]
    DuplicateRecord {
        family: String,
        executor: String,
        command: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Parses the timing CSV schema (`family,executor,command,seconds`).
/// Negative or non-finite seconds, empty labels, and duplicate triples are
/// rejected.
pub fn load_timings(source: &str) -> Result<TimingDataset, ReportError> {
    let mut reader = csv::Reader::from_reader(source.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ReportError::Parse(e.to_string()))?
        .clone();
    let expected = ["family", "executor", "command", "seconds"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ReportError::Parse(format!(
            "expected header family,executor,command,seconds, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for row in reader.deserialize::<TimingRecord>() {
        let record = row.map_err(|e| ReportError::Parse(e.to_string()))?;
        if record.family.is_empty() || record.executor.is_empty() {
            return Err(ReportError::Parse(
                "family and executor must be nonempty".to_string(),
            ));
        }
        if !(record.seconds >= 0.0) || !record.seconds.is_finite() {
            return Err(ReportError::Parse(format!(
                "seconds must be a nonnegative real, got {}",
                record.seconds
            )));
        }
        let key = (
            record.family.clone(),
            record.executor.clone(),
            record.command.clone(),
        );
        if !seen.insert(key) {
            return Err(ReportError::DuplicateRecord {
                family: record.family,
                executor: record.executor,
                command: record.command,
            });
        }
        records.push(record);
    }
    Ok(TimingDataset { records })
}

/// Serializes back to the timing CSV schema (commas in commands are quoted).
pub fn serialize_timings(dataset: &TimingDataset) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in &dataset.records {
        writer.serialize(record).expect("timing record serializes");
    }
    String::from_utf8(writer.into_inner().expect("csv buffer")).expect("utf-8 csv")
}

/// The shipped fixture, parsed.
pub fn fixture_timings() -> TimingDataset {
    load_timings(FIXTURE_TIMINGS_CSV).expect("shipped fixture is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalsRow {
    pub executor: String,
    pub family: String,
    pub seconds: f64,
}

/// Exact sums per (executor, family) and per executor, accumulated in record
/// order, rows sorted by executor then family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TotalsReport {
    pub rows: Vec<TotalsRow>,
    pub grand_totals: Vec<(String, f64)>,
}

pub fn compare_totals(dataset: &TimingDataset) -> TotalsReport {
    let mut per_family: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut grand: BTreeMap<String, f64> = BTreeMap::new();
    for record in &dataset.records {
        *per_family
            .entry((record.executor.clone(), record.family.clone()))
            .or_insert(0.0) += record.seconds;
        *grand.entry(record.executor.clone()).or_insert(0.0) += record.seconds;
    }
    TotalsReport {
        rows: per_family
            .into_iter()
            .map(|((executor, family), seconds)| TotalsRow {
                executor,
                family,
                seconds,
            })
            .collect(),
        grand_totals: grand.into_iter().collect(),
    }
}

/// Saves a totals report as CSV; grand totals use the `all` family marker.
pub fn totals_csv(report: &TotalsReport) -> String {
    let mut out = String::from("executor,family,total_seconds\n");
    for row in &report.rows {
        out.push_str(&csv_row(&[&row.executor, &row.family, &sig12(row.seconds)]));
    }
    for (executor, seconds) in &report.grand_totals {
        out.push_str(&csv_row(&[executor, "all", &sig12(*seconds)]));
    }
    out
}

fn csv_row(fields: &[&str]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                (*f).to_string()
            }
        })
        .collect();
    format!("{}\n", quoted.join(","))
}

/// Data behind one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub kind: PlotKind,
    pub x_label: String,
    pub y_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    Line,
    Bar,
}

impl PlotSeries {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, kind: PlotKind) -> Self {
        PlotSeries {
            name: name.into(),
            points,
            kind,
            x_label: "x".to_string(),
            y_label: "y".to_string(),
        }
    }

    pub fn with_labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }
}

/// Per-environment scatter series (x = learning rate, y = median episodes to
/// convergence) from a convergence table.
pub fn convergence_plot_data(table: &[ConvergenceRow]) -> Vec<PlotSeries> {
    let mut by_env: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in table {
        by_env
            .entry(row.env_name.clone())
            .or_default()
            .push((row.learning_rate, row.median_episodes));
    }
    by_env
        .into_iter()
        .map(|(env, points)| {
            PlotSeries::new(format!("convergence_{env}"), points, PlotKind::Scatter)
                .with_labels("learning rate", "episodes to convergence")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

/// Writes one file per series into `out_dir` and returns the paths.
/// CSV: header `x,y`, 12 significant digits. SVG: a minimal static chart,
/// byte-deterministic for identical inputs.
pub fn emit_report(
    series: &[PlotSeries],
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for s in series {
        let stem = sanitize_name(&s.name);
        match format {
            ReportFormat::Csv => {
                let mut out = String::from("x,y\n");
                for (x, y) in &s.points {
                    out.push_str(&format!("{},{}\n", sig12(*x), sig12(*y)));
                }
                let path = out_dir.join(format!("{stem}.csv"));
                std::fs::write(&path, out)?;
                paths.push(path);
            }
            ReportFormat::Svg => {
                let path = out_dir.join(format!("{stem}.svg"));
                std::fs::write(&path, render_svg(s))?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}

fn sanitize_name(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let text = format!("{v:.4}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

/// Renders one series as a static SVG chart. No external assets, no
/// timestamps; equal inputs produce equal bytes.
pub fn render_svg(series: &PlotSeries) -> String {
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &series.points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if series.points.is_empty() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    if matches!(series.kind, PlotKind::Bar) && y_min > 0.0 {
        y_min = 0.0;
    }

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w,
            MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{}</text>\n",
        px(SVG_WIDTH / 2.0),
        xml_escape(&series.name)
    ));

    // Axes.
    let origin = to_px(x_min, y_min);
    let x_end = to_px(x_max, y_min);
    let y_end = to_px(x_min, y_max);
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(origin.0),
        px(origin.1),
        px(x_end.0),
        px(x_end.1)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(origin.0),
        px(origin.1),
        px(y_end.0),
        px(y_end.1)
    ));

    // Ticks and labels.
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * f64::from(i) / 4.0;
        let (tx, ty) = to_px(fx, y_min);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            px(tx),
            px(ty),
            px(tx),
            px(ty + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            px(tx),
            px(ty + 18.0),
            tick_label(fx)
        ));

        let fy = y_min + (y_max - y_min) * f64::from(i) / 4.0;
        let (gx, gy) = to_px(x_min, fy);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            px(gx - 5.0),
            px(gy),
            px(gx),
            px(gy)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            px(gx - 8.0),
            px(gy + 4.0),
            tick_label(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{}</text>\n",
        px(MARGIN_LEFT + plot_w / 2.0),
        px(SVG_HEIGHT - 10.0),
        xml_escape(&series.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        px(MARGIN_TOP + plot_h / 2.0),
        px(MARGIN_TOP + plot_h / 2.0),
        xml_escape(&series.y_label)
    ));

    // Data.
    match series.kind {
        PlotKind::Line => {
            let coords: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| {
                    let (cx, cy) = to_px(x, y);
                    format!("{},{}", px(cx), px(cy))
                })
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                coords.join(" ")
            ));
        }
        PlotKind::Scatter => {}
        PlotKind::Bar => {
            let width = (plot_w / series.points.len().max(1) as f64) * 0.8;
            for &(x, y) in &series.points {
                let (cx, cy) = to_px(x, y);
                let (_, base) = to_px(x, y_min.max(0.0));
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"steelblue\"/>\n",
                    px(cx - width / 2.0),
                    px(cy.min(base)),
                    px(width),
                    px((base - cy).abs())
                ));
            }
        }
    }
    if matches!(series.kind, PlotKind::Scatter | PlotKind::Line) {
        for &(x, y) in &series.points {
            let (cx, cy) = to_px(x, y);
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"crimson\"/>\n",
                px(cx),
                px(cy)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

//! Accuracy scoring, return tables and plot exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;
use thiserror::Error;

use crate::market::ClassSeries;
use crate::signal::SignalSeries;
use crate::strategy::{strategy_return, EquityCurve};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("signal `{0}` shares no dates with the realized classes")]
    NoOverlap(String),
    #[error("run `{0}` does not cover the benchmark window")]
    WindowMismatch(String),
    #[error("nothing to plot")]
    EmptyInput,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub matches: usize,
    pub n: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> f64 {
        self.matches as f64 / self.n as f64
    }
}

/// Share of overlapping days where the signal equals the realized class.
pub fn classification_accuracy(
    signals: &SignalSeries,
    truth: &ClassSeries,
) -> Result<Accuracy, ReportError> {
    let mut n = 0;
    let mut matches = 0;
    for (date, s) in &signals.entries {
        if let Some(c) = truth.get(*date) {
            n += 1;
            matches += usize::from(c == *s);
        }
    }
    if n == 0 {
        return Err(ReportError::NoOverlap(signals.source.clone()));
    }
    Ok(Accuracy { matches, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub signal: String,
    pub model: String,
    pub news_source: String,
    pub accuracy: Accuracy,
    /// Free text describing how signals were scored.
    pub protocol: String,
}

pub fn write_accuracy_csv<W: Write>(rows: &[AccuracyRow], out: W) -> Result<(), ReportError> {
    let mut sorted: Vec<&AccuracyRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.signal, &a.model, &a.news_source).cmp(&(&b.signal, &b.model, &b.news_source))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["signal", "model", "news_source", "accuracy", "n_days", "protocol"])?;
    for r in sorted {
        w.write_record([
            r.signal.clone(),
            r.model.clone(),
            r.news_source.clone(),
            format_sig(r.accuracy.fraction()),
            r.accuracy.n.to_string(),
            r.protocol.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One simulated strategy, placed at `row` × `column` in the table.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub row: String,
    pub column: String,
    pub curve: EquityCurve,
}

pub const BENCHMARK_ROW: &str = "Buy and hold";

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsTable {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: BTreeMap<(String, String), f64>,
    pub benchmark: f64,
}

pub fn build_returns_table(
    runs: &[StrategyRun],
    benchmark: &EquityCurve,
) -> Result<ReturnsTable, ReportError> {
    let window = benchmark.dates();
    let mut rows = BTreeSet::new();
    let mut columns = BTreeSet::new();
    let mut cells = BTreeMap::new();
    for run in runs {
        if run.curve.dates() != window {
            return Err(ReportError::WindowMismatch(format!("{} / {}", run.row, run.column)));
        }
        rows.insert(run.row.clone());
        columns.insert(run.column.clone());
        cells.insert((run.row.clone(), run.column.clone()), strategy_return(&run.curve));
    }
    Ok(ReturnsTable {
        rows: rows.into_iter().collect(),
        columns: columns.into_iter().collect(),
        cells,
        benchmark: strategy_return(benchmark),
    })
}

impl ReturnsTable {
    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        self.cells.get(&(row.to_string(), column.to_string())).copied()
    }

    /// Full-precision fractions; empty cell where a run is absent. The
    /// benchmark is repeated in every column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["strategy".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.clone()];
            rec.extend(self.columns.iter().map(|c| self.get(row, c).map(format_sig).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        let mut rec = vec![BENCHMARK_ROW.to_string()];
        rec.extend(self.columns.iter().map(|_| format_sig(self.benchmark)));
        w.write_record(&rec)?;
        w.flush()?;
        Ok(())
    }

    /// Aligned text with percentages at 2 decimals.
    pub fn render_text(&self) -> String {
        let pct = |v: f64| format!("{:.2}%", v * 100.0);
        let mut header = vec!["Strategy".to_string()];
        header.extend(self.columns.iter().cloned());
        let mut body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                let mut r = vec![row.clone()];
                r.extend(self.columns.iter().map(|c| self.get(row, c).map_or("-".into(), pct)));
                r
            })
            .collect();
        let mut bench = vec![BENCHMARK_ROW.to_string()];
        bench.extend(self.columns.iter().map(|_| pct(self.benchmark)));
        if self.columns.is_empty() {
            bench.push(pct(self.benchmark));
            header.push("Return".into());
        }
        body.push(bench);

        let ncols = header.len();
        let widths: Vec<usize> = (0..ncols)
            .map(|i| {
                std::iter::once(&header)
                    .chain(&body)
                    .map(|r| r.get(i).map_or(0, |s| s.chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |r: &[String]| {
            let mut s = String::new();
            for (i, w) in widths.iter().enumerate() {
                let cell = r.get(i).map_or("", |c| c.as_str());
                if i == 0 {
                    let _ = write!(s, "{cell:<w$}");
                } else {
                    let _ = write!(s, "  {cell:>w$}");
                }
            }
            s.trim_end().to_string()
        };
        let mut out = line(&header);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncols - 1)));
        out.push('\n');
        for r in &body {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Formats with 12 significant digits, plain decimal where reasonable.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" { "0".into() } else { s }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(NaiveDate, f64)>,
}

fn check_plot(series: &[PlotSeries]) -> Result<(), ReportError> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(ReportError::EmptyInput);
    }
    Ok(())
}

/// Long format `series,date,value`, series in the given order.
pub fn write_plot_csv<W: Write>(series: &[PlotSeries], out: W) -> Result<(), ReportError> {
    check_plot(series)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "date", "value"])?;
    for s in series {
        for (d, v) in &s.points {
            w.write_record([s.name.clone(), d.to_string(), format_sig(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_plot_csv<R: std::io::Read>(input: R) -> Result<Vec<PlotSeries>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<PlotSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |m: &str| ReportError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string()));
        let name = rec.get(0).ok_or_else(|| bad("missing series"))?;
        let date: NaiveDate = rec
            .get(1)
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| bad("bad date"))?;
        let value: f64 = rec
            .get(2)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad value"))?;
        match out.last_mut() {
            Some(s) if s.name == name => s.points.push((date, value)),
            _ => out.push(PlotSeries {
                name: name.to_string(),
                points: vec![(date, value)],
            }),
        }
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static line chart: axes, min/max tick labels, one polyline per series
/// and a legend in series order.
pub fn render_svg(title: &str, y_label: &str, series: &[PlotSeries]) -> Result<String, ReportError> {
    check_plot(series)?;
    const W: f64 = 800.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 200.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut d0, mut d1) = (NaiveDate::MAX, NaiveDate::MIN);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (d, v) in all {
        d0 = d0.min(*d);
        d1 = d1.max(*d);
        if v.is_finite() {
            y0 = y0.min(*v);
            y1 = y1.max(*v);
        }
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let span = ((d1 - d0).num_days() as f64).max(1.0);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let x = |d: NaiveDate| LEFT + (d - d0).num_days() as f64 / span * plot_w;
    let y = |v: f64| TOP + (y1 - v) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape_xml(title));
    let (xa, ya, xb) = (LEFT, TOP + plot_h, LEFT + plot_w);
    let _ = writeln!(s, r#"<line x1="{xa}" y1="{ya}" x2="{xb}" y2="{ya}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{xa}" y1="{TOP}" x2="{xa}" y2="{ya}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{xa}" y="{:.2}" text-anchor="start">{d0}</text>"#, ya + 18.0);
    let _ = writeln!(s, r#"<text x="{xb}" y="{:.2}" text-anchor="end">{d1}</text>"#, ya + 18.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, xa - 6.0, y(y1) + 4.0, format_sig(y1));
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, xa - 6.0, y(y0) + 4.0, format_sig(y0));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape_xml(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(d, v)| format!("{:.2},{:.2}", x(*d), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape_xml(&ser.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Legend entries of an SVG from [`render_svg`], in order.
pub fn svg_legend(svg: &str) -> Vec<String> {
    svg.lines()
        .filter(|l| l.starts_with("<text x=") && !l.contains("text-anchor"))
        .filter_map(|l| {
            let start = l.find('>')? + 1;
            let end = l.rfind("</text>")?;
            Some(l[start..end].replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&"))
        })
        .collect()
}

/// All curves in long format: `strategy,date,cash,shares,price,value,return`.
pub fn write_equity_curves_csv<W: Write>(runs: &[(String, &EquityCurve)], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "date", "cash", "shares", "price", "value", "return"])?;
    for (name, curve) in runs {
        for s in &curve.states {
            w.write_record([
                name.clone(),
                s.date.to_string(),
                s.cash.to_string(),
                s.shares.to_string(),
                s.price.to_string(),
                s.value.to_string(),
                s.ret.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

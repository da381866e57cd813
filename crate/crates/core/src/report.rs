//! Static rendering of a monitor run: distance trace, shell band and alarms.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{AlarmEvent, Comparison, StepReport};

/// One fast-path step, as written by `monitor --trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub index: u64,
    /// Empty while no kriged reference exists.
    pub d: Option<f64>,
    pub shelldist: f64,
    pub shellvar: f64,
    pub sigma_m: f64,
    pub bound: f64,
    pub alarm: bool,
}

impl From<&StepReport> for TraceRow {
    fn from(r: &StepReport) -> Self {
        TraceRow {
            index: r.index,
            d: r.d,
            shelldist: r.shelldist,
            shellvar: r.shellvar,
            sigma_m: r.sigma_m,
            bound: r.bound,
            alarm: r.alarm.is_some(),
        }
    }
}

pub fn read_trace(reader: impl std::io::Read) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        rows.push(row.map_err(|e| Error::Data(format!("trace row {}: {e}", i + 1)))?);
    }
    Ok(rows)
}

pub fn read_alarms(reader: impl BufRead) -> Result<Vec<AlarmEvent>> {
    let mut alarms = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        alarms.push(serde_json::from_str(&line).map_err(|e| Error::Data(format!("alarm line {}: {e}", i + 1)))?);
    }
    Ok(alarms)
}

/// Trace rows joined with the trend alarms of the same index.
pub fn write_summary_csv(rows: &[TraceRow], alarms: &[AlarmEvent], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "d", "lower", "upper", "fast_alarm", "trend_alarm"])?;
    for r in rows {
        let trend = alarms.iter().any(|a| a.comparison == Comparison::Trend && a.index == r.index);
        let d = r.d.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([
            r.index.to_string(),
            d,
            (r.shelldist - r.bound).to_string(),
            (r.shelldist + r.bound).to_string(),
            u8::from(r.alarm).to_string(),
            u8::from(trend).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// SVG plot of the distance trace inside its shell band. Fast alarms are red
/// dots, trend alarms orange ticks along the bottom axis.
pub fn render_svg(rows: &[TraceRow], alarms: &[AlarmEvent]) -> String {
    let pts: Vec<&TraceRow> = rows.iter().filter(|r| r.d.is_some()).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{MARGIN}" font-family="sans-serif">no distances</text>"#);
        svg.push_str("</svg>\n");
        return svg;
    }

    let (i0, i1) = (pts[0].index as f64, pts[pts.len() - 1].index as f64);
    let banded: Vec<&&TraceRow> = pts.iter().filter(|r| r.bound > 0.0).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in &pts {
        let d = r.d.unwrap_or(0.0);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    for r in &banded {
        lo = lo.min(r.shelldist - r.bound);
        hi = hi.max(r.shelldist + r.bound);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let span = (i1 - i0).max(1.0);
    let x = |i: u64| MARGIN + (i as f64 - i0) / span * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    if !banded.is_empty() {
        let mut poly = String::new();
        for r in &banded {
            let _ = write!(poly, "{:.2},{:.2} ", x(r.index), y(r.shelldist + r.bound));
        }
        for r in banded.iter().rev() {
            let _ = write!(poly, "{:.2},{:.2} ", x(r.index), y(r.shelldist - r.bound));
        }
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#cfe0f5" stroke="none"/>"##, poly.trim_end());
        let mut center = String::new();
        for r in &banded {
            let _ = write!(center, "{:.2},{:.2} ", x(r.index), y(r.shelldist));
        }
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#4a78b5" stroke-dasharray="4 3"/>"##,
            center.trim_end()
        );
    }

    let mut trace = String::new();
    for r in &pts {
        let _ = write!(trace, "{:.2},{:.2} ", x(r.index), y(r.d.unwrap_or(0.0)));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#222" stroke-width="0.8"/>"##,
        trace.trim_end()
    );
    for r in pts.iter().filter(|r| r.alarm) {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#d62728"/>"##,
            x(r.index),
            y(r.d.unwrap_or(0.0))
        );
    }
    for a in alarms.iter().filter(|a| a.comparison == Comparison::Trend) {
        let xa = x(a.index);
        let _ = writeln!(
            svg,
            r##"<line x1="{xa:.2}" y1="{:.2}" x2="{xa:.2}" y2="{:.2}" stroke="#ff7f0e"/>"##,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 8.0
        );
    }

    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}" {font}>{}</text>"#, HEIGHT - 12.0, pts[0].index);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" {font} text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - 12.0,
        pts[pts.len() - 1].index
    );
    let _ = writeln!(svg, r#"<text x="4" y="{}" {font}>{hi:.3}</text>"#, MARGIN + 4.0);
    let _ = writeln!(svg, r#"<text x="4" y="{}" {font}>{lo:.3}</text>"#, HEIGHT - MARGIN);
    let fast = pts.iter().filter(|r| r.alarm).count();
    let trend = alarms.iter().filter(|a| a.comparison == Comparison::Trend).count();
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" {font} text-anchor="middle">distance to reference and shell band; fast alarms {fast}, trend alarms {trend}</text>"#,
        WIDTH / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

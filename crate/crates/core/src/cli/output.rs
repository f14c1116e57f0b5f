//! CSV and SVG renderings of a time series.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::quantum::{Scales, TimeSeries};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("series is empty")]
    Empty,
    #[error("need at least 2 samples to plot, got {0}")]
    TooFewPoints(usize),
    #[error("DOF index {0} is out of range")]
    BadDof(usize),
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn header(n_dof: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "t_norm".to_string()];
    for k in 1..=n_dof {
        cols.push(format!("q{k}"));
        cols.push(format!("phi{k}"));
    }
    cols.push("energy".to_string());
    cols.push("dissipation".to_string());
    cols
}

/// Writes `# key: value` metadata, the header row and one row per sample.
/// Floats use the shortest representation that parses back exactly.
pub fn write_csv_to<W: Write>(series: &TimeSeries, t_ref: f64, metadata: &[(String, String)], mut out: W) -> Result<(), OutputError> {
    if series.is_empty() {
        return Err(OutputError::Empty);
    }
    for (key, value) in metadata {
        writeln!(out, "# {key}: {value}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(series.n_dof()))?;
    let mut row = Vec::with_capacity(2 * series.n_dof() + 4);
    for (i, &t) in series.times.iter().enumerate() {
        row.clear();
        row.push(format!("{t:e}"));
        row.push(format!("{:e}", t / t_ref));
        for k in 0..series.n_dof() {
            row.push(format!("{:e}", series.charge[k][i]));
            row.push(format!("{:e}", series.flux[k][i]));
        }
        row.push(format!("{:e}", series.energy[i]));
        row.push(format!("{:e}", series.dissipation[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(series: &TimeSeries, t_ref: f64, metadata: &[(String, String)], path: &Path) -> Result<(), OutputError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv_to(series, t_ref, metadata, file)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub metadata: Vec<(String, String)>,
    pub t_norm: Vec<f64>,
    pub series: TimeSeries,
}

impl CsvData {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses CSV text written by [`write_csv`]. Zero-point scales are taken
/// from the `q<k>_scale`/`phi<k>_scale` metadata when present.
pub fn parse_csv(text: &str) -> Result<CsvData, OutputError> {
    let mut metadata = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (key, value) = body
            .split_once(": ")
            .ok_or_else(|| OutputError::Malformed(format!("metadata line {line:?}")))?;
        metadata.push((key.to_string(), value.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let cols = reader.headers()?.len();
    if cols < 6 || cols % 2 != 0 {
        return Err(OutputError::Malformed(format!("{cols} columns")));
    }
    let n_dof = (cols - 4) / 2;
    if reader.headers()?.iter().collect::<Vec<_>>() != header(n_dof) {
        return Err(OutputError::Malformed("unexpected header row".into()));
    }
    let lookup = |key: String| {
        metadata
            .iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, v)| v.parse::<f64>().ok())
            .unwrap_or(1.0)
    };
    let scales = (1..=n_dof)
        .map(|k| Scales {
            charge: lookup(format!("q{k}_scale")),
            flux: lookup(format!("phi{k}_scale")),
            impedance: lookup(format!("phi{k}_scale")) / lookup(format!("q{k}_scale")),
        })
        .collect();
    let mut series = TimeSeries::with_dofs(scales);
    let mut t_norm = Vec::new();
    for record in reader.records() {
        let record = record?;
        let v: Vec<f64> = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| OutputError::Malformed(format!("{f:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        series.times.push(v[0]);
        t_norm.push(v[1]);
        for k in 0..n_dof {
            series.charge[k].push(v[2 + 2 * k]);
            series.flux[k].push(v[3 + 2 * k]);
        }
        series.energy.push(v[cols - 2]);
        series.dissipation.push(v[cols - 1]);
    }
    Ok(CsvData { metadata, t_norm, series })
}

pub fn read_csv(path: &Path) -> Result<CsvData, OutputError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const MAX_POINTS: usize = 4000;
const COLORS: [&str; 2] = ["#1f3b73", "#5fb85f"];

/// Standalone SVG with the normalized charges of `pair` (zero-based) against
/// `t / t_ref`.
pub fn svg_string(series: &TimeSeries, pair: (usize, usize), t_ref: f64) -> Result<String, OutputError> {
    if series.len() < 2 {
        return Err(OutputError::TooFewPoints(series.len()));
    }
    for k in [pair.0, pair.1] {
        if k >= series.n_dof() {
            return Err(OutputError::BadDof(k));
        }
    }
    let t0 = series.times[0] / t_ref;
    let t1 = series.times[series.len() - 1] / t_ref;
    let ymax = [pair.0, pair.1]
        .iter()
        .flat_map(|&k| series.charge[k].iter())
        .fold(0.0f64, |m, y| m.max(y.abs()))
        .max(1e-12);
    let x = |t: f64| MARGIN + (t / t_ref - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT / 2.0 - v / ymax * (HEIGHT / 2.0 - MARGIN);
    let stride = series.len().div_ceil(MAX_POINTS).max(1);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#, right - left, bottom - top);
    let _ = writeln!(s, r##"<line x1="{left}" y1="{0}" x2="{right}" y2="{0}" stroke="#999" stroke-dasharray="4 3"/>"##, y(0.0));
    let font = r#"font-family="sans-serif" font-size="12""#;
    let _ = writeln!(s, r#"<text x="{left}" y="{}" {font} text-anchor="middle">{t0:.3}</text>"#, bottom + 18.0);
    let _ = writeln!(s, r#"<text x="{right}" y="{}" {font} text-anchor="middle">{t1:.3}</text>"#, bottom + 18.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="middle">t / T_ref</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="end">{ymax:.3}</text>"#, left - 6.0, top + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="end">{:.3}</text>"#, left - 6.0, bottom + 4.0, -ymax);
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="end">0</text>"#, left - 6.0, y(0.0) + 4.0);
    for (c, &k) in [pair.0, pair.1].iter().enumerate() {
        let mut points = String::new();
        for i in (0..series.len()).step_by(stride).chain(std::iter::once(series.len() - 1)) {
            let _ = write!(points, "{:.2},{:.2} ", x(series.times[i]), y(series.charge[k][i]));
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#, COLORS[c], points.trim_end());
        let ly = top + 16.0 + 16.0 * c as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#, right - 120.0, right - 100.0, COLORS[c]);
        let _ = writeln!(s, r#"<text x="{}" y="{}" {font}>q{} / Q{}0</text>"#, right - 94.0, ly + 4.0, k + 1, k + 1);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(series: &TimeSeries, pair: (usize, usize), t_ref: f64, path: &Path) -> Result<(), OutputError> {
    let svg = svg_string(series, pair, t_ref)?;
    std::fs::write(path, svg)?;
    Ok(())
}

//! Plot-ready artifacts: CSV series, `fits.json` and `events.jsonl`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::SimulationReport;

/// CSV files written by [`write_artifacts`], with their headers.
pub const CSV_SCHEMAS: [(&str, &str); 8] = [
    ("edge_freq_sorted_all.csv", "rank,frequency"),
    ("edge_freq_sorted_phys.csv", "rank,frequency"),
    ("edge_freq_sorted_virt.csv", "rank,frequency"),
    ("ent_growth.csv", "k,e_total"),
    ("degree_growth.csv", "node,delta,initial,final"),
    ("max_freq.csv", "k,max_virtual,max_physical"),
    ("node_degrees_entangled.csv", "node,degree"),
    ("node_degrees_connection.csv", "node,degree"),
];

pub const FITS_FILE: &str = "fits.json";
pub const EVENTS_FILE: &str = "events.jsonl";

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One entry of `fits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub series_name: String,
    pub model: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub r_squared: f64,
    pub rmse: f64,
    pub n_points: usize,
    pub excluded_points: usize,
    pub converged: bool,
}

fn fit_records(report: &SimulationReport) -> Vec<FitRecord> {
    report
        .fits
        .iter()
        .map(|named| {
            let fit = &named.fit;
            let mut params = match serde_json::to_value(fit.model) {
                Ok(serde_json::Value::Object(map)) => map,
                _ => serde_json::Map::new(),
            };
            params.remove("model");
            FitRecord {
                series_name: named.series_name.clone(),
                model: fit.model.name().to_string(),
                params,
                // JSON has no infinities; a degenerate r^2 is written as the
                // most negative finite value.
                r_squared: if fit.r_squared.is_finite() { fit.r_squared } else { f64::MIN },
                rmse: fit.rmse,
                n_points: fit.n_points,
                excluded_points: fit.excluded_points,
                converged: fit.converged,
            }
        })
        .collect()
}

/// Write every artifact of `report` into `dir`, creating it if needed.
pub fn write_artifacts(report: &SimulationReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let header = |i: usize| CSV_SCHEMAS[i].1.split(',').collect::<Vec<_>>();
    let path = |i: usize| dir.join(CSV_SCHEMAS[i].0);

    write_csv(&path(0), &header(0), &report.sorted_all)?;
    write_csv(&path(1), &header(1), &report.sorted_physical)?;
    write_csv(&path(2), &header(2), &report.sorted_virtual)?;
    write_csv(&path(3), &header(3), &report.metrics.e_total)?;
    let growth = report.degree_growth.iter().flat_map(|dg| &dg.per_node);
    write_csv(&path(4), &header(4), growth.map(|g| (g.node, g.delta, g.initial, g.last)))?;
    let max_rows = report
        .metrics
        .max_virtual_freq
        .iter()
        .zip(&report.metrics.max_physical_freq)
        .map(|(&(k, v), &(_, p))| (k, v, p));
    write_csv(&path(5), &header(5), max_rows)?;
    write_csv(&path(6), &header(6), report.entangled_degrees.iter().enumerate().map(|(i, d)| (i + 1, d)))?;
    write_csv(&path(7), &header(7), report.connection_touches.iter().enumerate().map(|(i, d)| (i + 1, d)))?;

    let mut fits = BufWriter::new(File::create(dir.join(FITS_FILE))?);
    serde_json::to_writer_pretty(&mut fits, &fit_records(report))?;
    fits.write_all(b"\n")?;
    fits.flush()?;

    let mut events = BufWriter::new(File::create(dir.join(EVENTS_FILE))?);
    for event in &report.events {
        serde_json::to_writer(&mut events, event)?;
        events.write_all(b"\n")?;
    }
    events.flush()?;
    Ok(())
}

pub fn read_fits(dir: &Path) -> Result<Vec<FitRecord>> {
    let path = dir.join(FITS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Config { path: path.clone(), msg: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| Error::Config { path, msg: e.to_string() })
}

/// Compact number formatting: ten significant digits, trailing zeros dropped.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = (10 - 1 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Human-readable fit table.
pub fn fit_table(records: &[FitRecord]) -> String {
    let mut out =
        format!("{:<26} {:<14} {:<44} {:>9} {:>12} {:>7}\n", "series", "model", "params", "r2", "rmse", "points");
    for r in records {
        let params = r
            .params
            .iter()
            .map(|(k, v)| match v.as_f64() {
                Some(x) => format!("{k}={}", format_number(x)),
                None => format!("{k}={v}"),
            })
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{:<26} {:<14} {:<44} {:>9.4} {:>12} {:>7}\n",
            r.series_name,
            r.model,
            params,
            r.r_squared,
            format_number(r.rmse),
            r.n_points
        ));
    }
    out
}

/// Read a two-column numeric CSV. A non-numeric first row is taken as a
/// header and skipped.
pub fn read_xy_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let malformed = |msg: String| Error::MalformedCsv { path: path.to_owned(), msg };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() < 2 {
            return Err(malformed(format!("row {} has {} columns, need 2", line + 1, record.len())));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => points.push((x, y)),
            _ if line == 0 => {}
            _ => return Err(malformed(format!("row {} is not numeric: {:?}", line + 1, record))),
        }
    }
    Ok(points)
}

/// Output directory, with `QNETSIM_OUT` taking precedence over the argument.
pub fn resolve_output_dir(flag: Option<PathBuf>, default: &Path) -> PathBuf {
    match std::env::var_os("QNETSIM_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => flag.unwrap_or_else(|| default.to_path_buf()),
    }
}

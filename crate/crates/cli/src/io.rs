//! CSV input and output. Numbers are written with 17 significant digits so
//! that a value read back is the value that was written.

use std::fs;
use std::io::Write;
use std::path::Path;

use gpheat::forward::{BoundaryControl, Geometry};
use gpheat::inverse::{Provenance, ResponseRecord};
use gpheat::laplace::TimeSignal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Relative tolerance on the spacing of sample times.
const SPACING_TOL: f64 = 1e-9;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `header` followed by one line per row.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    write_csv_with_meta(path, &[], header, rows)
}

/// Like [`write_csv`], preceded by `# key = value` lines.
pub fn write_csv_with_meta<I>(path: &Path, meta: &[(String, String)], header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let file_err = |source| IoError::File { path: path.display().to_string(), source };
    let mut f = fs::File::create(path).map_err(file_err)?;
    f.write_all(text.as_bytes()).map_err(file_err)
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

/// Reads a header row and two numeric columns sampled at `t = 0, dt, 2 dt, ...`.
pub fn read_two_column(path: &Path, first: &str, second: &str) -> Result<TimeSignal, IoError> {
    let csv_err = |source| IoError::Csv { path: path.display().to_string(), source };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || &headers[0] != first || &headers[1] != second {
        return Err(format_err(path, format!("expected header \"{first},{second}\", found \"{}\"", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |i: usize| {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| format_err(path, format!("row {}: column {} is not a number", line + 1, i + 1)))
        };
        t.push(parse(0)?);
        v.push(parse(1)?);
    }
    if t.len() < 2 {
        return Err(format_err(path, "need at least two rows"));
    }
    let dt = t[1] - t[0];
    if t[0].abs() > SPACING_TOL * dt.abs() {
        return Err(format_err(path, format!("first sample time must be 0, got {}", t[0])));
    }
    for (i, &ti) in t.iter().enumerate() {
        if (ti - i as f64 * dt).abs() > SPACING_TOL * (1.0 + ti.abs()) {
            return Err(format_err(path, format!("sample times are not uniform at row {}", i + 1)));
        }
    }
    TimeSignal::new(dt, v).map_err(|e| format_err(path, e.to_string()))
}

pub fn record_meta(record: &ResponseRecord, kernel: &str) -> Vec<(String, String)> {
    vec![
        ("kernel".into(), kernel.into()),
        ("control".into(), record.control.to_string()),
        ("geometry".into(), record.geometry.to_string()),
        ("provenance".into(), record.provenance.to_string()),
        ("dt".into(), num(record.response.dt())),
    ]
}

pub fn write_record(path: &Path, record: &ResponseRecord, kernel: &str) -> Result<(), IoError> {
    let r = &record.response;
    let rows = r.values().iter().enumerate().map(|(i, &v)| vec![r.time(i), v]);
    write_csv_with_meta(path, &record_meta(record, kernel), &["t", "r"], rows)
}

/// Reads a record written by [`write_record`] or supplied in the same layout.
/// The `control` and `geometry` header lines are required.
pub fn read_record(path: &Path) -> Result<ResponseRecord, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })?;
    let mut control = None;
    let mut geometry = None;
    let mut provenance = Provenance::External;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((k, v)) = line.trim_start_matches('#').split_once('=') else {
            continue;
        };
        let v = v.trim();
        match k.trim() {
            "control" => {
                if v != "ramp" {
                    return Err(format_err(path, format!("control \"{v}\" is not supported in record files; use ramp")));
                }
                control = Some(BoundaryControl::Ramp);
            }
            "geometry" => {
                geometry = Some(if v == "inf" {
                    Geometry::SemiInfinite
                } else {
                    v.parse::<f64>()
                        .map_err(|_| format_err(path, format!("geometry \"{v}\" is neither inf nor a number")))
                        .and_then(|l| Geometry::interval(l).map_err(|e| format_err(path, e.to_string())))?
                });
            }
            "provenance" => {
                if let Some(id) = v.strip_prefix("synthetic:") {
                    provenance = Provenance::Synthetic(id.to_string());
                }
            }
            _ => {}
        }
    }
    let control = control.ok_or_else(|| format_err(path, "missing \"# control = ...\" header line"))?;
    let geometry = geometry.ok_or_else(|| format_err(path, "missing \"# geometry = ...\" header line"))?;
    let response = read_two_column(path, "t", "r")?;
    Ok(ResponseRecord { geometry, control, response, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let response = TimeSignal::from_fn(0.1, 2.0, |t| (t * 1.7).sin() / 3.0).unwrap();
        let record = ResponseRecord {
            geometry: Geometry::Interval(2.0),
            control: BoundaryControl::Ramp,
            response,
            provenance: Provenance::Synthetic("exponential(1)".into()),
        };
        write_record(&p, &record, "exponential(1)").unwrap();
        let back = read_record(&p).unwrap();
        assert_eq!(back.geometry, record.geometry);
        assert_eq!(back.provenance, record.provenance);
        assert_eq!(back.response.values(), record.response.values());
        assert!((back.response.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn nonuniform_times_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        fs::write(&p, "t,k\n0,1\n0.1,1\n0.25,1\n").unwrap();
        assert!(matches!(read_two_column(&p, "t", "k"), Err(IoError::Format { .. })));
    }

    #[test]
    fn fixed_format() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }
}

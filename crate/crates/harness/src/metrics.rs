//! The per-iteration metrics CSV.
//!
//! Columns: `t,lambda,best_fitness,mean_fitness,mean_sigma,accepts,wallclock_ms`.
//! Floats print as shortest round-trip decimals, so rows are reproducible
//! bytes whenever the underlying run is.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ptrnet_ea_core::evolution::IterationRecord;
use thiserror::Error;

pub const CSV_HEADER: &str = "t,lambda,best_fitness,mean_fitness,mean_sigma,accepts,wallclock_ms";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One parsed CSV row; a lossy view of [`IterationRecord`] (per-individual
/// fitness stays in checkpoints, not metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub t: u64,
    pub lambda: f64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub mean_sigma: f64,
    pub accepts: u32,
    pub wallclock_ms: u64,
}

pub fn format_row(rec: &IterationRecord) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{},{},{},{},{},{},{}",
        rec.t, rec.lambda, rec.best_fitness, rec.mean_fitness, rec.mean_sigma, rec.accepts, rec.wallclock_ms
    );
    out
}

/// Appends one row, creating the file with a header first if needed.
pub fn append_row(path: &Path, rec: &IterationRecord) -> Result<(), MetricsError> {
    let mut file = if path.exists() {
        fs::OpenOptions::new().append(true).open(path)?
    } else {
        let mut f = fs::File::create(path)?;
        writeln!(f, "{CSV_HEADER}")?;
        f
    };
    writeln!(file, "{}", format_row(rec))?;
    Ok(())
}

/// Starts a fresh metrics file containing only the header.
pub fn start_file(path: &Path) -> Result<(), MetricsError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    writeln!(f, "{CSV_HEADER}")?;
    Ok(())
}

/// Drops every row with `t >= keep_below`; used when resuming from a
/// checkpoint older than the last rows written before a crash.
pub fn truncate_after(path: &Path, keep_below: u64) -> Result<(), MetricsError> {
    let rows = read_rows(path)?;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows.iter().filter(|r| r.t < keep_below) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.t, row.lambda, row.best_fitness, row.mean_fitness, row.mean_sigma, row.accepts, row.wallclock_ms
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>, MetricsError> {
    let text = fs::read_to_string(path)?;
    parse_rows(&text)
}

pub fn parse_rows(text: &str) -> Result<Vec<MetricsRow>, MetricsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(MetricsError::Parse { line: 1, message: format!("unexpected header `{other}`") })
        }
        None => return Err(MetricsError::Parse { line: 1, message: "empty file".into() }),
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(MetricsError::Parse {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse_f = |i: usize| -> Result<f64, MetricsError> {
            fields[i].parse().map_err(|_| MetricsError::Parse {
                line: line_no,
                message: format!("bad float `{}`", fields[i]),
            })
        };
        rows.push(MetricsRow {
            t: fields[0].parse().map_err(|_| MetricsError::Parse {
                line: line_no,
                message: format!("bad t `{}`", fields[0]),
            })?,
            lambda: parse_f(1)?,
            best_fitness: parse_f(2)?,
            mean_fitness: parse_f(3)?,
            mean_sigma: parse_f(4)?,
            accepts: fields[5].parse().map_err(|_| MetricsError::Parse {
                line: line_no,
                message: format!("bad accepts `{}`", fields[5]),
            })?,
            wallclock_ms: fields[6].parse().map_err(|_| MetricsError::Parse {
                line: line_no,
                message: format!("bad wallclock `{}`", fields[6]),
            })?,
        });
    }
    Ok(rows)
}

/// Ensures rows cover `0..expected` exactly once, in order.
pub fn check_contiguous(rows: &[MetricsRow], expected: u64) -> Result<(), MetricsError> {
    if rows.len() as u64 != expected {
        return Err(MetricsError::Parse {
            line: 0,
            message: format!("expected {expected} rows, found {}", rows.len()),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.t != i as u64 {
            return Err(MetricsError::Parse {
                line: i + 2,
                message: format!("expected t={i}, found t={}", row.t),
            });
        }
    }
    Ok(())
}

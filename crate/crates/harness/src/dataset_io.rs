//! The `TSPSET v1` dataset file format.
//!
//! Line-oriented text. The header is
//! `TSPSET v1 n=<n> count=<k> seed=<s> split=<train|test>`, then one
//! instance per line: `id;x1,y1;x2,y2;...` with coordinates printed as
//! shortest round-trip decimals, so `read(write(d)) == d` field for field
//! and regenerating a dataset reproduces identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ptrnet_ea_core::tsp::{Dataset, Instance, Point, Split};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: instance has n={found}, header says n={expected}")]
    MixedDimensions { line: usize, expected: usize, found: usize },
    #[error("dataset has no instances")]
    Empty,
    #[error("dataset mixes dimensions: n={expected} and n={found}")]
    MixedInput { expected: usize, found: usize },
}

fn parse_err(line: usize, message: impl Into<String>) -> DatasetIoError {
    DatasetIoError::Parse { line, message: message.into() }
}

/// Renders the dataset in `TSPSET v1` form.
pub fn render_dataset(dataset: &Dataset) -> Result<String, DatasetIoError> {
    let first = dataset.instances.first().ok_or(DatasetIoError::Empty)?;
    let n = first.len();
    for inst in &dataset.instances {
        if inst.len() != n {
            return Err(DatasetIoError::MixedInput { expected: n, found: inst.len() });
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "TSPSET v1 n={} count={} seed={} split={}",
        n,
        dataset.instances.len(),
        dataset.generator_seed,
        dataset.split
    );
    for inst in &dataset.instances {
        let _ = write!(out, "{}", inst.id());
        for p in inst.nodes() {
            let _ = write!(out, ";{},{}", p.x, p.y);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes the dataset; refuses empty or mixed-dimension input.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetIoError> {
    let body = render_dataset(dataset)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

/// Parses a `TSPSET v1` file back into a dataset.
pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetIoError> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetIoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (n, count, seed, split) = parse_header(header)?;

    let mut instances = Vec::with_capacity(count);
    for (index, line) in lines {
        let line_no = index + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(';');
        let id = fields.next().filter(|id| !id.is_empty()).ok_or_else(|| {
            parse_err(line_no, "record is missing its id field")
        })?;
        let mut nodes = Vec::new();
        for (record, field) in fields.enumerate() {
            let (x, y) = field.split_once(',').ok_or_else(|| {
                parse_err(line_no, format!("record {record}: expected `x,y`, got `{field}`"))
            })?;
            let x: f64 = x.parse().map_err(|_| {
                parse_err(line_no, format!("record {record}: bad x coordinate `{x}`"))
            })?;
            let y: f64 = y.parse().map_err(|_| {
                parse_err(line_no, format!("record {record}: bad y coordinate `{y}`"))
            })?;
            nodes.push(Point { x, y });
        }
        if nodes.len() != n {
            return Err(DatasetIoError::MixedDimensions { line: line_no, expected: n, found: nodes.len() });
        }
        let inst = Instance::new(id.to_string(), nodes)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        instances.push(inst);
    }
    if instances.is_empty() {
        return Err(DatasetIoError::Empty);
    }
    if instances.len() != count {
        return Err(parse_err(
            1,
            format!("header count={count} but file has {} instances", instances.len()),
        ));
    }
    Ok(Dataset { instances, split, generator_seed: seed })
}

fn parse_header(header: &str) -> Result<(usize, usize, u64, Split), DatasetIoError> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some("TSPSET") || parts.next() != Some("v1") {
        return Err(parse_err(1, "expected header `TSPSET v1 ...`"));
    }
    let mut n = None;
    let mut count = None;
    let mut seed = None;
    let mut split = None;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("bad header field `{part}`")))?;
        match key {
            "n" => n = Some(value.parse().map_err(|_| parse_err(1, "bad n"))?),
            "count" => count = Some(value.parse().map_err(|_| parse_err(1, "bad count"))?),
            "seed" => seed = Some(value.parse().map_err(|_| parse_err(1, "bad seed"))?),
            "split" => {
                split = Some(
                    Split::parse(value)
                        .ok_or_else(|| parse_err(1, format!("bad split `{value}`")))?,
                )
            }
            other => return Err(parse_err(1, format!("unknown header field `{other}`"))),
        }
    }
    match (n, count, seed, split) {
        (Some(n), Some(count), Some(seed), Some(split)) => Ok((n, count, seed, split)),
        _ => Err(parse_err(1, "header must carry n, count, seed, and split")),
    }
}

/// Hex sha256 of a file's bytes; reports reference datasets by content.
pub fn content_hash(path: &Path) -> Result<String, DatasetIoError> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

pub fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptrnet_ea_core::tsp::generate_dataset;

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tspset");
        let data = generate_dataset(6, 3, 42, Split::Test).unwrap();
        write_dataset(&data, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(data, back);
        // write(read(write(d))) is byte-identical
        let path2 = dir.path().join("d2.tspset");
        write_dataset(&back, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn regeneration_writes_identical_bytes() {
        let a = render_dataset(&generate_dataset(5, 10, 7, Split::Train).unwrap()).unwrap();
        let b = render_dataset(&generate_dataset(5, 10, 7, Split::Train).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mixed_dimensions_name_the_line() {
        let text = "TSPSET v1 n=2 count=2 seed=0 split=train\n\
                    a;0.1,0.2;0.3,0.4\n\
                    b;0.1,0.2;0.3,0.4;0.5,0.6\n";
        match parse_dataset(text) {
            Err(DatasetIoError::MixedDimensions { line: 3, expected: 2, found: 3 }) => {}
            other => panic!("expected mixed-dimension error, got {other:?}"),
        }
    }

    #[test]
    fn coordinate_out_of_range_is_a_parse_error() {
        let text = "TSPSET v1 n=2 count=1 seed=0 split=train\na;0.1,0.2;1.5,0.4\n";
        match parse_dataset(text) {
            Err(DatasetIoError::Parse { line: 2, message }) => {
                assert!(message.contains("outside"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_inputs_are_rejected() {
        assert!(matches!(
            parse_dataset("TSPSET v1 n=2 count=0 seed=0 split=test\n"),
            Err(DatasetIoError::Empty)
        ));
        assert!(parse_dataset("garbage\n").is_err());
        assert!(parse_dataset("TSPSET v1 n=2 count=1 split=test\na;0.1,0.2;0.3,0.4\n").is_err());
        // count mismatch
        assert!(parse_dataset("TSPSET v1 n=2 count=5 seed=0 split=test\na;0.1,0.2;0.3,0.4\n").is_err());
        // empty dataset refuses to render
        let empty = Dataset { instances: vec![], split: Split::Train, generator_seed: 0 };
        assert!(matches!(render_dataset(&empty), Err(DatasetIoError::Empty)));
    }

    #[test]
    fn content_hash_tracks_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tspset");
        write_dataset(&generate_dataset(4, 2, 1, Split::Train).unwrap(), &path).unwrap();
        let h1 = content_hash(&path).unwrap();
        assert_eq!(h1.len(), 64);
        write_dataset(&generate_dataset(4, 2, 2, Split::Train).unwrap(), &path).unwrap();
        assert_ne!(h1, content_hash(&path).unwrap());
    }
}

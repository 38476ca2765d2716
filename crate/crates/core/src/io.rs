//! Plain-text file formats: datasets, mixing measures, probe sets.
//!
//! Everything is CSV with a fixed header and floats printed at 17
//! significant digits, so files round-trip bit-exactly and diff cleanly.
//! Datasets carry columns `x1..xd`, mixing measures `w,y1..yd`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mixture::MixingMeasure;

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(token: &str, what: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse number from {token:?}")))
}

fn dataset_header(d: usize) -> String {
    let mut s = String::new();
    for j in 0..d {
        if j > 0 {
            s.push(',');
        }
        let _ = write!(s, "x{}", j + 1);
    }
    s
}

/// Serialize a dataset (header `x1,..,xd`).
pub fn dataset_to_string(data: &[Point]) -> Result<String> {
    let first = data.first().ok_or(Error::EmptyInput("dataset with no rows"))?;
    let d = first.dim();
    let mut out = dataset_header(d);
    out.push('\n');
    for p in data {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        for j in 0..d {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(p.get(j)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse a dataset CSV.
pub fn dataset_from_str(text: &str) -> Result<Vec<Point>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse("empty dataset file".into()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let d = cols.len();
    for (j, col) in cols.iter().enumerate() {
        let expected = format!("x{}", j + 1);
        if col.trim() != expected {
            return Err(Error::Parse(format!(
                "dataset header column {} is {col:?}, expected {expected:?}",
                j + 1
            )));
        }
    }
    let mut data = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != d {
            return Err(Error::Parse(format!(
                "dataset row {} has {} columns, expected {d}",
                row + 1,
                tokens.len()
            )));
        }
        let coords: Result<Vec<f64>> = tokens
            .iter()
            .map(|t| parse_f64(t, "dataset value"))
            .collect();
        data.push(Point::new(coords?)?);
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset file has no rows"));
    }
    Ok(data)
}

pub fn write_dataset(path: &Path, data: &[Point]) -> Result<()> {
    std::fs::write(path, dataset_to_string(data)?)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Point>> {
    dataset_from_str(&std::fs::read_to_string(path)?)
}

/// Serialize a mixing measure (header `w,y1,..,yd`).
pub fn mixing_to_string(mixing: &MixingMeasure) -> String {
    let d = mixing.dim();
    let mut out = String::from("w");
    for j in 0..d {
        let _ = write!(out, ",y{}", j + 1);
    }
    out.push('\n');
    for (atom, &w) in mixing.atoms().iter().zip(mixing.weights()) {
        out.push_str(&format_f64(w));
        for j in 0..d {
            out.push(',');
            out.push_str(&format_f64(atom.get(j)));
        }
        out.push('\n');
    }
    out
}

/// Parse a mixing-measure CSV.
pub fn mixing_from_str(text: &str) -> Result<MixingMeasure> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse("empty mixing file".into()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.is_empty() || cols[0].trim() != "w" {
        return Err(Error::Parse("mixing header must start with \"w\"".into()));
    }
    let d = cols.len() - 1;
    if d == 0 {
        return Err(Error::Parse("mixing header has no atom columns".into()));
    }
    for (j, col) in cols[1..].iter().enumerate() {
        let expected = format!("y{}", j + 1);
        if col.trim() != expected {
            return Err(Error::Parse(format!(
                "mixing header column {} is {col:?}, expected {expected:?}",
                j + 2
            )));
        }
    }
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != d + 1 {
            return Err(Error::Parse(format!(
                "mixing row {} has {} columns, expected {}",
                row + 1,
                tokens.len(),
                d + 1
            )));
        }
        weights.push(parse_f64(tokens[0], "mixing weight")?);
        let coords: Result<Vec<f64>> = tokens[1..]
            .iter()
            .map(|t| parse_f64(t, "atom coordinate"))
            .collect();
        atoms.push(Point::new(coords?)?);
    }
    MixingMeasure::new(atoms, weights)
}

pub fn write_mixing(path: &Path, mixing: &MixingMeasure) -> Result<()> {
    std::fs::write(path, mixing_to_string(mixing))?;
    Ok(())
}

pub fn read_mixing(path: &Path) -> Result<MixingMeasure> {
    mixing_from_str(&std::fs::read_to_string(path)?)
}

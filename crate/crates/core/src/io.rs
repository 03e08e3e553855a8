//! Plain-text formats: complex matrices as row-major CSV of "re,im" pairs,
//! and two-column density tables.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::linalg::CMat;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|e| {
                LabError::Config(format!("line {lineno}: bad number '{}': {e}", f.trim()))
            })
        })
        .collect()
}

/// Parses a square or rectangular complex matrix; each line is one row.
pub fn parse_matrix_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in data_lines(text) {
        let vals = parse_fields(line, lineno)?;
        if vals.len() % 2 != 0 {
            return Err(LabError::Config(format!(
                "line {lineno}: expected re,im pairs, got {} fields",
                vals.len()
            )));
        }
        rows.push(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    let nrows = rows.len();
    if nrows == 0 {
        return Err(LabError::Config("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LabError::Config("ragged matrix rows".into()));
    }
    Ok(CMat::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn format_matrix_csv(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// Parses "omega,J" rows.
pub fn parse_table_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in data_lines(text) {
        // tolerate a header row
        if lineno == 1 && line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue;
        }
        let vals = parse_fields(line, lineno)?;
        if vals.len() != 2 {
            return Err(LabError::Config(format!("line {lineno}: expected omega,J")));
        }
        grid.push(vals[0]);
        values.push(vals[1]);
    }
    Ok((grid, values))
}

/// Writes rows of floats under a header.
pub fn format_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Row-major nested list of [re, im] pairs, for JSON dumps.
pub fn matrix_to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LabError::Config("ragged matrix rows".into()));
    }
    Ok(CMat::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().map(|p| Complex64::new(p[0], p[1])),
    ))
}

/// Serializes non-finite floats as the strings "inf", "-inf" and "nan",
/// since JSON has no representation for them.
pub mod serde_extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float '{other}'"))),
            },
        }
    }
}

//! Headerless CSV serialization for count and real matrices.
//!
//! One line per matrix row, comma-separated. Counts are plain decimal
//! integers; reals use scientific notation with 17 significant digits so
//! `f64` values survive a write/read round-trip bit-exactly.

use super::CountMatrix;
use crate::{Error, Result, Scalar};
use nalgebra::DMatrix;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub fn write_count_csv<W: Write>(m: &CountMatrix, out: &mut W) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{}", m.get(i, j))?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_count_csv<R: BufRead>(input: R) -> Result<CountMatrix> {
    let rows = parse_rows(input, |field, line| {
        field.parse::<u64>().map_err(|_| {
            Error::InvalidInput(format!("line {line}: '{field}' is not a non-negative integer"))
        })
    })?;
    CountMatrix::from_rows(&rows)
}

pub fn write_real_csv<T: Scalar, W: Write>(m: &DMatrix<T>, out: &mut W) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{:.16e}", m[(i, j)])?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_real_csv<T: Scalar, R: BufRead>(input: R) -> Result<DMatrix<T>> {
    let rows = parse_rows(input, |field, line| {
        field
            .parse::<f64>()
            .map(T::cast_from)
            .map_err(|_| Error::InvalidInput(format!("line {line}: '{field}' is not a number")))
    })?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::InvalidInput("matrix must be at least 1x1".into()));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn parse_rows<T, R: BufRead>(
    input: R,
    parse: impl Fn(&str, usize) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<T> = trimmed
            .split(',')
            .map(|f| parse(f.trim(), idx + 1))
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected {w} fields, found {}",
                    idx + 1,
                    row.len()
                )));
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty matrix file".into()));
    }
    Ok(rows)
}

pub fn write_count_csv_path(m: &CountMatrix, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_count_csv(m, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_count_csv_path(path: &Path) -> Result<CountMatrix> {
    read_count_csv(BufReader::new(std::fs::File::open(path)?))
}

pub fn write_real_csv_path<T: Scalar>(m: &DMatrix<T>, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_real_csv(m, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_real_csv_path<T: Scalar>(path: &Path) -> Result<DMatrix<T>> {
    read_real_csv(BufReader::new(std::fs::File::open(path)?))
}

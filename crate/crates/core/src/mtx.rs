//! Matrix Market reading (coordinate or array; real or integer; general,
//! symmetric or skew-symmetric) and writing (array, general, real).
//! Everything is densified.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Refuses to densify anything larger than this many entries.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
    path: PathBuf,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.number,
            message: message.into(),
        }
    }

    fn next_raw(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            Some(line) => {
                self.number += 1;
                Ok(Some(line?))
            }
            None => Ok(None),
        }
    }

    /// Next line that is neither blank nor a comment.
    fn next_data(&mut self) -> Result<Option<String>> {
        while let Some(line) = self.next_raw()? {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('%') {
                return Ok(Some(t.to_string()));
            }
        }
        Ok(None)
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Parses Matrix Market text; `path` only labels errors.
pub fn parse_matrix_market<R: BufRead>(reader: R, path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut lines = Lines {
        inner: reader.lines(),
        number: 0,
        path: path.as_ref().to_path_buf(),
    };
    let header = lines.next_raw()?.ok_or_else(|| lines.err("empty file"))?;
    let (layout, symmetry) = parse_header(&header).map_err(|m| match m {
        HeaderError::Unsupported(what) => Error::UnsupportedFormat(what),
        HeaderError::Malformed(what) => lines.err(what),
    })?;

    let size = lines.next_data()?.ok_or_else(|| lines.err("missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| lines.err(format!("bad size line '{size}': {e}")))?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(lines.err(format!("size line needs {want} integers, got '{size}'")));
    }
    let (m, n) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && m != n {
        return Err(lines.err(format!("{symmetry:?} matrix must be square, got {m}x{n}")));
    }
    let total = m.checked_mul(n).filter(|&t| t <= MAX_DENSE_ENTRIES);
    let Some(total) = total else {
        return Err(Error::TooLarge(m.saturating_mul(n)));
    };
    let mut data = vec![0.0; total];

    // array entries occur once and are stored as is; coordinate duplicates add up
    let accumulate = layout == Layout::Coordinate;
    let put = |i: usize, j: usize, v: f64, data: &mut Vec<f64>| {
        let mut set = |idx: usize, v: f64| {
            if accumulate {
                data[idx] += v;
            } else {
                data[idx] = v;
            }
        };
        set(i * n + j, v);
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => set(j * n + i, v),
                Symmetry::SkewSymmetric => set(j * n + i, -v),
            }
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let line = lines.next_data()?.ok_or_else(|| lines.err(format!("expected {nnz} entries")))?;
                let mut it = line.split_whitespace();
                let (Some(ti), Some(tj), Some(tv), None) = (it.next(), it.next(), it.next(), it.next()) else {
                    return Err(lines.err(format!("expected 'row col value', got '{line}'")));
                };
                let i: usize = ti.parse().map_err(|_| lines.err(format!("bad row index '{ti}'")))?;
                let j: usize = tj.parse().map_err(|_| lines.err(format!("bad column index '{tj}'")))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(lines.err(format!("entry ({i}, {j}) outside {m}x{n}")));
                }
                let (i, j) = (i - 1, j - 1);
                check_triangle(symmetry, i, j).map_err(|msg| lines.err(msg))?;
                let v = parse_value(tv).map_err(|msg| lines.err(msg))?;
                put(i, j, v, &mut data);
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle only
            for j in 0..n {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                for i in start..m {
                    let line = lines.next_data()?.ok_or_else(|| lines.err("too few array entries"))?;
                    let mut it = line.split_whitespace();
                    let (Some(tv), None) = (it.next(), it.next()) else {
                        return Err(lines.err(format!("expected one value per line, got '{line}'")));
                    };
                    let v = parse_value(tv).map_err(|msg| lines.err(msg))?;
                    put(i, j, v, &mut data);
                }
            }
        }
    }
    if let Some(extra) = lines.next_data()? {
        return Err(lines.err(format!("unexpected trailing data '{extra}'")));
    }
    DenseMatrix::new(m, n, data)
}

enum HeaderError {
    Unsupported(String),
    Malformed(String),
}

fn parse_header(line: &str) -> std::result::Result<(Layout, Symmetry), HeaderError> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(HeaderError::Malformed(format!("bad header '{line}'")));
    }
    if tokens[1] != "matrix" {
        return Err(HeaderError::Unsupported(format!("object '{}'", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(HeaderError::Malformed(format!("unknown format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" | "pattern" => return Err(HeaderError::Unsupported(format!("field '{}'", tokens[3]))),
        other => return Err(HeaderError::Malformed(format!("unknown field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => return Err(HeaderError::Unsupported("symmetry 'hermitian'".into())),
        other => return Err(HeaderError::Malformed(format!("unknown symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn check_triangle(symmetry: Symmetry, i: usize, j: usize) -> std::result::Result<(), String> {
    match symmetry {
        Symmetry::General => Ok(()),
        Symmetry::Symmetric if i >= j => Ok(()),
        Symmetry::SkewSymmetric if i > j => Ok(()),
        _ => Err(format!("entry ({}, {}) outside the stored lower triangle", i + 1, j + 1)),
    }
}

fn parse_value(t: &str) -> std::result::Result<f64, String> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite value '{t}'")),
        Err(_) => Err(format!("bad value '{t}'")),
    }
}

/// Writes `a` as a general real array. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market(a: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(a, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to<W: Write>(a: &DenseMatrix, w: &mut W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:e}", a.get(i, j))?;
        }
    }
    Ok(())
}

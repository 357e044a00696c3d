//! Dataset file formats.
//!
//! Three interchangeable formats:
//!
//! - `dense-binary`: magic `NNDC`, `u32` version (= 1), `u64` n, `u64` d,
//!   then `n * d` little-endian `f32` values, row-major. Header integers are
//!   little-endian. Round-trips bit-exactly.
//! - `sparse-text`: first line `n d`, then `n` lines of whitespace-separated
//!   `index:value` pairs with 0-based strictly increasing indices.
//! - `dense-csv`: one point per line, `d` comma-separated decimal values.
//!
//! Text values are printed with enough digits to round-trip `f32` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Dataset, RowRef};
use crate::error::Error;
use crate::Result;

const MAGIC: &[u8; 4] = b"NNDC";
const VERSION: u32 = 1;

/// On-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    DenseBinary,
    SparseText,
    DenseCsv,
}

impl DataFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataFormat::DenseBinary => "dense-binary",
            DataFormat::SparseText => "sparse-text",
            DataFormat::DenseCsv => "dense-csv",
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-binary" => Ok(DataFormat::DenseBinary),
            "sparse-text" => Ok(DataFormat::SparseText),
            "dense-csv" => Ok(DataFormat::DenseCsv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Read a dataset from `path` in the given format.
pub fn read_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    match format {
        DataFormat::DenseBinary => read_dense_binary(path),
        DataFormat::SparseText => read_sparse_text(path),
        DataFormat::DenseCsv => read_dense_csv(path),
    }
}

/// Write a dataset to `path` in the given format.
///
/// Sparse datasets are densified for the dense formats; dense datasets have
/// their zeros dropped for `sparse-text`.
pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DataFormat::DenseBinary => {
            w.write_all(MAGIC)?;
            w.write_all(&VERSION.to_le_bytes())?;
            w.write_all(&(data.n() as u64).to_le_bytes())?;
            w.write_all(&(data.dim() as u64).to_le_bytes())?;
            let mut row = vec![0.0f64; data.dim()];
            for i in 0..data.n() {
                data.fill_row_f64(i, &mut row);
                for &v in &row {
                    w.write_all(&(v as f32).to_le_bytes())?;
                }
            }
        }
        DataFormat::SparseText => {
            writeln!(w, "{} {}", data.n(), data.dim())?;
            for i in 0..data.n() {
                let mut first = true;
                let mut emit = |j: u32, v: f32, w: &mut BufWriter<File>| -> Result<()> {
                    if !first {
                        write!(w, " ")?;
                    }
                    first = false;
                    write!(w, "{j}:{v}")?;
                    Ok(())
                };
                match data.row(i) {
                    RowRef::Sparse(pairs) => {
                        for &(j, v) in pairs {
                            emit(j, v, &mut w)?;
                        }
                    }
                    RowRef::Dense(vals) => {
                        for (j, &v) in vals.iter().enumerate() {
                            if v != 0.0 {
                                emit(j as u32, v, &mut w)?;
                            }
                        }
                    }
                }
                writeln!(w)?;
            }
        }
        DataFormat::DenseCsv => {
            let mut row = vec![0.0f64; data.dim()];
            for i in 0..data.n() {
                data.fill_row_f64(i, &mut row);
                for (j, &v) in row.iter().enumerate() {
                    if j > 0 {
                        write!(w, ",")?;
                    }
                    write!(w, "{}", v as f32)?;
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn bin_err(path: &Path, kind: impl Into<String>, offset: u64) -> Error {
    Error::MalformedBinary {
        path: path.to_path_buf(),
        kind: kind.into(),
        offset,
    }
}

fn txt_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::MalformedText {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_dense_binary(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|_| bin_err(path, "truncated header (need 24 bytes)", 0))?;
    if &header[0..4] != MAGIC {
        return Err(bin_err(path, "bad magic (expected NNDC)", 0));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bin_err(path, format!("unsupported version {version}"), 4));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(header[16..24].try_into().unwrap());
    if n == 0 || d == 0 {
        return Err(bin_err(path, format!("empty shape {n} x {d}"), 8));
    }
    let count = (n as usize)
        .checked_mul(d as usize)
        .ok_or_else(|| bin_err(path, format!("shape {n} x {d} overflows"), 8))?;
    let mut payload = Vec::with_capacity(count * 4);
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 4 {
        return Err(bin_err(
            path,
            format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                count * 4
            ),
            24 + payload.len().min(count * 4) as u64,
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::dense(d as usize, values)
}

fn read_sparse_text(path: &Path) -> Result<Dataset> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| txt_err(path, 1, "empty file"))?;
    let header = header?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| txt_err(path, 1, "header must be 'n d'"))?;
    let d: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| txt_err(path, 1, "header must be 'n d'"))?;
    if parts.next().is_some() {
        return Err(txt_err(path, 1, "header has trailing tokens"));
    }
    if n == 0 || d == 0 {
        return Err(txt_err(path, 1, format!("empty shape {n} x {d}")));
    }
    let mut rows: Vec<Vec<(u32, f32)>> = Vec::with_capacity(n);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if rows.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(txt_err(
                path,
                lineno,
                format!("more rows than the declared n = {n}"),
            ));
        }
        let mut row: Vec<(u32, f32)> = Vec::new();
        for tok in line.split_whitespace() {
            let (js, vs) = tok
                .split_once(':')
                .ok_or_else(|| txt_err(path, lineno, format!("expected index:value, got {tok:?}")))?;
            let j: u32 = js
                .parse()
                .map_err(|_| txt_err(path, lineno, format!("bad index {js:?}")))?;
            let v: f32 = vs
                .parse()
                .map_err(|_| txt_err(path, lineno, format!("bad value {vs:?}")))?;
            if j as usize >= d {
                return Err(txt_err(
                    path,
                    lineno,
                    format!("index {j} out of range for d = {d}"),
                ));
            }
            if let Some(&(prev, _)) = row.last() {
                if j <= prev {
                    return Err(txt_err(
                        path,
                        lineno,
                        format!("indices must be strictly increasing ({prev} then {j})"),
                    ));
                }
            }
            row.push((j, v));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(txt_err(
            path,
            rows.len() + 1,
            format!("file ends after {} rows, header declares n = {n}", rows.len()),
        ));
    }
    Dataset::sparse(d, rows)
}

fn read_dense_csv(path: &Path) -> Result<Dataset> {
    let r = BufReader::new(File::open(path)?);
    let mut values: Vec<f32> = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for tok in line.split(',') {
            let v: f32 = tok
                .trim()
                .parse()
                .map_err(|_| txt_err(path, lineno, format!("bad value {tok:?}")))?;
            values.push(v);
            count += 1;
        }
        if n == 0 {
            d = count;
        } else if count != d {
            return Err(txt_err(
                path,
                lineno,
                format!("row has {count} values, first row had {d}"),
            ));
        }
        n += 1;
    }
    if n == 0 {
        return Err(txt_err(path, 1, "empty file"));
    }
    Dataset::dense(d, values)
}

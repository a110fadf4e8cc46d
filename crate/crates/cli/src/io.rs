//! Matrix files.
//!
//! Binary container, little endian:
//!
//! | bytes | content                          |
//! |-------|----------------------------------|
//! | 4     | magic `L4MX`                     |
//! | 4     | format version (`u32`, 1)        |
//! | 8     | rows (`u64`)                     |
//! | 8     | cols (`u64`)                     |
//! | 8·r·c | entries as `f64`, column-major   |
//!
//! Text form: a header line `# rows,cols`, then one comma-separated matrix
//! row per line. Values are printed in shortest round-trip form, so a CSV
//! round trip is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"L4MX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` selects text; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Binary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Binary => "l4mx",
            MatrixFormat::Csv => "csv",
        }
    }
}

pub fn encode_binary(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<DMatrix<f64>, String> {
    if bytes.len() < HEADER_LEN {
        return Err("truncated header".into());
    }
    if &bytes[..4] != MAGIC {
        return Err("not an L4MX container".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported container version {version}"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let len = rows
        .checked_mul(cols)
        .and_then(|l| usize::try_from(l).ok())
        .ok_or("matrix size overflows")?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != len * 8 {
        return Err(format!("expected {} data bytes, found {}", len * 8, body.len()));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_iterator(rows as usize, cols as usize, data))
}

pub fn encode_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("# {},{}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<DMatrix<f64>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let dims = header.strip_prefix('#').ok_or("missing `# rows,cols` header")?;
    let (r, c) = dims.trim().split_once(',').ok_or("malformed header")?;
    let rows: usize = r.trim().parse().map_err(|_| "malformed row count")?;
    let cols: usize = c.trim().parse().map_err(|_| "malformed column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    if cols == 0 {
        // Each row is an empty line.
        let seen = lines.count();
        if seen != rows {
            return Err(format!("expected {rows} rows, found {seen}"));
        }
        return Ok(DMatrix::zeros(rows, 0));
    }
    let mut seen = 0;
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| format!("line {}: bad number {tok:?}", k + 2))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(format!("line {}: expected {cols} values", k + 2));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(format!("expected {rows} rows, found {seen}"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    let bytes = match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => encode_binary(m),
        MatrixFormat::Csv => encode_csv(m).into_bytes(),
    };
    write_bytes(path, &bytes)
}

pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let decoded = match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => decode_binary(&bytes),
        MatrixFormat::Csv => std::str::from_utf8(&bytes)
            .map_err(|_| "not UTF-8".to_string())
            .and_then(decode_csv),
    };
    decoded.map_err(|m| CliError::format(path, m))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

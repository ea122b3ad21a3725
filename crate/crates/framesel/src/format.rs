//! FEMB binary and CSV embedding files.
//!
//! FEMB layout, all little-endian: `b"FEMB"`, `u32` version (1), `u32` rows,
//! `u32` dim, then `rows·dim` `f32` values row-major.
//!
//! CSV: a `dim=<d>` header line, then one comma-separated row per line.
//! Values are parsed as `f32`, so both formats load to identical matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use framesel_core::Matrix;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FEMB";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Row-major `f32` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl Embeddings {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows.checked_mul(dim) != Some(data.len()) {
            return Err(Error::Format(format!(
                "expected {rows}x{dim} = {} values, got {}",
                rows.saturating_mul(dim),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at row {}, column {}",
                pos / dim.max(1),
                pos % dim.max(1)
            )));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Upcast to `f64`.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.rows, self.dim, self.data.iter().map(|&v| f64::from(v)).collect())
            .expect("shape checked on construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Femb,
    Csv,
}

impl FileFormat {
    /// `.csv` selects CSV; anything else is FEMB.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Femb,
        }
    }
}

pub fn encode_femb(e: &Embeddings) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + e.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(e.rows as u32).to_le_bytes());
    out.extend_from_slice(&(e.dim as u32).to_le_bytes());
    for v in &e.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_femb(bytes: &[u8]) -> Result<Embeddings> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic (expected FEMB)".into()));
    }
    let version = read_u32(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = read_u32(bytes, 8) as usize;
    let dim = read_u32(bytes, 12) as usize;
    let expected = rows
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format("header size overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Format(format!("truncated payload: {} of {expected} bytes", payload.len())));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!("{} trailing bytes after payload", payload.len() - expected)));
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Embeddings::new(rows, dim, data)
}

/// Shortest round-trip decimal for every value, so CSV reloads bit-exactly.
pub fn format_csv(e: &Embeddings) -> String {
    let mut out = format!("dim={}\n", e.dim);
    for i in 0..e.rows {
        for (j, v) in e.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Embeddings> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Format("empty CSV file".into()))?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("bad CSV header `{}` (expected dim=<d>)", header.trim())))?;
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines {
        let before = data.len();
        for field in line.split(',') {
            let v: f32 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: cannot parse `{}`", lineno + 1, field.trim())))?;
            if !v.is_finite() {
                return Err(Error::Format(format!("line {}: non-finite value", lineno + 1)));
            }
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(Error::Format(format!("line {}: {} values, expected {dim}", lineno + 1, data.len() - before)));
        }
        rows += 1;
    }
    Embeddings::new(rows, dim, data)
}

/// Reads either format; files starting with the FEMB magic are binary.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Embeddings> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parsed = if bytes.starts_with(MAGIC) {
        decode_femb(&bytes)
    } else if FileFormat::from_path(path) == FileFormat::Femb && !bytes.is_empty() && !bytes.starts_with(b"dim=") {
        Err(Error::Format("bad magic (expected FEMB)".into()))
    } else {
        std::str::from_utf8(&bytes).map_err(|_| Error::Format("CSV file is not valid UTF-8".into())).and_then(parse_csv)
    };
    parsed.map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_embeddings(path: impl AsRef<Path>, e: &Embeddings, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        FileFormat::Femb => encode_femb(e),
        FileFormat::Csv => format_csv(e).into_bytes(),
    };
    fs::write(path, bytes).map_err(|err| Error::io(path, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_binary() {
        let e = Embeddings::new(1, 2, vec![1.0, 0.0]).unwrap();
        let bytes = encode_femb(&e);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..4], b"FEMB");
        assert_eq!(decode_femb(&bytes).unwrap(), e);
    }

    #[test]
    fn csv_matches_binary() {
        let csv = parse_csv("dim=2\n1.0,0.0\n").unwrap();
        assert_eq!(csv, Embeddings::new(1, 2, vec![1.0, 0.0]).unwrap());
    }

    #[test]
    fn header_errors() {
        let e = Embeddings::new(1, 2, vec![1.0, 0.0]).unwrap();
        let mut bytes = encode_femb(&e);
        bytes[0] = b'X';
        assert!(decode_femb(&bytes).is_err());
        let mut bytes = encode_femb(&e);
        bytes[4] = 2;
        assert!(decode_femb(&bytes).is_err());
        let bytes = encode_femb(&e);
        assert!(decode_femb(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_femb(&bytes[..10]).is_err());
    }

    #[test]
    fn nan_rejected() {
        let e = Embeddings { rows: 1, dim: 2, data: vec![f32::NAN, 0.0] };
        assert!(decode_femb(&encode_femb(&e)).is_err());
        assert!(parse_csv("dim=2\nNaN,0\n").is_err());
        assert!(parse_csv("dim=2\ninf,0\n").is_err());
    }

    #[test]
    fn csv_shape_errors() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("rows=2\n1,2\n").is_err());
        assert!(parse_csv("dim=2\n1,2,3\n").is_err());
        assert!(parse_csv("dim=2\n1,x\n").is_err());
    }
}
